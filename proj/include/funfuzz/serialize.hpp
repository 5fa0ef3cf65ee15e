#pragma once

// JSON persistence for the core domain types. Collections with unordered
// in-memory representation (coverage sets) serialize in sorted order so the
// same state always produces the same bytes.

#include <json.hpp>

#include "funfuzz/config.hpp"
#include "funfuzz/model.hpp"

namespace funfuzz {

inline nlohmann::json to_json(const CoverageSet& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (auto key : s.sorted_keys()) {
    auto p = CoverageSet::unpack(key);
    arr.push_back({p.unit_id, p.line});
  }
  return arr;
}

inline CoverageSet coverage_from_json(const nlohmann::json& j) {
  CoverageSet s;
  for (const auto& e : j) s.insert(e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>());
  return s;
}

inline nlohmann::json to_json(const PromptState& p) {
  nlohmann::json j{{"base_prompt", p.base_prompt},
                   {"seed_instruction", p.seed_instruction},
                   {"transformation", to_string(p.transformation)}};
  if (p.selected_example) j["selected_example"] = *p.selected_example;
  return j;
}

inline PromptState prompt_state_from_json(const nlohmann::json& j) {
  PromptState p;
  p.base_prompt = j.at("base_prompt").get<std::string>();
  p.seed_instruction = j.at("seed_instruction").get<std::string>();
  p.transformation = strategy_from_string(j.at("transformation").get<std::string>());
  if (j.contains("selected_example")) p.selected_example = j.at("selected_example").get<std::string>();
  return p;
}

inline nlohmann::json to_json(const CandidateProgram& c) {
  nlohmann::json j{{"id", c.id},
                   {"source", c.source},
                   {"origin", to_string(c.origin)},
                   {"strategy", to_string(c.strategy)},
                   {"island_id", c.island_id},
                   {"created_at", c.created_at}};
  if (c.parent_id) j["parent_id"] = *c.parent_id;
  return j;
}

inline CandidateProgram candidate_from_json(const nlohmann::json& j) {
  CandidateProgram c;
  c.id = j.at("id").get<Id>();
  c.source = j.at("source").get<std::string>();
  c.origin = origin_from_string(j.at("origin").get<std::string>());
  c.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  c.island_id = j.at("island_id").get<std::uint32_t>();
  c.created_at = j.at("created_at").get<double>();
  if (j.contains("parent_id")) c.parent_id = j.at("parent_id").get<Id>();
  return c;
}

inline nlohmann::json to_json(const FitnessRecord& f) {
  return {{"raw_marginal_coverage", f.raw_marginal_coverage},
          {"score", f.score},
          {"times_used_as_parent", f.times_used_as_parent},
          {"zero_contribution", f.zero_contribution},
          {"compile_time", f.compile_time}};
}

inline FitnessRecord fitness_from_json(const nlohmann::json& j) {
  FitnessRecord f;
  f.raw_marginal_coverage = j.at("raw_marginal_coverage").get<std::uint64_t>();
  f.score = j.at("score").get<double>();
  f.times_used_as_parent = j.at("times_used_as_parent").get<std::uint64_t>();
  f.zero_contribution = j.at("zero_contribution").get<bool>();
  f.compile_time = j.at("compile_time").get<double>();
  return f;
}

inline nlohmann::json to_json(const IslandStats& s) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [t, size] : s.frontier_history) hist.push_back({t, size});
  return {{"compile_time_mean", s.compile_time_mean},
          {"programs_evaluated", s.programs_evaluated},
          {"migrant_reevals", s.migrant_reevals},
          {"valid_programs", s.valid_programs},
          {"potential_bugs", s.potential_bugs},
          {"provider_time_total", s.provider_time_total},
          {"frontier_history", hist}};
}

inline IslandStats island_stats_from_json(const nlohmann::json& j) {
  IslandStats s;
  s.compile_time_mean = j.at("compile_time_mean").get<double>();
  s.programs_evaluated = j.at("programs_evaluated").get<std::uint64_t>();
  s.migrant_reevals = j.at("migrant_reevals").get<std::uint64_t>();
  s.valid_programs = j.at("valid_programs").get<std::uint64_t>();
  s.potential_bugs = j.at("potential_bugs").get<std::uint64_t>();
  s.provider_time_total = j.at("provider_time_total").get<double>();
  for (const auto& e : j.at("frontier_history"))
    s.frontier_history.emplace_back(e.at(0).get<double>(), e.at(1).get<std::uint64_t>());
  return s;
}

inline nlohmann::json to_json(const Island& i) {
  nlohmann::json pop = nlohmann::json::array();
  for (const auto& m : i.population)
    pop.push_back({{"program", to_json(m.program)}, {"fitness", to_json(m.fitness)}});
  return {{"id", i.id},
          {"population", pop},
          {"frontier", to_json(i.frontier)},
          {"prompt_state", to_json(i.prompt_state)},
          {"stats", to_json(i.stats)}};
}

inline Island island_from_json(const nlohmann::json& j) {
  Island i;
  i.id = j.at("id").get<std::uint32_t>();
  for (const auto& m : j.at("population"))
    i.population.push_back(
        {candidate_from_json(m.at("program")), fitness_from_json(m.at("fitness"))});
  i.frontier = coverage_from_json(j.at("frontier"));
  i.prompt_state = prompt_state_from_json(j.at("prompt_state"));
  i.stats = island_stats_from_json(j.at("stats"));
  return i;
}

}  // namespace funfuzz
