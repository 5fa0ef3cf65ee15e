#pragma once

// Core domain types shared by every stage: candidate programs, fitness
// records, islands and the campaign clock. Everything here is a plain value
// type; Island is mutated only under its owner's lock in the evolution loop.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "funfuzz/coverage.hpp"

namespace funfuzz {

using Id = std::uint64_t;

enum class Origin { generated, migrated, warm_start_corpus, seed };
enum class Strategy { generate_new, mutate_existing, semantic_equiv };

inline const char* to_string(Origin o) {
  switch (o) {
    case Origin::generated: return "generated";
    case Origin::migrated: return "migrated";
    case Origin::warm_start_corpus: return "warm-start-corpus";
    case Origin::seed: return "seed";
  }
  return "generated";
}

inline Origin origin_from_string(const std::string& s) {
  if (s == "generated") return Origin::generated;
  if (s == "migrated") return Origin::migrated;
  if (s == "warm-start-corpus") return Origin::warm_start_corpus;
  if (s == "seed") return Origin::seed;
  throw std::invalid_argument("unknown origin: " + s);
}

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::generate_new: return "generate-new";
    case Strategy::mutate_existing: return "mutate-existing";
    case Strategy::semantic_equiv: return "semantic-equiv";
  }
  return "generate-new";
}

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "generate-new") return Strategy::generate_new;
  if (s == "mutate-existing") return Strategy::mutate_existing;
  if (s == "semantic-equiv") return Strategy::semantic_equiv;
  throw std::invalid_argument("unknown strategy: " + s);
}

// Prompt assembly state. The base prompt and seed instruction persist for an
// island's lifetime; the example and transformation are set per iteration.
struct PromptState {
  std::string base_prompt;
  std::string seed_instruction;
  std::optional<std::string> selected_example;
  Strategy transformation = Strategy::generate_new;
  bool operator==(const PromptState&) const = default;
};

struct CandidateProgram {
  Id id = 0;
  std::string source;
  Origin origin = Origin::generated;
  std::optional<Id> parent_id;
  Strategy strategy = Strategy::generate_new;
  std::uint32_t island_id = 0;
  double created_at = 0.0;  // campaign-clock seconds, monotone
  bool operator==(const CandidateProgram&) const = default;
};

struct FitnessRecord {
  std::uint64_t raw_marginal_coverage = 0;
  double score = 0.0;
  std::uint64_t times_used_as_parent = 0;
  bool zero_contribution = false;
  double compile_time = 0.0;
  bool operator==(const FitnessRecord&) const = default;
};

struct PopulationMember {
  CandidateProgram program;
  FitnessRecord fitness;
  bool operator==(const PopulationMember&) const = default;
};

struct IslandStats {
  double compile_time_mean = 0.0;  // running mean over evaluated programs
  std::uint64_t programs_evaluated = 0;
  std::uint64_t migrant_reevals = 0;
  std::uint64_t valid_programs = 0;
  std::uint64_t potential_bugs = 0;
  double provider_time_total = 0.0;  // wall seconds spent in generation calls
  // (campaign time, frontier size) samples, appended as evaluation proceeds.
  std::vector<std::pair<double, std::uint64_t>> frontier_history;
  bool operator==(const IslandStats&) const = default;

  void record_compile(double t) {
    ++programs_evaluated;
    compile_time_mean += (t - compile_time_mean) / double(programs_evaluated);
  }
};

struct Island {
  std::uint32_t id = 0;
  std::vector<PopulationMember> population;
  CoverageSet frontier;
  PromptState prompt_state;
  IslandStats stats;
  bool operator==(const Island&) const = default;
};

inline constexpr std::size_t kDefaultIslandCapacity = 512;

// Inserts under the capacity bound, evicting the lowest-score member on
// overflow; ties evict the oldest (then the smallest id, for determinism).
inline void insert_with_capacity(Island& island, PopulationMember member,
                                 std::size_t capacity = kDefaultIslandCapacity) {
  island.population.push_back(std::move(member));
  if (island.population.size() <= capacity) return;
  auto worst = std::min_element(
      island.population.begin(), island.population.end(),
      [](const PopulationMember& a, const PopulationMember& b) {
        if (a.fitness.score != b.fitness.score) return a.fitness.score < b.fitness.score;
        if (a.program.created_at != b.program.created_at)
          return a.program.created_at < b.program.created_at;
        return a.program.id < b.program.id;
      });
  island.population.erase(worst);
}

// Campaign clock. Monotone by contract; the simulated implementation lets
// tests compress the hours-scale migration period into seconds.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
};

class SimulatedClock final : public Clock {
 public:
  double now() const override { return t_; }
  void advance(double dt) {
    if (dt > 0) t_ += dt;
  }

 private:
  double t_ = 0.0;
};

class SteadyClock final : public Clock {
 public:
  SteadyClock() : start_(std::chrono::steady_clock::now()) {}
  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace funfuzz
