#pragma once

// Campaign configuration: one JSON file with nested sections; every tunable
// the pipeline honors has a named key here with its stock default. Loading is
// strict: unknown keys and type mismatches fail with the offending key path.

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace funfuzz {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class UsedPolicy { none, remove, penalize };
enum class CoverageMode { per_island, global };
enum class ParentSelection { softmax, random };
enum class MigrationMode { soft, full_reset, none };
enum class ProviderKind { mock, http };
enum class SutKind { simulated, process };

inline const char* to_string(UsedPolicy p) {
  switch (p) {
    case UsedPolicy::none: return "none";
    case UsedPolicy::remove: return "remove";
    case UsedPolicy::penalize: return "penalize";
  }
  return "none";
}

inline const char* to_string(MigrationMode m) {
  switch (m) {
    case MigrationMode::soft: return "soft";
    case MigrationMode::full_reset: return "full-reset";
    case MigrationMode::none: return "none";
  }
  return "soft";
}

struct ScoringConfig {
  bool use_score_scaling = false;
  bool use_time_reward = false;
  bool use_fail_reward = false;
  UsedPolicy used_policy = UsedPolicy::none;
  CoverageMode coverage_mode = CoverageMode::per_island;
  bool keep_zero_contribution = false;
  bool use_redundancy_filter = false;
  ParentSelection selection = ParentSelection::softmax;

  double c_max = 60000;
  std::array<double, 3> tier_fractions{0.40, 0.60, 0.80};
  std::array<double, 3> tier_multipliers{5, 35, 100};
  double time_constant = 8.0;
  double fail_reward = 1.0;
  double similarity_discard = 0.95;
  double similarity_penalty_low = 0.80;
  std::size_t levenshtein_prefix = 2000;
  std::size_t recent_k = 32;
  double temperature_start = 1.0;
  double temperature_end = 0.2;

  bool operator==(const ScoringConfig&) const = default;
};

struct MigrationPolicy {
  double period_seconds = 10800;  // every 3 hours at paper scale
  double strong_fraction = 0.51;
  double prune_fraction = 0.30;
  double share_fraction = 0.10;
  double elite_fraction = 0.20;
  MigrationMode mode = MigrationMode::soft;
  bool operator==(const MigrationPolicy&) const = default;
};

struct DistillationConfig {
  std::size_t candidates_low_temp = 1;
  std::size_t candidates_high_temp = 3;
  std::size_t programs_per_candidate = 90;
  std::size_t programs_per_hybrid = 60;
  double low_temperature = 0.0;
  double high_temperature = 1.0;
  std::string load_from;  // reuse a saved initialization when non-empty
  bool operator==(const DistillationConfig&) const = default;
};

struct HttpProviderConfig {
  std::string url_env = "FUNFUZZ_PROVIDER_URL";
  std::string key_env = "FUNFUZZ_PROVIDER_KEY";
  std::string model;
  int retries = 3;
  int backoff_ms = 250;
  bool operator==(const HttpProviderConfig&) const = default;
};

struct MockProviderConfig {
  double construct_bias = 0.8;       // targeted-construct insertion rate
  double fence_probability = 0.08;   // emit the program inside a code fence
  double multi_program_probability = 0.04;
  double bad_include_probability = 0.05;
  double missing_include_probability = 0.08;
  bool operator==(const MockProviderConfig&) const = default;
};

struct GenerationConfig {
  ProviderKind provider = ProviderKind::mock;
  std::size_t samples_per_call = 30;
  double temperature = 1.0;
  double top_p = 1.0;
  std::size_t max_tokens = 512;
  bool shared_instruction = false;  // give every island the first instruction
  DistillationConfig distillation;
  HttpProviderConfig http;
  MockProviderConfig mock;
  bool operator==(const GenerationConfig&) const = default;
};

struct SimulatedSutConfig {
  double validity_rate = 0.5;
  double bug_probability = 0.25;  // applied only when a trigger pair co-occurs
  double hang_probability = 0.0;
  bool enable_bugs = true;
  std::uint32_t clusters = 2000;
  std::uint32_t lines_per_cluster = 50;
  std::uint32_t bug_pairs = 12;
  bool operator==(const SimulatedSutConfig&) const = default;
};

struct ProcessSutConfig {
  std::string compile;   // template; placeholders {input} {output} {flags} {scratch}
  std::string coverage;  // template; placeholders {input} {report} {scratch}
  std::string reset;     // optional counter-reset template, run pre-compile
  std::string scratch_root;  // "" = system temp dir
  std::string source_extension = ".c";
  std::vector<std::string> flag_sets{""};
  bool operator==(const ProcessSutConfig&) const = default;
};

inline std::vector<std::string> default_failure_markers() {
  return {"internal compiler error", "Assertion", "PLEASE submit a bug report",
          "Segmentation fault", "UNREACHABLE executed"};
}

struct SutConfig {
  SutKind kind = SutKind::simulated;
  double timeout_seconds = 30.0;
  std::vector<std::string> failure_markers = default_failure_markers();
  SimulatedSutConfig simulated;
  ProcessSutConfig process;
  bool operator==(const SutConfig&) const = default;
};

struct WarmStartConfig {
  std::string corpus_dir;
  double mix_probability = 0.5;
  bool operator==(const WarmStartConfig&) const = default;
};

inline std::vector<std::pair<std::string, std::string>> default_header_hints() {
  return {
      {"printf", "stdio.h"},  {"scanf", "stdio.h"},   {"puts", "stdio.h"},
      {"malloc", "stdlib.h"}, {"free", "stdlib.h"},   {"exit", "stdlib.h"},
      {"rand", "stdlib.h"},   {"strlen", "string.h"}, {"strcpy", "string.h"},
      {"memcpy", "string.h"}, {"sqrt", "math.h"},     {"pow", "math.h"},
      {"fabs", "math.h"},     {"INT_MAX", "limits.h"},
      {"std::cout", "iostream"}, {"std::vector", "vector"}, {"std::string", "string"},
  };
}

inline std::map<std::string, std::string> default_detectors() {
  return {{"typedef", "typedef"},          {"union", "union"},
          {"goto", "goto"},                {"std::variant", "std::variant"},
          {"std::apply", "std::apply"},    {"std::expected", "std::expected"}};
}

struct CampaignConfig {
  std::size_t n_islands = 5;
  std::uint64_t rng_seed = 1;
  std::uint64_t budget_programs = 30000;  // 0 = unbounded
  double budget_seconds = 0;              // 0 = unbounded
  std::size_t workers = 0;                // 0 = one per island
  std::size_t island_capacity = 512;
  double timeseries_interval_seconds = 10.0;
  std::string docs;       // inline documentation excerpt for distillation
  std::string docs_path;  // or a file; wins over `docs` when set
  std::vector<std::string> targeted_features;
  WarmStartConfig warm_start;
  MigrationPolicy migration;
  ScoringConfig scoring;
  GenerationConfig generation;
  SutConfig sut;
  std::vector<std::pair<std::string, std::string>> header_hints = default_header_hints();
  std::map<std::string, std::string> detectors = default_detectors();
  bool operator==(const CampaignConfig&) const = default;
};

// ---------------------------------------------------------------------------
// JSON binding

namespace cfgdetail {

using nlohmann::json;

inline void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) { ok = true; break; }
    if (!ok) throw ConfigError(path + "." + it.key() + ": unknown key");
  }
}

template <typename T>
inline void read_number(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  out = v.get<T>();
}

inline void read_bool(const json& j, const char* key, bool& out, const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
  out = v.get<bool>();
}

inline void read_string(const json& j, const char* key, std::string& out, const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  out = v.get<std::string>();
}

inline void read_string_list(const json& j, const char* key, std::vector<std::string>& out,
                             const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(path + "." + key + ": expected an array of strings");
  out.clear();
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError(path + "." + key + ": expected an array of strings");
    out.push_back(e.get<std::string>());
  }
}

template <std::size_t N>
inline void read_triple(const json& j, const char* key, std::array<double, N>& out,
                        const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != N)
    throw ConfigError(path + "." + key + ": expected an array of " + std::to_string(N) + " numbers");
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) throw ConfigError(path + "." + key + ": expected numbers");
    out[i] = v[i].get<double>();
  }
}

}  // namespace cfgdetail

inline void load_scoring(const nlohmann::json& j, ScoringConfig& s, const std::string& path) {
  using namespace cfgdetail;
  expect_object(j, path);
  check_keys(j, path,
             {"score", "+Score", "time", "+Time", "fail", "+Fail", "used", "+Used", "global",
              "+Global", "zero", "+Zero", "filter", "+Filter", "selection", "c_max",
              "tier_fractions", "tier_multipliers", "time_constant", "fail_reward",
              "similarity_discard", "similarity_penalty_low", "levenshtein_prefix", "recent_k",
              "temperature_start", "temperature_end"});
  // Toggle keys mirror the ablation row names; the "+Name" spellings are
  // accepted as aliases so a variant is a one-flag edit of the config.
  read_bool(j, "score", s.use_score_scaling, path);
  read_bool(j, "+Score", s.use_score_scaling, path);
  read_bool(j, "time", s.use_time_reward, path);
  read_bool(j, "+Time", s.use_time_reward, path);
  read_bool(j, "fail", s.use_fail_reward, path);
  read_bool(j, "+Fail", s.use_fail_reward, path);
  read_bool(j, "zero", s.keep_zero_contribution, path);
  read_bool(j, "+Zero", s.keep_zero_contribution, path);
  read_bool(j, "filter", s.use_redundancy_filter, path);
  read_bool(j, "+Filter", s.use_redundancy_filter, path);

  bool global = false;
  bool have_global = j.contains("global") || j.contains("+Global");
  read_bool(j, "global", global, path);
  read_bool(j, "+Global", global, path);
  if (have_global) s.coverage_mode = global ? CoverageMode::global : CoverageMode::per_island;

  if (j.contains("used") || j.contains("+Used")) {
    const auto& v = j.contains("used") ? j.at("used") : j.at("+Used");
    if (v.is_boolean()) {
      s.used_policy = v.get<bool>() ? UsedPolicy::penalize : UsedPolicy::none;
    } else if (v.is_string()) {
      std::string u = v.get<std::string>();
      if (u == "none") s.used_policy = UsedPolicy::none;
      else if (u == "remove") s.used_policy = UsedPolicy::remove;
      else if (u == "penalize") s.used_policy = UsedPolicy::penalize;
      else throw ConfigError(path + ".used: expected none|remove|penalize, got \"" + u + "\"");
    } else {
      throw ConfigError(path + ".used: expected a boolean or none|remove|penalize");
    }
  }

  if (j.contains("selection")) {
    std::string sel;
    read_string(j, "selection", sel, path);
    if (sel == "softmax") s.selection = ParentSelection::softmax;
    else if (sel == "random") s.selection = ParentSelection::random;
    else throw ConfigError(path + ".selection: expected softmax|random, got \"" + sel + "\"");
  }

  read_number(j, "c_max", s.c_max, path);
  read_triple(j, "tier_fractions", s.tier_fractions, path);
  read_triple(j, "tier_multipliers", s.tier_multipliers, path);
  read_number(j, "time_constant", s.time_constant, path);
  read_number(j, "fail_reward", s.fail_reward, path);
  read_number(j, "similarity_discard", s.similarity_discard, path);
  read_number(j, "similarity_penalty_low", s.similarity_penalty_low, path);
  read_number(j, "levenshtein_prefix", s.levenshtein_prefix, path);
  read_number(j, "recent_k", s.recent_k, path);
  read_number(j, "temperature_start", s.temperature_start, path);
  read_number(j, "temperature_end", s.temperature_end, path);

  if (!(s.tier_fractions[0] < s.tier_fractions[1] && s.tier_fractions[1] < s.tier_fractions[2]) ||
      s.tier_fractions[0] <= 0 || s.tier_fractions[2] >= 1)
    throw ConfigError(path + ".tier_fractions: must be strictly increasing within (0,1)");
  if (!(s.tier_multipliers[0] < s.tier_multipliers[1] &&
        s.tier_multipliers[1] < s.tier_multipliers[2]))
    throw ConfigError(path + ".tier_multipliers: must be strictly increasing");
  if (s.c_max <= 0) throw ConfigError(path + ".c_max: must be positive");
}

inline void load_migration(const nlohmann::json& j, MigrationPolicy& m, const std::string& path) {
  using namespace cfgdetail;
  expect_object(j, path);
  check_keys(j, path, {"period_seconds", "strong_fraction", "prune_fraction", "share_fraction",
                       "elite_fraction", "mode"});
  read_number(j, "period_seconds", m.period_seconds, path);
  read_number(j, "strong_fraction", m.strong_fraction, path);
  read_number(j, "prune_fraction", m.prune_fraction, path);
  read_number(j, "share_fraction", m.share_fraction, path);
  read_number(j, "elite_fraction", m.elite_fraction, path);
  if (j.contains("mode")) {
    std::string mode;
    read_string(j, "mode", mode, path);
    if (mode == "soft") m.mode = MigrationMode::soft;
    else if (mode == "full-reset") m.mode = MigrationMode::full_reset;
    else if (mode == "none") m.mode = MigrationMode::none;
    else throw ConfigError(path + ".mode: expected soft|full-reset|none, got \"" + mode + "\"");
  }
  if (m.period_seconds <= 0) throw ConfigError(path + ".period_seconds: must be positive");
  for (auto [v, name] : {std::pair{m.strong_fraction, "strong_fraction"},
                         std::pair{m.prune_fraction, "prune_fraction"},
                         std::pair{m.share_fraction, "share_fraction"},
                         std::pair{m.elite_fraction, "elite_fraction"}}) {
    if (v <= 0 || v > 1)
      throw ConfigError(path + "." + name + ": must be in (0,1]");
  }
}

inline void load_generation(const nlohmann::json& j, GenerationConfig& g, const std::string& path) {
  using namespace cfgdetail;
  expect_object(j, path);
  check_keys(j, path, {"provider", "samples_per_call", "temperature", "top_p", "max_tokens",
                       "shared_instruction", "distillation", "http", "mock"});
  if (j.contains("provider")) {
    std::string p;
    read_string(j, "provider", p, path);
    if (p == "mock") g.provider = ProviderKind::mock;
    else if (p == "http") g.provider = ProviderKind::http;
    else throw ConfigError(path + ".provider: expected mock|http, got \"" + p + "\"");
  }
  read_number(j, "samples_per_call", g.samples_per_call, path);
  read_number(j, "temperature", g.temperature, path);
  read_number(j, "top_p", g.top_p, path);
  read_number(j, "max_tokens", g.max_tokens, path);
  read_bool(j, "shared_instruction", g.shared_instruction, path);
  if (j.contains("distillation")) {
    const auto& d = j.at("distillation");
    std::string dp = path + ".distillation";
    expect_object(d, dp);
    check_keys(d, dp, {"candidates_low_temp", "candidates_high_temp", "programs_per_candidate",
                       "programs_per_hybrid", "low_temperature", "high_temperature", "load_from"});
    read_number(d, "candidates_low_temp", g.distillation.candidates_low_temp, dp);
    read_number(d, "candidates_high_temp", g.distillation.candidates_high_temp, dp);
    read_number(d, "programs_per_candidate", g.distillation.programs_per_candidate, dp);
    read_number(d, "programs_per_hybrid", g.distillation.programs_per_hybrid, dp);
    read_number(d, "low_temperature", g.distillation.low_temperature, dp);
    read_number(d, "high_temperature", g.distillation.high_temperature, dp);
    read_string(d, "load_from", g.distillation.load_from, dp);
    if (g.distillation.candidates_low_temp + g.distillation.candidates_high_temp == 0)
      throw ConfigError(dp + ": at least one candidate prompt required");
  }
  if (j.contains("http")) {
    const auto& h = j.at("http");
    std::string hp = path + ".http";
    expect_object(h, hp);
    check_keys(h, hp, {"url_env", "key_env", "model", "retries", "backoff_ms"});
    read_string(h, "url_env", g.http.url_env, hp);
    read_string(h, "key_env", g.http.key_env, hp);
    read_string(h, "model", g.http.model, hp);
    read_number(h, "retries", g.http.retries, hp);
    read_number(h, "backoff_ms", g.http.backoff_ms, hp);
  }
  if (j.contains("mock")) {
    const auto& m = j.at("mock");
    std::string mp = path + ".mock";
    expect_object(m, mp);
    check_keys(m, mp, {"construct_bias", "fence_probability", "multi_program_probability",
                       "bad_include_probability", "missing_include_probability"});
    read_number(m, "construct_bias", g.mock.construct_bias, mp);
    read_number(m, "fence_probability", g.mock.fence_probability, mp);
    read_number(m, "multi_program_probability", g.mock.multi_program_probability, mp);
    read_number(m, "bad_include_probability", g.mock.bad_include_probability, mp);
    read_number(m, "missing_include_probability", g.mock.missing_include_probability, mp);
  }
}

inline void load_sut(const nlohmann::json& j, SutConfig& s, const std::string& path) {
  using namespace cfgdetail;
  expect_object(j, path);
  check_keys(j, path, {"kind", "timeout_seconds", "failure_markers", "simulated", "process"});
  if (j.contains("kind")) {
    std::string k;
    read_string(j, "kind", k, path);
    if (k == "simulated") s.kind = SutKind::simulated;
    else if (k == "process") s.kind = SutKind::process;
    else throw ConfigError(path + ".kind: expected simulated|process, got \"" + k + "\"");
  }
  read_number(j, "timeout_seconds", s.timeout_seconds, path);
  read_string_list(j, "failure_markers", s.failure_markers, path);
  if (j.contains("simulated")) {
    const auto& m = j.at("simulated");
    std::string mp = path + ".simulated";
    expect_object(m, mp);
    check_keys(m, mp, {"validity_rate", "bug_probability", "hang_probability", "enable_bugs",
                       "clusters", "lines_per_cluster", "bug_pairs"});
    read_number(m, "validity_rate", s.simulated.validity_rate, mp);
    read_number(m, "bug_probability", s.simulated.bug_probability, mp);
    read_number(m, "hang_probability", s.simulated.hang_probability, mp);
    read_bool(m, "enable_bugs", s.simulated.enable_bugs, mp);
    read_number(m, "clusters", s.simulated.clusters, mp);
    read_number(m, "lines_per_cluster", s.simulated.lines_per_cluster, mp);
    read_number(m, "bug_pairs", s.simulated.bug_pairs, mp);
    if (s.simulated.validity_rate < 0 || s.simulated.validity_rate > 1)
      throw ConfigError(mp + ".validity_rate: must be in [0,1]");
    if (s.simulated.clusters == 0 || s.simulated.lines_per_cluster == 0)
      throw ConfigError(mp + ": clusters and lines_per_cluster must be positive");
  }
  if (j.contains("process")) {
    const auto& p = j.at("process");
    std::string pp = path + ".process";
    expect_object(p, pp);
    check_keys(p, pp,
               {"compile", "coverage", "reset", "scratch_root", "source_extension", "flag_sets"});
    read_string(p, "compile", s.process.compile, pp);
    read_string(p, "coverage", s.process.coverage, pp);
    read_string(p, "reset", s.process.reset, pp);
    read_string(p, "scratch_root", s.process.scratch_root, pp);
    read_string(p, "source_extension", s.process.source_extension, pp);
    read_string_list(p, "flag_sets", s.process.flag_sets, pp);
    if (s.process.flag_sets.empty()) s.process.flag_sets.push_back("");
  }
  if (s.timeout_seconds <= 0) throw ConfigError(path + ".timeout_seconds: must be positive");
}

inline CampaignConfig load_config_json(const nlohmann::json& j) {
  using namespace cfgdetail;
  CampaignConfig c;
  expect_object(j, "config");
  check_keys(j, "config",
             {"campaign", "warm_start", "migration", "scoring", "generation", "sut", "normalize",
              "detectors"});
  if (j.contains("campaign")) {
    const auto& t = j.at("campaign");
    expect_object(t, "campaign");
    check_keys(t, "campaign",
               {"n_islands", "rng_seed", "budget_programs", "budget_seconds", "workers",
                "island_capacity", "timeseries_interval_seconds", "docs", "docs_path",
                "targeted_features"});
    read_number(t, "n_islands", c.n_islands, "campaign");
    read_number(t, "rng_seed", c.rng_seed, "campaign");
    read_number(t, "budget_programs", c.budget_programs, "campaign");
    read_number(t, "budget_seconds", c.budget_seconds, "campaign");
    read_number(t, "workers", c.workers, "campaign");
    read_number(t, "island_capacity", c.island_capacity, "campaign");
    read_number(t, "timeseries_interval_seconds", c.timeseries_interval_seconds, "campaign");
    read_string(t, "docs", c.docs, "campaign");
    read_string(t, "docs_path", c.docs_path, "campaign");
    read_string_list(t, "targeted_features", c.targeted_features, "campaign");
  }
  if (j.contains("warm_start")) {
    const auto& w = j.at("warm_start");
    expect_object(w, "warm_start");
    check_keys(w, "warm_start", {"corpus_dir", "mix_probability"});
    read_string(w, "corpus_dir", c.warm_start.corpus_dir, "warm_start");
    read_number(w, "mix_probability", c.warm_start.mix_probability, "warm_start");
  }
  if (j.contains("migration")) load_migration(j.at("migration"), c.migration, "migration");
  if (j.contains("scoring")) load_scoring(j.at("scoring"), c.scoring, "scoring");
  if (j.contains("generation")) load_generation(j.at("generation"), c.generation, "generation");
  if (j.contains("sut")) load_sut(j.at("sut"), c.sut, "sut");
  if (j.contains("normalize")) {
    const auto& n = j.at("normalize");
    expect_object(n, "normalize");
    check_keys(n, "normalize", {"header_hints"});
    if (n.contains("header_hints")) {
      const auto& h = n.at("header_hints");
      if (!h.is_array()) throw ConfigError("normalize.header_hints: expected an array of pairs");
      c.header_hints.clear();
      for (const auto& e : h) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
          throw ConfigError("normalize.header_hints: each entry must be [pattern, header]");
        c.header_hints.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
      }
    }
  }
  if (j.contains("detectors")) {
    const auto& d = j.at("detectors");
    expect_object(d, "detectors");
    c.detectors.clear();
    for (auto it = d.begin(); it != d.end(); ++it) {
      if (!it.value().is_string())
        throw ConfigError("detectors." + it.key() + ": expected a string pattern");
      c.detectors[it.key()] = it.value().get<std::string>();
    }
  }

  if (c.n_islands < 1) throw ConfigError("campaign.n_islands: must be >= 1");
  if (c.island_capacity < 1) throw ConfigError("campaign.island_capacity: must be >= 1");
  if (c.warm_start.mix_probability < 0 || c.warm_start.mix_probability > 1)
    throw ConfigError("warm_start.mix_probability: must be in [0,1]");
  if (c.timeseries_interval_seconds <= 0)
    throw ConfigError("campaign.timeseries_interval_seconds: must be positive");
  return c;
}

inline CampaignConfig load_config_file(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file: " + config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + config_path + ": " + e.what());
  }
  return load_config_json(j);
}

inline nlohmann::json config_to_json(const CampaignConfig& c) {
  nlohmann::json j;
  j["campaign"] = {{"n_islands", c.n_islands},
                   {"rng_seed", c.rng_seed},
                   {"budget_programs", c.budget_programs},
                   {"budget_seconds", c.budget_seconds},
                   {"workers", c.workers},
                   {"island_capacity", c.island_capacity},
                   {"timeseries_interval_seconds", c.timeseries_interval_seconds},
                   {"docs", c.docs},
                   {"docs_path", c.docs_path},
                   {"targeted_features", c.targeted_features}};
  j["warm_start"] = {{"corpus_dir", c.warm_start.corpus_dir},
                     {"mix_probability", c.warm_start.mix_probability}};
  j["migration"] = {{"period_seconds", c.migration.period_seconds},
                    {"strong_fraction", c.migration.strong_fraction},
                    {"prune_fraction", c.migration.prune_fraction},
                    {"share_fraction", c.migration.share_fraction},
                    {"elite_fraction", c.migration.elite_fraction},
                    {"mode", to_string(c.migration.mode)}};
  j["scoring"] = {{"score", c.scoring.use_score_scaling},
                  {"time", c.scoring.use_time_reward},
                  {"fail", c.scoring.use_fail_reward},
                  {"used", to_string(c.scoring.used_policy)},
                  {"global", c.scoring.coverage_mode == CoverageMode::global},
                  {"zero", c.scoring.keep_zero_contribution},
                  {"filter", c.scoring.use_redundancy_filter},
                  {"selection",
                   c.scoring.selection == ParentSelection::softmax ? "softmax" : "random"},
                  {"c_max", c.scoring.c_max},
                  {"tier_fractions", c.scoring.tier_fractions},
                  {"tier_multipliers", c.scoring.tier_multipliers},
                  {"time_constant", c.scoring.time_constant},
                  {"fail_reward", c.scoring.fail_reward},
                  {"similarity_discard", c.scoring.similarity_discard},
                  {"similarity_penalty_low", c.scoring.similarity_penalty_low},
                  {"levenshtein_prefix", c.scoring.levenshtein_prefix},
                  {"recent_k", c.scoring.recent_k},
                  {"temperature_start", c.scoring.temperature_start},
                  {"temperature_end", c.scoring.temperature_end}};
  j["generation"] = {
      {"provider", c.generation.provider == ProviderKind::mock ? "mock" : "http"},
      {"samples_per_call", c.generation.samples_per_call},
      {"temperature", c.generation.temperature},
      {"top_p", c.generation.top_p},
      {"max_tokens", c.generation.max_tokens},
      {"shared_instruction", c.generation.shared_instruction},
      {"distillation",
       {{"candidates_low_temp", c.generation.distillation.candidates_low_temp},
        {"candidates_high_temp", c.generation.distillation.candidates_high_temp},
        {"programs_per_candidate", c.generation.distillation.programs_per_candidate},
        {"programs_per_hybrid", c.generation.distillation.programs_per_hybrid},
        {"low_temperature", c.generation.distillation.low_temperature},
        {"high_temperature", c.generation.distillation.high_temperature},
        {"load_from", c.generation.distillation.load_from}}},
      {"http",
       {{"url_env", c.generation.http.url_env},
        {"key_env", c.generation.http.key_env},
        {"model", c.generation.http.model},
        {"retries", c.generation.http.retries},
        {"backoff_ms", c.generation.http.backoff_ms}}},
      {"mock",
       {{"construct_bias", c.generation.mock.construct_bias},
        {"fence_probability", c.generation.mock.fence_probability},
        {"multi_program_probability", c.generation.mock.multi_program_probability},
        {"bad_include_probability", c.generation.mock.bad_include_probability},
        {"missing_include_probability", c.generation.mock.missing_include_probability}}}};
  j["sut"] = {{"kind", c.sut.kind == SutKind::simulated ? "simulated" : "process"},
              {"timeout_seconds", c.sut.timeout_seconds},
              {"failure_markers", c.sut.failure_markers},
              {"simulated",
               {{"validity_rate", c.sut.simulated.validity_rate},
                {"bug_probability", c.sut.simulated.bug_probability},
                {"hang_probability", c.sut.simulated.hang_probability},
                {"enable_bugs", c.sut.simulated.enable_bugs},
                {"clusters", c.sut.simulated.clusters},
                {"lines_per_cluster", c.sut.simulated.lines_per_cluster},
                {"bug_pairs", c.sut.simulated.bug_pairs}}},
              {"process",
               {{"compile", c.sut.process.compile},
                {"coverage", c.sut.process.coverage},
                {"reset", c.sut.process.reset},
                {"scratch_root", c.sut.process.scratch_root},
                {"source_extension", c.sut.process.source_extension},
                {"flag_sets", c.sut.process.flag_sets}}}};
  nlohmann::json hints = nlohmann::json::array();
  for (const auto& [pat, hdr] : c.header_hints) hints.push_back({pat, hdr});
  j["normalize"] = {{"header_hints", hints}};
  j["detectors"] = c.detectors;
  return j;
}

}  // namespace funfuzz
