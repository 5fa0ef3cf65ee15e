#pragma once

// Fitness computation and parent selection. Every operation here is a pure
// function of its arguments except select_parent, which applies the used
// policy to the island it drew from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "funfuzz/config.hpp"
#include "funfuzz/coverage.hpp"
#include "funfuzz/model.hpp"
#include "funfuzz/rng.hpp"
#include "funfuzz/sut.hpp"
#include "funfuzz/text.hpp"

namespace funfuzz {

inline std::uint64_t marginal_gain(const CoverageSet& coverage, const CoverageSet& frontier) {
  return frontier.count_new(coverage);
}

// Returns the gain and folds the coverage into the frontier.
inline std::uint64_t apply_marginal(const CoverageSet& coverage, CoverageSet& frontier) {
  std::uint64_t gain = frontier.count_new(coverage);
  frontier.union_in_place(coverage);
  return gain;
}

// Piecewise-constant scaling by how far the frontier has climbed toward the
// coverage ceiling. c_max_override > 0 substitutes a ceiling learned online.
inline double tier_factor(double frontier_size, const ScoringConfig& cfg,
                          double c_max_override = 0) {
  double c_max = c_max_override > 0 ? c_max_override : cfg.c_max;
  if (frontier_size >= cfg.tier_fractions[2] * c_max) return cfg.tier_multipliers[2];
  if (frontier_size >= cfg.tier_fractions[1] * c_max) return cfg.tier_multipliers[1];
  if (frontier_size >= cfg.tier_fractions[0] * c_max) return cfg.tier_multipliers[0];
  return 1.0;
}

inline double time_reward_multiplier(double t_comp, double mean_prev, const ScoringConfig& cfg) {
  if (mean_prev <= 0) return 1.0;  // first evaluation has no history
  return (t_comp / mean_prev) * std::max(cfg.time_constant - mean_prev, 1.0);
}

inline double used_penalty(double original_score) { return original_score / 10.0 - 1.0; }

inline double temperature_at(double elapsed_fraction, const ScoringConfig& cfg) {
  double f = std::clamp(elapsed_fraction, 0.0, 1.0);
  return cfg.temperature_start - (cfg.temperature_start - cfg.temperature_end) * f;
}

enum class RedundancyDecision { keep, penalize, discard };

struct RedundancyResult {
  RedundancyDecision decision = RedundancyDecision::keep;
  double factor = 1.0;      // multiplier applied to the final fitness
  double similarity = 0.0;  // the max similarity that drove the decision
};

namespace scoredetail {

inline std::set<std::string> token_set(std::string_view text) {
  std::set<std::string> out;
  for (auto t : whitespace_tokens(text)) out.emplace(t);
  return out;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::size_t inter = 0;
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  for (const auto& t : small)
    if (large.count(t)) ++inter;
  return double(inter) / double(a.size() + b.size() - inter);
}

// Indices of the k members with the largest created_at (ties: later index).
inline std::vector<std::size_t> most_recent_indices(const std::vector<PopulationMember>& pop,
                                                    std::size_t k) {
  std::vector<std::size_t> idx(pop.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::size_t take = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + long(take), idx.end(),
                    [&pop](std::size_t a, std::size_t b) {
                      if (pop[a].program.created_at != pop[b].program.created_at)
                        return pop[a].program.created_at > pop[b].program.created_at;
                      return a > b;
                    });
  idx.resize(take);
  return idx;
}

}  // namespace scoredetail

// Similarity against the island: token overlap is checked population-wide,
// edit distance only against the most recently created members and only on
// a bounded prefix, which keeps the filter O(population) per candidate.
inline RedundancyResult redundancy_score(const std::string& candidate, const Island& island,
                                         const ScoringConfig& cfg) {
  RedundancyResult r;
  if (!cfg.use_redundancy_filter || island.population.empty()) return r;

  auto cand_tokens = scoredetail::token_set(candidate);
  double best = 0.0;
  for (const auto& m : island.population)
    best = std::max(best, scoredetail::jaccard(cand_tokens, scoredetail::token_set(m.program.source)));

  std::string_view cand_prefix =
      std::string_view(candidate).substr(0, cfg.levenshtein_prefix);
  for (std::size_t i : scoredetail::most_recent_indices(island.population, cfg.recent_k)) {
    std::string_view member_prefix =
        std::string_view(island.population[i].program.source).substr(0, cfg.levenshtein_prefix);
    best = std::max(best, 1.0 - normalized_levenshtein(cand_prefix, member_prefix));
  }

  r.similarity = best;
  if (best >= cfg.similarity_discard) {
    r.decision = RedundancyDecision::discard;
    r.factor = 0.0;
  } else if (best >= cfg.similarity_penalty_low) {
    r.decision = RedundancyDecision::penalize;
    r.factor = (cfg.similarity_discard - best) / (cfg.similarity_discard - cfg.similarity_penalty_low);
  }
  return r;
}

struct FitnessInputs {
  Classification classification = Classification::success;
  bool coverage_available = true;
  std::uint64_t gain = 0;
  double frontier_size = 0;     // island frontier at scoring time
  double c_max_override = 0;    // > 0 when the ceiling was raised online
  double t_comp = 0;
  double mean_prev = 0;         // island mean compile time before this one
  double redundancy_factor = 1.0;
};

inline double compute_fitness(const FitnessInputs& in, const ScoringConfig& cfg) {
  double base;
  if (!in.coverage_available && in.classification == Classification::success &&
      !cfg.use_fail_reward && !cfg.use_time_reward) {
    base = 1.0;  // compile feedback only: a clean compile still counts
  } else {
    base = double(in.gain);
  }
  double score = base;
  if (cfg.use_score_scaling) score *= tier_factor(in.frontier_size, cfg, in.c_max_override);
  if (cfg.use_time_reward) score *= time_reward_multiplier(in.t_comp, in.mean_prev, cfg);
  if (cfg.use_fail_reward && in.classification == Classification::benign_error)
    score += cfg.fail_reward;
  score *= in.redundancy_factor;
  return std::max(score, 0.0);
}

// Softmax draw with max-subtraction; negative stored scores act as zero so a
// penalized member is unlikely rather than impossible.
inline std::size_t select_parent_index(const std::vector<double>& scores, double temperature,
                                       Rng& rng) {
  std::vector<double> floored(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) floored[i] = std::max(scores[i], 0.0);
  double m = *std::max_element(floored.begin(), floored.end());
  if (temperature <= 0) {
    for (std::size_t i = 0; i < floored.size(); ++i)
      if (floored[i] == m) return i;
  }
  std::vector<double> w(floored.size());
  double total = 0;
  for (std::size_t i = 0; i < floored.size(); ++i) {
    w[i] = std::exp((floored[i] - m) / temperature);
    total += w[i];
  }
  double u = rng.uniform01() * total;
  double cum = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    cum += w[i];
    if (u < cum) return i;
  }
  return w.size() - 1;
}

// Draws a parent and applies the used policy. Empty population returns
// nothing, which callers treat as "generate new, no example".
inline std::optional<CandidateProgram> select_parent(Island& island, double temperature,
                                                     const ScoringConfig& cfg, Rng& rng) {
  auto& pop = island.population;
  if (pop.empty()) return std::nullopt;

  std::size_t idx;
  if (cfg.selection == ParentSelection::random) {
    idx = rng.index(pop.size());
  } else {
    std::vector<double> scores(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i) scores[i] = pop[i].fitness.score;
    idx = select_parent_index(scores, temperature, rng);
  }

  CandidateProgram parent = pop[idx].program;
  ++pop[idx].fitness.times_used_as_parent;
  switch (cfg.used_policy) {
    case UsedPolicy::remove:
      pop.erase(pop.begin() + long(idx));
      break;
    case UsedPolicy::penalize:
      pop[idx].fitness.score = used_penalty(pop[idx].fitness.score);
      break;
    case UsedPolicy::none:
      break;
  }
  return parent;
}

}  // namespace funfuzz
