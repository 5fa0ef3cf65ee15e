#pragma once

// The evolutionary heart of a campaign: shared state across islands, the
// per-worker iteration (select example, generate a batch, evaluate every
// normalized unit, fold coverage, insert survivors), periodic cross-island
// migration, and the run_campaign driver that wires workers, persistence and
// the time series together.
//
// Locking: migration_mu orders migration attempts, island locks are acquired
// in index order, global_mu protects the shared frontier. A worker holds at
// most one island lock and calls maybe_migrate only after releasing it, so
// the hierarchy cannot deadlock.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "funfuzz/config.hpp"
#include "funfuzz/coverage.hpp"
#include "funfuzz/generation.hpp"
#include "funfuzz/http_provider.hpp"
#include "funfuzz/mock_provider.hpp"
#include "funfuzz/model.hpp"
#include "funfuzz/normalize.hpp"
#include "funfuzz/persist.hpp"
#include "funfuzz/process_sut.hpp"
#include "funfuzz/rng.hpp"
#include "funfuzz/scoring.hpp"
#include "funfuzz/sut.hpp"
#include "funfuzz/triage.hpp"

namespace funfuzz {

// Mutable campaign-wide state. Islands are guarded by their lock in
// island_locks; the counters are atomics so the budget gate and summaries
// never need a lock.
class CampaignState {
 public:
  CampaignState(const CampaignConfig& cfg, Clock& campaign_clock, BugLedger& bug_ledger)
      : clock(&campaign_clock),
        ledger(&bug_ledger),
        hints(header_hint_table_from_config(cfg)),
        start_time(campaign_clock.now()),
        last_migration(campaign_clock.now()) {
    std::size_t n = std::max<std::size_t>(1, cfg.n_islands);
    islands.resize(n);
    for (std::uint32_t i = 0; i < islands.size(); ++i) islands[i].id = i;
    island_locks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) island_locks.push_back(std::make_unique<std::mutex>());
    coverage_available =
        cfg.sut.kind == SutKind::simulated || !cfg.sut.process.coverage.empty();
    // The simulated target has a known line universe; let tier scaling see it
    // instead of the real-compiler ceiling.
    if (cfg.sut.kind == SutKind::simulated)
      c_max_override =
          double(cfg.sut.simulated.clusters) * double(cfg.sut.simulated.lines_per_cluster);
  }

  CampaignState(const CampaignState&) = delete;
  CampaignState& operator=(const CampaignState&) = delete;

  std::vector<Island> islands;
  std::vector<std::unique_ptr<std::mutex>> island_locks;
  CoverageSet global_frontier;  // used when scoring.coverage_mode == global
  std::mutex global_mu;
  std::mutex migration_mu;  // guards last_migration; serializes timer checks
  Clock* clock;
  BugLedger* ledger;
  HeaderHintTable hints;
  std::vector<std::string> corpus;  // warm-start examples, loaded once
  bool coverage_available = true;
  double c_max_override = 0;  // > 0 when the coverage ceiling is known
  double start_time = 0;
  double last_migration = 0;

  std::atomic<std::uint64_t> programs_generated{0};  // units entering the filter
  std::atomic<std::uint64_t> programs_compiled{0};   // units evaluated by the SUT
  std::atomic<std::uint64_t> migrant_reevals{0};
  std::atomic<std::uint64_t> valid_programs{0};
  std::atomic<Id> next_id{1};
};

// Generation budget: every normalized unit that enters the pipeline counts,
// as does every migrant recompile. Redundant units count even though they are
// never compiled; discarding them is a choice the budget already paid for.
inline bool budget_exhausted(const CampaignState& st, const CampaignConfig& cfg) {
  if (cfg.budget_programs > 0 &&
      st.programs_generated.load() + st.migrant_reevals.load() >= cfg.budget_programs)
    return true;
  if (cfg.budget_seconds > 0 && st.clock->now() - st.start_time >= cfg.budget_seconds)
    return true;
  return false;
}

inline double budget_fraction(const CampaignState& st, const CampaignConfig& cfg) {
  double f = 0.0;
  if (cfg.budget_programs > 0)
    f = std::max(f, double(st.programs_generated.load() + st.migrant_reevals.load()) /
                        double(cfg.budget_programs));
  if (cfg.budget_seconds > 0)
    f = std::max(f, (st.clock->now() - st.start_time) / cfg.budget_seconds);
  return std::clamp(f, 0.0, 1.0);
}

// Decides where this iteration's example comes from. Returns a corpus
// program, or nothing to mean "select from the population as usual". With
// mixing off (or no corpus) the rng is untouched, so enabling warm start
// with probability zero cannot perturb a replay.
inline std::optional<std::string> warm_start_draw(const Island& island,
                                                  const std::vector<std::string>& corpus,
                                                  Rng& rng, double mix_probability) {
  if (corpus.empty() || mix_probability <= 0) return std::nullopt;
  if (!island.population.empty() && !rng.coin(mix_probability)) return std::nullopt;
  return corpus[rng.index(corpus.size())];
}

struct IterationReport {
  std::uint32_t island_id = 0;
  std::size_t raw_samples = 0;  // provider outputs before normalization
  std::size_t generated = 0;    // normalized units charged to the budget
  std::size_t discarded_redundant = 0;
  std::size_t evaluated = 0;
  std::size_t inserted = 0;
  std::size_t bugs_recorded = 0;  // potential-bug results (duplicates included)
  std::size_t harness_errors = 0;
  bool provider_skipped = false;
  bool migrated = false;
  std::vector<std::string> messages;
};

struct MigrationMove {
  Id migrant_id = 0;         // fresh id of the injected copy
  Id source_program_id = 0;  // donor's member, which stays put
  std::uint32_t from_island = 0;
  std::uint32_t to_island = 0;
};

struct MigrationReport {
  bool performed = false;
  double at = 0;
  std::vector<std::uint32_t> strong;  // rank order, strongest first
  std::vector<std::uint32_t> weak;
  std::size_t pruned_total = 0;
  std::vector<MigrationMove> moves;
  std::vector<std::string> messages;
};

namespace evodetail {

struct EvalOutcome {
  bool ok = true;  // false: the harness itself failed, nothing was recorded
  bool inserted = false;
  bool bug = false;        // classified as a potential bug
  bool bug_fresh = false;  // and its fingerprint was new to the ledger
  Id program_id = 0;
  Classification classification = Classification::success;
  std::string error;
};

// Evaluates one source unit against the SUT and folds the outcome into the
// island. Callers hold the island's lock. `fold` controls whether coverage
// joins the frontier: migrant recompiles measure gain against the recipient
// frontier but never edit it. `force_insert` bypasses the survivor rule for
// migrants, which are injected regardless of local gain.
inline EvalOutcome evaluate_candidate(CampaignState& st, Island& isl, std::string source,
                                      Origin origin, Strategy strategy,
                                      std::optional<Id> parent_id, double redundancy_factor,
                                      bool fold, bool force_insert, const CampaignConfig& cfg,
                                      SutHarness& harness, OutputWriter* writer,
                                      const char* kind) {
  EvalOutcome out;
  SutResult r;
  try {
    r = harness.compile(source);
    if (r.classification == Classification::benign_error && !st.hints.empty()) {
      // One repair attempt per candidate: prepend headers the diagnostics
      // name, recompile, and keep whichever classification results.
      auto [patched, added] = add_missing_headers(source, r.diagnostics, st.hints);
      if (!added.empty()) {
        r = harness.compile(patched);
        source = std::move(patched);
      }
    }
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
    return out;
  }
  out.classification = r.classification;

  double mean_prev = isl.stats.compile_time_mean;
  std::uint64_t gain = 0;
  double frontier_size = 0;
  if (cfg.scoring.coverage_mode == CoverageMode::global) {
    std::lock_guard<std::mutex> g(st.global_mu);
    gain = fold ? apply_marginal(r.coverage, st.global_frontier)
                : marginal_gain(r.coverage, st.global_frontier);
    frontier_size = double(st.global_frontier.size());
    if (fold) isl.frontier.union_in_place(r.coverage);  // island view, for reporting
  } else {
    gain = fold ? apply_marginal(r.coverage, isl.frontier)
                : marginal_gain(r.coverage, isl.frontier);
    frontier_size = double(isl.frontier.size());
  }

  FitnessInputs in;
  in.classification = r.classification;
  in.coverage_available = st.coverage_available;
  in.gain = gain;
  in.frontier_size = frontier_size;
  in.c_max_override = st.c_max_override;
  in.t_comp = r.compile_time_s;
  in.mean_prev = mean_prev;
  in.redundancy_factor = redundancy_factor;
  double score =
      r.classification == Classification::hang ? 0.0 : compute_fitness(in, cfg.scoring);

  isl.stats.record_compile(r.compile_time_s);
  st.programs_compiled.fetch_add(1);
  if (r.classification == Classification::success) {
    ++isl.stats.valid_programs;
    st.valid_programs.fetch_add(1);
  }
  if (r.classification == Classification::potential_bug) {
    ++isl.stats.potential_bugs;
    out.bug = true;
    out.bug_fresh = st.ledger->record(r, source, st.clock->now(), cfg.sut.failure_markers) ==
                    RecordOutcome::fresh;
  }

  std::string address;
  if (writer) address = writer->store_program(source);

  CandidateProgram prog;
  prog.id = st.next_id.fetch_add(1);
  prog.origin = origin;
  prog.parent_id = parent_id;
  prog.strategy = strategy;
  prog.island_id = isl.id;
  prog.created_at = st.clock->now();
  out.program_id = prog.id;

  bool insert = force_insert || (r.classification != Classification::hang &&
                                 (score > 0.0 || cfg.scoring.keep_zero_contribution));
  if (writer) {
    EvaluationRecord er;
    er.kind = kind;
    er.t = st.clock->now();
    er.island_id = isl.id;
    er.program_id = prog.id;
    er.address = address;
    er.classification = to_string(r.classification);
    er.gain = gain;
    er.score = score;
    er.compile_time = r.compile_time_s;
    er.origin = to_string(origin);
    er.strategy = to_string(strategy);
    er.parent_id = parent_id;
    writer->append_evaluation(er);
  }
  if (insert) {
    prog.source = std::move(source);
    PopulationMember m;
    m.program = std::move(prog);
    m.fitness.raw_marginal_coverage = gain;
    m.fitness.score = score;
    m.fitness.zero_contribution = gain == 0;
    m.fitness.compile_time = r.compile_time_s;
    insert_with_capacity(isl, std::move(m), cfg.island_capacity);
    out.inserted = true;
  }
  isl.stats.frontier_history.emplace_back(st.clock->now(), isl.frontier.size());
  return out;
}

// Charges one generated unit against the program budget, or refuses when the
// budget is spent. Compare-and-swap keeps the gate strict under concurrency.
inline bool try_charge_generated(CampaignState& st, const CampaignConfig& cfg) {
  if (cfg.budget_programs == 0) {
    st.programs_generated.fetch_add(1);
    return true;
  }
  std::uint64_t cur = st.programs_generated.load();
  for (;;) {
    if (cur + st.migrant_reevals.load() >= cfg.budget_programs) return false;
    if (st.programs_generated.compare_exchange_weak(cur, cur + 1)) return true;
  }
}

}  // namespace evodetail

// Periodic rebalance: rank islands by frontier size, prune (or clear) the
// weak ones, and inject copies of elite members from the strong ones. The
// timer fires at most once per period no matter how many workers race it.
// Migrant copies are recompiled on arrival so their fitness reflects the
// recipient's context, but the recipient frontier is never edited for them.
inline MigrationReport maybe_migrate(CampaignState& st, const CampaignConfig& cfg,
                                     SutHarness& harness, Rng& rng,
                                     OutputWriter* writer = nullptr) {
  MigrationReport rep;
  const MigrationPolicy& pol = cfg.migration;
  if (pol.mode == MigrationMode::none) return rep;
  const std::size_t n = st.islands.size();
  if (n < 2) return rep;
  {
    std::lock_guard<std::mutex> gate(st.migration_mu);
    double now = st.clock->now();
    if (now - st.last_migration < pol.period_seconds) return rep;
    st.last_migration = now;  // rearm before the work so racers see a young timer
    rep.at = now;
  }
  rep.performed = true;

  std::vector<std::unique_lock<std::mutex>> locks;
  locks.reserve(n);
  for (auto& m : st.island_locks) locks.emplace_back(*m);

  // Rank by frontier size; ties break toward the lower island id.
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    auto fa = st.islands[a].frontier.size(), fb = st.islands[b].frontier.size();
    if (fa != fb) return fa > fb;
    return a < b;
  });
  std::size_t strong_count =
      std::clamp<std::size_t>(std::size_t(std::ceil(pol.strong_fraction * double(n))), 1, n);
  rep.strong.assign(order.begin(), order.begin() + long(strong_count));
  rep.weak.assign(order.begin() + long(strong_count), order.end());
  if (rep.weak.empty()) return rep;

  // Sample migrants from each strong island's elite, strongest donor first.
  struct Pending {
    PopulationMember source;
    std::uint32_t from;
  };
  std::vector<Pending> pending;
  for (std::uint32_t sid : rep.strong) {
    auto& pop = st.islands[sid].population;
    std::size_t k = std::size_t(std::floor(pol.share_fraction * double(pop.size())));
    if (k == 0) continue;
    std::size_t elite_n =
        std::min(pop.size(), std::size_t(std::ceil(pol.elite_fraction * double(pop.size()))));
    std::vector<std::size_t> idx(pop.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::partial_sort(idx.begin(), idx.begin() + long(elite_n), idx.end(),
                      [&pop](std::size_t a, std::size_t b) {
                        if (pop[a].fitness.score != pop[b].fitness.score)
                          return pop[a].fitness.score > pop[b].fitness.score;
                        if (pop[a].program.created_at != pop[b].program.created_at)
                          return pop[a].program.created_at < pop[b].program.created_at;
                        return pop[a].program.id < pop[b].program.id;
                      });
    k = std::min(k, elite_n);
    for (std::size_t pick : rng.sample_without_replacement(elite_n, k))
      pending.push_back({pop[idx[pick]], sid});
  }

  // Weak islands shed their tail first (soft) or everything (full reset).
  for (std::uint32_t wid : rep.weak) {
    auto& pop = st.islands[wid].population;
    if (pol.mode == MigrationMode::full_reset) {
      rep.pruned_total += pop.size();
      pop.clear();
      continue;
    }
    if (pop.empty()) continue;
    std::size_t p = std::size_t(std::floor(pol.prune_fraction * double(pop.size())));
    p = std::min(p, pop.size() - 1);  // a soft prune never empties an island
    if (p == 0) continue;
    std::vector<std::size_t> idx(pop.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&pop](std::size_t a, std::size_t b) {
      if (pop[a].fitness.score != pop[b].fitness.score)
        return pop[a].fitness.score < pop[b].fitness.score;
      if (pop[a].program.created_at != pop[b].program.created_at)
        return pop[a].program.created_at < pop[b].program.created_at;
      return pop[a].program.id < pop[b].program.id;
    });
    idx.resize(p);
    std::sort(idx.begin(), idx.end(), std::greater<>());
    for (std::size_t victim : idx) pop.erase(pop.begin() + long(victim));
    rep.pruned_total += p;
  }

  // Round-robin injection; each migrant is a fresh copy recompiled in place.
  std::size_t wi = 0;
  for (auto& mig : pending) {
    std::uint32_t to = rep.weak[wi++ % rep.weak.size()];
    Island& dst = st.islands[to];
    auto out = evodetail::evaluate_candidate(
        st, dst, mig.source.program.source, Origin::migrated, mig.source.program.strategy,
        mig.source.program.id, 1.0, /*fold=*/false, /*force_insert=*/true, cfg, harness, writer,
        "migrant-reeval");
    if (!out.ok) {
      rep.messages.push_back("migrant from island " + std::to_string(mig.from) +
                             " dropped: " + out.error);
      continue;
    }
    ++dst.stats.migrant_reevals;
    st.migrant_reevals.fetch_add(1);
    rep.moves.push_back({out.program_id, mig.source.program.id, mig.from, to});
  }

  if (writer) {
    std::ostringstream line;
    line << "migration at t=" << rep.at << ": moved " << rep.moves.size() << ", pruned "
         << rep.pruned_total << ", weak islands " << rep.weak.size();
    writer->append_log(line.str());
  }
  return rep;
}

// One full worker step: pick an island, choose an example (corpus or parent),
// request a batch, then evaluate every normalized unit under the island lock.
// Provider failure skips the iteration and costs nothing; a harness error
// skips only the unit that hit it. Finishes with a migration-timer check.
inline IterationReport worker_iteration(CampaignState& st, GenerationProvider& provider,
                                        SutHarness& harness, const CampaignConfig& cfg,
                                        Rng& rng, OutputWriter* writer = nullptr) {
  IterationReport rep;
  rep.island_id = std::uint32_t(rng.index(st.islands.size()));
  {
    std::lock_guard<std::mutex> lock(*st.island_locks[rep.island_id]);
    Island& isl = st.islands[rep.island_id];

    double temperature = temperature_at(budget_fraction(st, cfg), cfg.scoring);
    std::optional<Id> parent_id;
    Origin origin = Origin::generated;
    std::optional<std::string> example =
        warm_start_draw(isl, st.corpus, rng, cfg.warm_start.mix_probability);
    if (example) {
      origin = Origin::warm_start_corpus;
    } else {
      if (auto parent = select_parent(isl, temperature, cfg.scoring, rng)) {
        example = parent->source;
        parent_id = parent->id;
      }
    }
    // Transformation strategies only make sense with an example in hand.
    Strategy strategy = Strategy::generate_new;
    if (example) strategy = Strategy(rng.index(3));
    isl.prompt_state.selected_example = example;
    isl.prompt_state.transformation = strategy;

    double t0 = st.clock->now();
    BatchOutcome batch = request_batch(isl.prompt_state, cfg.targeted_features, cfg.generation,
                                       provider, [](int ms) {
                                         std::this_thread::sleep_for(
                                             std::chrono::milliseconds(ms));
                                       });
    isl.stats.provider_time_total += st.clock->now() - t0;
    if (!batch.ok) {
      rep.provider_skipped = true;
      rep.messages.push_back("provider skipped iteration: " + batch.error);
      return rep;
    }
    rep.raw_samples = batch.outputs.size();

    auto resolvable = gendetail::probe_of(harness);
    bool budget_hit = false;
    for (const auto& raw : batch.outputs) {
      if (budget_hit) break;
      for (auto& unit : normalize_units(raw, resolvable)) {
        if (!evodetail::try_charge_generated(st, cfg)) {
          budget_hit = true;
          break;
        }
        ++rep.generated;

        double redundancy_factor = 1.0;
        if (cfg.scoring.use_redundancy_filter) {
          RedundancyResult red = redundancy_score(unit, isl, cfg.scoring);
          if (red.decision == RedundancyDecision::discard) {
            ++rep.discarded_redundant;
            continue;
          }
          redundancy_factor = red.factor;
        }

        auto out = evodetail::evaluate_candidate(st, isl, std::move(unit), origin, strategy,
                                                 parent_id, redundancy_factor, /*fold=*/true,
                                                 /*force_insert=*/false, cfg, harness, writer,
                                                 "evaluation");
        if (!out.ok) {
          ++rep.harness_errors;
          rep.messages.push_back("harness error, unit skipped: " + out.error);
          continue;
        }
        ++rep.evaluated;
        if (out.inserted) ++rep.inserted;
        if (out.bug) ++rep.bugs_recorded;
      }
    }
  }
  rep.migrated = maybe_migrate(st, cfg, harness, rng, writer).performed;
  return rep;
}

// ---------------------------------------------------------------------------
// Campaign driver

struct CampaignSummary {
  std::uint64_t programs_generated = 0;
  std::uint64_t programs_compiled = 0;
  std::uint64_t migrant_reevals = 0;
  std::uint64_t valid_programs = 0;
  std::uint64_t unique_bugs = 0;
  std::uint64_t distillation_programs = 0;
  std::uint64_t union_frontier = 0;
  std::vector<std::uint64_t> island_frontiers;
  double elapsed_seconds = 0;
  double validity_rate = 0;  // valid / compiled
  bool data_loss = false;
  std::vector<std::string> warnings;
};

inline nlohmann::json to_json(const CampaignSummary& s) {
  return nlohmann::json{{"programs_generated", s.programs_generated},
                        {"programs_compiled", s.programs_compiled},
                        {"migrant_reevals", s.migrant_reevals},
                        {"valid_programs", s.valid_programs},
                        {"unique_bugs", s.unique_bugs},
                        {"distillation_programs", s.distillation_programs},
                        {"union_frontier", s.union_frontier},
                        {"island_frontiers", s.island_frontiers},
                        {"elapsed_seconds", s.elapsed_seconds},
                        {"validity_rate", s.validity_rate},
                        {"data_loss", s.data_loss},
                        {"warnings", s.warnings}};
}

inline CampaignSummary summary_from_json(const nlohmann::json& j) {
  CampaignSummary s;
  s.programs_generated = j.at("programs_generated").get<std::uint64_t>();
  s.programs_compiled = j.at("programs_compiled").get<std::uint64_t>();
  s.migrant_reevals = j.at("migrant_reevals").get<std::uint64_t>();
  s.valid_programs = j.at("valid_programs").get<std::uint64_t>();
  s.unique_bugs = j.at("unique_bugs").get<std::uint64_t>();
  s.distillation_programs = j.at("distillation_programs").get<std::uint64_t>();
  s.union_frontier = j.at("union_frontier").get<std::uint64_t>();
  s.island_frontiers = j.at("island_frontiers").get<std::vector<std::uint64_t>>();
  s.elapsed_seconds = j.at("elapsed_seconds").get<double>();
  s.validity_rate = j.at("validity_rate").get<double>();
  s.data_loss = j.at("data_loss").get<bool>();
  s.warnings = j.at("warnings").get<std::vector<std::string>>();
  return s;
}

inline std::unique_ptr<GenerationProvider> make_provider(const CampaignConfig& cfg) {
  if (cfg.generation.provider == ProviderKind::mock)
    return std::make_unique<MockProvider>(cfg.generation.mock, cfg.rng_seed);
  return std::make_unique<HttpProvider>(cfg.generation.http, [](int ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  });
}

inline std::unique_ptr<SutHarness> make_harness(const CampaignConfig& cfg) {
  if (cfg.sut.kind == SutKind::process) return std::make_unique<ProcessSut>(cfg.sut);
  return std::make_unique<SimulatedSut>(cfg.sut, cfg.rng_seed);
}

namespace evodetail {

inline std::string load_docs(const CampaignConfig& cfg) {
  if (!cfg.docs_path.empty()) {
    std::ifstream f(cfg.docs_path, std::ios::binary);
    if (!f) throw ConfigError("docs_path is not readable: " + cfg.docs_path);
    std::ostringstream text;
    text << f.rdbuf();
    return std::move(text).str();
  }
  return cfg.docs;
}

inline constexpr const char* kFallbackBasePrompt =
    "Write a single self-contained C program that exercises unusual corners of the "
    "language. Output only code.\n";

inline TimeSeriesPoint sample_timeseries(CampaignState& st, const CampaignConfig& cfg) {
  TimeSeriesPoint p;
  p.t = st.clock->now() - st.start_time;
  CoverageSet all;
  for (std::size_t i = 0; i < st.islands.size(); ++i) {
    std::lock_guard<std::mutex> lock(*st.island_locks[i]);
    p.island_frontiers.push_back(st.islands[i].frontier.size());
    all.union_in_place(st.islands[i].frontier);
  }
  if (cfg.scoring.coverage_mode == CoverageMode::global) {
    std::lock_guard<std::mutex> g(st.global_mu);
    p.union_frontier = st.global_frontier.size();
  } else {
    p.union_frontier = all.size();
  }
  p.programs_generated = st.programs_generated.load();
  p.programs_compiled = st.programs_compiled.load();
  p.valid_programs = st.valid_programs.load();
  p.unique_bugs = st.ledger->size();
  return p;
}

// A worker abandons the campaign after this many consecutive provider
// failures; with the in-call retries that is a long outage, not a blip.
inline constexpr int kMaxConsecutiveProviderSkips = 25;

}  // namespace evodetail

// Runs a full campaign: distillation (or a saved initialization), island
// setup, N worker loops against the shared state, periodic time-series
// samples, one last migration check, and the summary. The clock is injected
// so simulated runs replay exactly.
inline CampaignSummary run_campaign(const CampaignConfig& cfg, GenerationProvider& provider,
                                    SutHarness& harness, BugLedger& ledger, Clock& clock,
                                    OutputWriter* writer = nullptr) {
  if (cfg.budget_programs == 0 && cfg.budget_seconds == 0)
    throw ConfigError("campaign needs a program or time budget");

  CampaignSummary summary;
  CampaignState state(cfg, clock, ledger);
  if (writer) writer->write_config(cfg);

  // Stage 1: prompt initialization, reused from disk when configured.
  DistillationResult distilled;
  if (!cfg.generation.distillation.load_from.empty()) {
    std::ifstream f(cfg.generation.distillation.load_from, std::ios::binary);
    if (!f)
      throw ConfigError("distillation.load_from is not readable: " +
                        cfg.generation.distillation.load_from);
    distilled = distillation_from_json(nlohmann::json::parse(f));
  } else {
    std::string docs = evodetail::load_docs(cfg);
    if (docs.empty()) {
      distilled.base_prompt = evodetail::kFallbackBasePrompt;
      distilled.warnings.push_back("no documentation supplied; using the fallback prompt");
    } else {
      distilled = run_distillation(docs, provider, harness, cfg.n_islands, cfg.generation);
    }
  }
  summary.distillation_programs = distilled.programs_compiled;
  for (const auto& w : distilled.warnings) summary.warnings.push_back(w);
  for (auto& isl : state.islands) {
    isl.prompt_state.base_prompt = distilled.base_prompt;
    if (distilled.island_instructions.empty()) continue;
    std::size_t pick = cfg.generation.shared_instruction
                           ? 0
                           : isl.id % distilled.island_instructions.size();
    isl.prompt_state.seed_instruction = distilled.island_instructions[pick];
  }
  if (writer) writer->write_distillation(distilled);

  state.corpus = load_warm_start_corpus(cfg.warm_start.corpus_dir, &summary.warnings);

  // Stage 2: the evolutionary loop.
  std::size_t n_workers = cfg.workers > 0 ? cfg.workers : state.islands.size();
  std::mutex warn_mu;
  auto worker_main = [&](std::size_t w) {
    Rng rng = new_campaign_rng(cfg.rng_seed, "worker-" + std::to_string(w));
    int consecutive_skips = 0;
    while (!budget_exhausted(state, cfg)) {
      IterationReport rep = worker_iteration(state, provider, harness, cfg, rng, writer);
      if (rep.provider_skipped) {
        if (++consecutive_skips >= evodetail::kMaxConsecutiveProviderSkips) {
          std::lock_guard<std::mutex> lock(warn_mu);
          summary.warnings.push_back("worker " + std::to_string(w) + " stopped after " +
                                     std::to_string(consecutive_skips) +
                                     " consecutive provider failures");
          break;
        }
      } else {
        consecutive_skips = 0;
      }
    }
  };

  double last_sample = clock.now();
  auto due = [&] {
    return cfg.timeseries_interval_seconds > 0 &&
           clock.now() - last_sample >= cfg.timeseries_interval_seconds;
  };
  if (n_workers <= 1) {
    Rng rng = new_campaign_rng(cfg.rng_seed, "worker-0");
    int consecutive_skips = 0;
    while (!budget_exhausted(state, cfg)) {
      IterationReport rep = worker_iteration(state, provider, harness, cfg, rng, writer);
      if (rep.provider_skipped) {
        if (++consecutive_skips >= evodetail::kMaxConsecutiveProviderSkips) {
          summary.warnings.push_back("worker 0 stopped after " +
                                     std::to_string(consecutive_skips) +
                                     " consecutive provider failures");
          break;
        }
      } else {
        consecutive_skips = 0;
      }
      if (writer && due()) {
        last_sample = clock.now();
        writer->append_timeseries(evodetail::sample_timeseries(state, cfg));
      }
    }
  } else {
    std::vector<std::thread> workers;
    std::atomic<std::size_t> active{n_workers};
    for (std::size_t w = 0; w < n_workers; ++w)
      workers.emplace_back([&, w] {
        worker_main(w);
        active.fetch_sub(1);
      });
    while (active.load() > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      if (writer && due()) {
        last_sample = clock.now();
        writer->append_timeseries(evodetail::sample_timeseries(state, cfg));
      }
    }
    for (auto& t : workers) t.join();
  }

  // Give a just-elapsed migration window one final chance to fire.
  Rng mig_rng = new_campaign_rng(cfg.rng_seed, "final-migration");
  maybe_migrate(state, cfg, harness, mig_rng, writer);

  TimeSeriesPoint final_point = evodetail::sample_timeseries(state, cfg);
  if (writer) writer->append_timeseries(final_point);

  summary.programs_generated = state.programs_generated.load();
  summary.programs_compiled = state.programs_compiled.load();
  summary.migrant_reevals = state.migrant_reevals.load();
  summary.valid_programs = state.valid_programs.load();
  summary.unique_bugs = ledger.size();
  summary.union_frontier = final_point.union_frontier;
  summary.island_frontiers = final_point.island_frontiers;
  summary.elapsed_seconds = clock.now() - state.start_time;
  summary.validity_rate = summary.programs_compiled
                              ? double(summary.valid_programs) / double(summary.programs_compiled)
                              : 0.0;
  if (writer) {
    writer->flush();
    summary.data_loss = writer->had_errors();
    writer->write_summary(to_json(summary));
    writer->flush();
  }
  return summary;
}

}  // namespace funfuzz
