#pragma once

// Post-campaign reporting and the experiment harness. report() is a pure
// function of a campaign directory: it derives summary tables, coverage and
// bug time series, targeted-feature hit rates and cross-campaign ledger
// overlaps, and rerunning it writes byte-identical files. ablate() and
// compare_topologies() run matched-seed campaigns against the simulated
// target so scoring toggles and island topologies can be compared cheaply.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "funfuzz/config.hpp"
#include "funfuzz/evolve.hpp"
#include "funfuzz/features.hpp"
#include "funfuzz/persist.hpp"
#include "funfuzz/triage.hpp"

namespace funfuzz {

namespace repdetail {

inline std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream f(p);
  if (!f.good()) return out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_discarded()) out.push_back(std::move(j));
  }
  return out;
}

inline bool write_text(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << content;
  return bool(f);
}

inline std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir,
                                                       const std::string& ext) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return files;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().extension() == ext) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace repdetail

struct FeatureHitRate {
  std::string feature;
  std::size_t hits = 0;
  std::size_t total = 0;
  double rate() const { return total ? double(hits) / double(total) : 0.0; }
};

// Brute-force recount over every persisted program, the ground truth any
// campaign-reported hit rate must match.
inline std::vector<FeatureHitRate> recount_hit_rates(
    const std::filesystem::path& campaign_dir, const std::vector<std::string>& features,
    const std::map<std::string, std::string>& detectors) {
  std::vector<FeatureHitRate> out;
  auto files = repdetail::sorted_files(campaign_dir / "programs", ".c");
  std::vector<std::string> sources;
  sources.reserve(files.size());
  for (const auto& p : files) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    sources.push_back(std::move(s).str());
  }
  for (const auto& feature : features) {
    FeatureHitRate r;
    r.feature = feature;
    r.total = sources.size();
    for (const auto& src : sources)
      if (detect_feature(src, feature, detectors)) ++r.hits;
    out.push_back(std::move(r));
  }
  return out;
}

struct LedgerOverlap {
  std::string dir_a, dir_b;
  std::size_t shared = 0;
  std::size_t only_a = 0;
  std::size_t only_b = 0;
};

struct ReportResult {
  std::filesystem::path report_dir;
  bool have_summary = false;
  bool have_timeseries = false;
  bool have_ledger = false;
  CampaignSummary summary;
  std::string summary_table;  // the Progs / Valid % / Coverage row
  std::vector<FeatureHitRate> hit_rates;
  std::vector<LedgerOverlap> overlaps;
  std::vector<std::string> gaps;  // artifacts that were missing
};

// Derives every report artifact under <dir>/report. Missing inputs produce
// an explicit gap entry instead of an error, so a partial campaign still
// yields a partial report.
inline ReportResult report(const std::filesystem::path& dir,
                           const std::vector<std::filesystem::path>& compare = {}) {
  namespace fs = std::filesystem;
  ReportResult res;
  res.report_dir = dir / "report";
  std::error_code ec;
  fs::create_directories(res.report_dir, ec);
  if (ec) throw ConfigError("cannot create report directory: " + res.report_dir.string());

  // Summary table, mirroring the campaign's headline columns.
  if (fs::exists(dir / "summary.json")) {
    std::ifstream f(dir / "summary.json");
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (!j.is_discarded()) {
      res.summary = summary_from_json(j);
      res.have_summary = true;
      std::ostringstream t;
      t << "Progs\tValid %\tCoverage\n"
        << res.summary.programs_generated << "\t"
        << repdetail::fmt(100.0 * res.summary.validity_rate, 1) << "\t"
        << res.summary.union_frontier << "\n";
      res.summary_table = t.str();
      repdetail::write_text(res.report_dir / "summary.tsv", res.summary_table);
      repdetail::write_text(res.report_dir / "summary.json", to_json(res.summary).dump(2) + "\n");
    }
  }
  if (!res.have_summary) res.gaps.push_back("summary.json missing or unreadable");

  // Coverage over time, one column per island plus the union.
  auto series = repdetail::read_jsonl(dir / "timeseries.jsonl");
  if (!series.empty()) {
    res.have_timeseries = true;
    std::size_t n_islands = series.front().value("island_frontiers", nlohmann::json::array()).size();
    std::ostringstream t;
    t << "t";
    for (std::size_t i = 0; i < n_islands; ++i) t << "\tisland" << i;
    t << "\tunion\n";
    for (const auto& p : series) {
      t << repdetail::fmt(p.value("t", 0.0));
      auto fronts = p.value("island_frontiers", std::vector<std::uint64_t>{});
      fronts.resize(n_islands, 0);
      for (auto v : fronts) t << "\t" << v;
      t << "\t" << p.value("union_frontier", std::uint64_t(0)) << "\n";
    }
    repdetail::write_text(res.report_dir / "coverage_timeseries.tsv", t.str());
  } else {
    res.gaps.push_back("timeseries.jsonl missing or empty");
  }

  // Cumulative unique bugs over time, from the ledger's first-seen stamps.
  // A present-but-empty ledger means a bug-free campaign, not a gap.
  BugLedger ledger;
  if (fs::is_directory(dir / "bugs")) {
    ledger = BugLedger::load(dir / "bugs");
    res.have_ledger = true;
    std::vector<double> stamps;
    for (const auto& [hex, entry] : ledger.entries()) stamps.push_back(entry.first_seen);
    std::sort(stamps.begin(), stamps.end());
    std::ostringstream t;
    t << "t\tunique_bugs\n";
    for (std::size_t i = 0; i < stamps.size(); ++i)
      t << repdetail::fmt(stamps[i]) << "\t" << (i + 1) << "\n";
    repdetail::write_text(res.report_dir / "bugs_timeseries.tsv", t.str());
  } else {
    res.gaps.push_back("bug ledger missing");
  }

  // Targeted-feature hit rates, recounted from the stored programs.
  if (fs::exists(dir / "config.json")) {
    std::ifstream f(dir / "config.json");
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (!j.is_discarded()) {
      CampaignConfig cfg = load_config_json(j);
      if (!cfg.targeted_features.empty()) {
        res.hit_rates = recount_hit_rates(dir, cfg.targeted_features, cfg.detectors);
        std::ostringstream t;
        t << "feature\thits\ttotal\trate\n";
        for (const auto& r : res.hit_rates)
          t << r.feature << "\t" << r.hits << "\t" << r.total << "\t"
            << repdetail::fmt(r.rate()) << "\n";
        repdetail::write_text(res.report_dir / "hit_rates.tsv", t.str());
      }
    }
  } else {
    res.gaps.push_back("config.json missing");
  }

  // Pairwise ledger overlap across campaign directories.
  if (!compare.empty()) {
    std::vector<std::pair<std::string, BugLedger>> ledgers;
    ledgers.emplace_back(dir.string(), std::move(ledger));
    for (const auto& other : compare)
      ledgers.emplace_back(other.string(), BugLedger::load(other / "bugs"));
    std::ostringstream t;
    t << "dir_a\tdir_b\tshared\tonly_a\tonly_b\n";
    for (std::size_t a = 0; a < ledgers.size(); ++a)
      for (std::size_t b = a + 1; b < ledgers.size(); ++b) {
        LedgerOverlap o;
        o.dir_a = ledgers[a].first;
        o.dir_b = ledgers[b].first;
        for (const auto& [hex, entry] : ledgers[a].second.entries())
          if (ledgers[b].second.entries().count(hex)) ++o.shared;
        o.only_a = ledgers[a].second.size() - o.shared;
        o.only_b = ledgers[b].second.size() - o.shared;
        t << o.dir_a << "\t" << o.dir_b << "\t" << o.shared << "\t" << o.only_a << "\t"
          << o.only_b << "\n";
        res.overlaps.push_back(std::move(o));
      }
    repdetail::write_text(res.report_dir / "ledger_overlap.tsv", t.str());
  }

  if (!res.gaps.empty()) {
    std::ostringstream t;
    for (const auto& g : res.gaps) t << g << "\n";
    repdetail::write_text(res.report_dir / "gaps.txt", t.str());
  }
  return res;
}

// ---------------------------------------------------------------------------
// Experiment harness

// Advances a simulated clock by each unit's reported compile time, so
// campaign "time" is the deterministic sum of simulated compile seconds and
// the migration timer fires on a reproducible schedule.
class MeteredSut : public SutHarness {
 public:
  MeteredSut(SutHarness& inner, SimulatedClock& clock) : inner_(inner), clock_(clock) {}
  SutResult compile(const std::string& unit) override {
    SutResult r = inner_.compile(unit);
    clock_.advance(r.compile_time_s);
    return r;
  }
  bool probe_header(const std::string& name) override { return inner_.probe_header(name); }

 private:
  SutHarness& inner_;
  SimulatedClock& clock_;
};

// One deterministic arm of an experiment: simulated SUT, single worker,
// metered clock. Pass an output directory to persist the run, or empty to
// keep it in memory.
inline CampaignSummary run_experiment_arm(CampaignConfig cfg, const std::string& out_dir = "") {
  cfg.sut.kind = SutKind::simulated;
  cfg.workers = 1;
  SimulatedClock clock;
  SimulatedSut sim(cfg.sut, cfg.rng_seed);
  MeteredSut sut(sim, clock);
  auto provider = make_provider(cfg);
  std::optional<OutputWriter> writer;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    writer.emplace(out_dir);
  }
  BugLedger ledger = out_dir.empty() ? BugLedger()
                                     : BugLedger(std::filesystem::path(out_dir) / "bugs");
  return run_campaign(cfg, *provider, sut, ledger, clock, writer ? &*writer : nullptr);
}

inline const std::vector<std::string>& ablation_toggles() {
  static const std::vector<std::string> t = {"+Fail", "+Used", "+Time",  "+Score",
                                             "+Global", "+Zero", "+Filter"};
  return t;
}

inline void apply_toggle(ScoringConfig& s, const std::string& name) {
  if (name == "+Fail") s.use_fail_reward = true;
  else if (name == "+Used") s.used_policy = UsedPolicy::penalize;
  else if (name == "+Time") s.use_time_reward = true;
  else if (name == "+Score") s.use_score_scaling = true;
  else if (name == "+Global") s.coverage_mode = CoverageMode::global;
  else if (name == "+Zero") s.keep_zero_contribution = true;
  else if (name == "+Filter") s.use_redundancy_filter = true;
  else
    throw ConfigError("unknown ablation toggle: " + name +
                      " (expected one of +Fail +Used +Time +Score +Global +Zero +Filter)");
}

struct AblationRow {
  std::string toggle;
  CampaignSummary baseline;
  CampaignSummary variant;
  // Relative coverage change, percent; 0 when the baseline found nothing.
  double delta_coverage_pct = 0;
};

// Baseline versus one enabled toggle, identical seeds throughout.
inline AblationRow ablate(const CampaignConfig& base, const std::string& toggle,
                          const std::string& out_dir = "") {
  AblationRow row;
  row.toggle = toggle;
  CampaignConfig variant = base;
  apply_toggle(variant.scoring, toggle);  // validates the name up front

  row.baseline = run_experiment_arm(base, out_dir.empty() ? "" : out_dir + "/baseline");
  row.variant =
      run_experiment_arm(variant, out_dir.empty() ? "" : out_dir + "/" + toggle.substr(1));
  if (row.baseline.union_frontier > 0)
    row.delta_coverage_pct = 100.0 *
                             (double(row.variant.union_frontier) -
                              double(row.baseline.union_frontier)) /
                             double(row.baseline.union_frontier);
  return row;
}

struct TopologyCell {
  std::size_t islands = 0;
  MigrationMode mode = MigrationMode::soft;
  CampaignSummary summary;
};

// Matched-seed sweep over island counts, soft versus full-reset migration.
inline std::vector<TopologyCell> compare_topologies(const CampaignConfig& base,
                                                    const std::vector<std::size_t>& counts,
                                                    const std::string& out_dir = "") {
  if (counts.empty()) throw ConfigError("compare-topologies needs at least one island count");
  for (std::size_t c : counts)
    if (c < 1) throw ConfigError("island counts must be at least 1");

  std::vector<TopologyCell> cells;
  for (std::size_t c : counts) {
    for (MigrationMode mode : {MigrationMode::soft, MigrationMode::full_reset}) {
      CampaignConfig cfg = base;
      cfg.n_islands = c;
      cfg.migration.mode = mode;
      TopologyCell cell;
      cell.islands = c;
      cell.mode = mode;
      std::string arm_dir;
      if (!out_dir.empty())
        arm_dir = out_dir + "/islands-" + std::to_string(c) + "-" + to_string(mode);
      cell.summary = run_experiment_arm(cfg, arm_dir);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

inline std::string topology_table(const std::vector<TopologyCell>& cells) {
  std::ostringstream t;
  t << "islands\tmode\tcoverage\tunique_bugs\tvalid_pct\n";
  for (const auto& c : cells)
    t << c.islands << "\t" << to_string(c.mode) << "\t" << c.summary.union_frontier << "\t"
      << c.summary.unique_bugs << "\t" << repdetail::fmt(100.0 * c.summary.validity_rate, 1)
      << "\n";
  return t.str();
}

}  // namespace funfuzz
