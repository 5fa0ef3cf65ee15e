// funfuzz: evolutionary compiler-fuzzing campaigns.
//
//   funfuzz run --config cfg.json --out dir        start a campaign
//   funfuzz report <dir> [more dirs...]            derive report files
//   funfuzz ablate --config cfg.json +Fail         baseline vs one toggle
//   funfuzz compare-topologies --config cfg.json 1 5 10
//   funfuzz reverify <dir>                         replay ledgered reproducers
//   funfuzz distill --config cfg.json --out f.json run prompt initialization only

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "funfuzz/evolve.hpp"
#include "funfuzz/report.hpp"

namespace fs = std::filesystem;
using namespace funfuzz;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> budget_programs;
  std::optional<double> budget_seconds;
  std::string sut;       // "", "process", "simulated"
  std::string provider;  // "", "http", "mock"
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config_path, "campaign config file (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "override rng_seed");
  cmd->add_option("--budget-programs", f.budget_programs, "override the program budget");
  cmd->add_option("--budget-seconds", f.budget_seconds, "override the time budget");
  cmd->add_option("--sut", f.sut, "override the target kind")
      ->check(CLI::IsMember({"process", "simulated"}));
  cmd->add_option("--provider", f.provider, "override the generation provider")
      ->check(CLI::IsMember({"http", "mock"}));
}

CampaignConfig load_with_overrides(const CommonFlags& f) {
  CampaignConfig cfg = f.config_path.empty() ? CampaignConfig() : load_config_file(f.config_path);
  if (f.seed) cfg.rng_seed = *f.seed;
  if (f.budget_programs) cfg.budget_programs = *f.budget_programs;
  if (f.budget_seconds) cfg.budget_seconds = *f.budget_seconds;
  if (f.sut == "process") cfg.sut.kind = SutKind::process;
  if (f.sut == "simulated") cfg.sut.kind = SutKind::simulated;
  if (f.provider == "http") cfg.generation.provider = ProviderKind::http;
  if (f.provider == "mock") cfg.generation.provider = ProviderKind::mock;
  return cfg;
}

int cmd_run(const CommonFlags& flags) {
  CampaignConfig cfg = load_with_overrides(flags);
  if (flags.out.empty()) {
    std::cerr << "run: --out is required\n";
    return 1;
  }
  fs::create_directories(flags.out);
  OutputWriter writer(flags.out);
  BugLedger ledger(fs::path(flags.out) / "bugs",
                   cfg.sut.process.source_extension.empty() ? ".c"
                                                            : cfg.sut.process.source_extension);
  auto provider = make_provider(cfg);
  auto harness = make_harness(cfg);
  SteadyClock clock;
  CampaignSummary summary = run_campaign(cfg, *provider, *harness, ledger, clock, &writer);

  std::printf("Progs\tValid %%\tCoverage\n");
  std::printf("%llu\t%.1f\t%llu\n",
              static_cast<unsigned long long>(summary.programs_generated),
              100.0 * summary.validity_rate,
              static_cast<unsigned long long>(summary.union_frontier));
  std::printf("unique bugs: %llu, elapsed: %.1fs\n",
              static_cast<unsigned long long>(summary.unique_bugs), summary.elapsed_seconds);
  for (const auto& w : summary.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (summary.data_loss) {
    std::fprintf(stderr, "warning: some records were lost while writing output\n");
    return 2;
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs) {
  std::vector<fs::path> compare(dirs.begin() + 1, dirs.end());
  ReportResult res = report(dirs.front(), compare);
  if (res.have_summary) std::fputs(res.summary_table.c_str(), stdout);
  for (const auto& r : res.hit_rates)
    std::printf("hit rate %s: %zu/%zu = %.3f\n", r.feature.c_str(), r.hits, r.total, r.rate());
  for (const auto& o : res.overlaps)
    std::printf("overlap %s vs %s: %zu shared (%zu/%zu exclusive)\n", o.dir_a.c_str(),
                o.dir_b.c_str(), o.shared, o.only_a, o.only_b);
  for (const auto& g : res.gaps) std::fprintf(stderr, "gap: %s\n", g.c_str());
  std::printf("report written to %s\n", res.report_dir.string().c_str());
  return 0;
}

int cmd_ablate(const CommonFlags& flags, const std::string& toggle) {
  CampaignConfig cfg = load_with_overrides(flags);
  AblationRow row = ablate(cfg, toggle, flags.out);
  std::printf("toggle\tbase_cov\tcov\tdelta_pct\tbase_bugs\tbugs\n");
  std::printf("%s\t%llu\t%llu\t%+.1f\t%llu\t%llu\n", row.toggle.c_str(),
              static_cast<unsigned long long>(row.baseline.union_frontier),
              static_cast<unsigned long long>(row.variant.union_frontier),
              row.delta_coverage_pct,
              static_cast<unsigned long long>(row.baseline.unique_bugs),
              static_cast<unsigned long long>(row.variant.unique_bugs));
  return 0;
}

int cmd_compare_topologies(const CommonFlags& flags, const std::vector<std::size_t>& counts) {
  CampaignConfig cfg = load_with_overrides(flags);
  auto cells = compare_topologies(cfg, counts, flags.out);
  std::fputs(topology_table(cells).c_str(), stdout);
  return 0;
}

int cmd_reverify(const CommonFlags& flags, const std::string& dir) {
  CampaignConfig cfg = load_with_overrides(flags);
  fs::path bugs = fs::path(dir);
  if (fs::exists(bugs / "bugs" / "index.json")) bugs /= "bugs";
  BugLedger ledger = BugLedger::load(bugs);
  if (ledger.size() == 0) {
    std::printf("no ledger entries under %s\n", bugs.string().c_str());
    return 0;
  }
  auto harness = make_harness(cfg);
  ReverifyReport rep = reverify(ledger, *harness, cfg.sut.failure_markers);
  for (const auto& [hex, outcome] : rep.outcomes)
    std::printf("%s\t%s\n", hex.c_str(), to_string(outcome));
  std::printf("still-reproduces: %zu, shifted: %zu, fixed: %zu, unverifiable: %zu\n",
              rep.count(ReverifyOutcome::still_reproduces), rep.count(ReverifyOutcome::shifted),
              rep.count(ReverifyOutcome::fixed), rep.count(ReverifyOutcome::unverifiable));
  return 0;
}

int cmd_distill(const CommonFlags& flags) {
  CampaignConfig cfg = load_with_overrides(flags);
  std::string docs;
  if (!cfg.docs_path.empty()) {
    std::ifstream f(cfg.docs_path, std::ios::binary);
    if (!f) throw ConfigError("docs_path is not readable: " + cfg.docs_path);
    std::ostringstream s;
    s << f.rdbuf();
    docs = std::move(s).str();
  } else {
    docs = cfg.docs;
  }
  if (docs.empty()) throw ConfigError("distill needs docs or docs_path in the config");

  auto provider = make_provider(cfg);
  auto harness = make_harness(cfg);
  DistillationResult result =
      run_distillation(docs, *provider, *harness, cfg.n_islands, cfg.generation);

  std::string out_path = flags.out.empty() ? "distillation.json" : flags.out;
  if (fs::is_directory(out_path)) out_path = (fs::path(out_path) / "distillation.json").string();
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  out << to_json(result).dump(2) << "\n";
  if (!out) {
    std::cerr << "distill: cannot write " << out_path << "\n";
    return 1;
  }
  std::printf("chose %s batch, %zu island instructions, %llu programs spent; saved to %s\n",
              result.chosen_batch.c_str(), result.island_instructions.size(),
              static_cast<unsigned long long>(result.programs_compiled), out_path.c_str());
  for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolutionary compiler fuzzing"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "run a full campaign");
  add_common(run, run_flags, /*config_required=*/false);

  std::vector<std::string> report_dirs;
  auto* rep = app.add_subcommand("report", "derive report files from campaign output");
  rep->add_option("dirs", report_dirs, "campaign directory, plus optional comparison dirs")
      ->required()
      ->expected(-1);

  CommonFlags ablate_flags;
  std::string toggle;
  auto* abl = app.add_subcommand("ablate", "compare the baseline against one scoring toggle");
  add_common(abl, ablate_flags, /*config_required=*/false);
  abl->add_option("toggle", toggle, "+Fail, +Used, +Time, +Score, +Global, +Zero or +Filter")
      ->required();

  CommonFlags topo_flags;
  std::vector<std::size_t> counts;
  auto* topo = app.add_subcommand("compare-topologies", "sweep island counts and migration modes");
  add_common(topo, topo_flags, /*config_required=*/false);
  topo->add_option("counts", counts, "island counts to compare")->required()->expected(-1);

  CommonFlags rev_flags;
  std::string rev_dir;
  auto* rev = app.add_subcommand("reverify", "replay every ledgered reproducer");
  add_common(rev, rev_flags, /*config_required=*/false);
  rev->add_option("dir", rev_dir, "campaign or ledger directory")->required();

  CommonFlags distill_flags;
  auto* dis = app.add_subcommand("distill", "run prompt initialization only and save it");
  add_common(dis, distill_flags, /*config_required=*/true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_flags);
    if (rep->parsed()) return cmd_report(report_dirs);
    if (abl->parsed()) return cmd_ablate(ablate_flags, toggle);
    if (topo->parsed()) return cmd_compare_topologies(topo_flags, counts);
    if (rev->parsed()) return cmd_reverify(rev_flags, rev_dir);
    if (dis->parsed()) return cmd_distill(distill_flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
