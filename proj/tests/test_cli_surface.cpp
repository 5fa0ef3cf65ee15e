#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "funfuzz/features.hpp"
#include "funfuzz/report.hpp"

using namespace funfuzz;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() /
                 ("funfuzz-cli-" + tag + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

CampaignConfig experiment_cfg(std::uint64_t seed, std::uint64_t budget) {
  CampaignConfig cfg;
  cfg.n_islands = 2;
  cfg.rng_seed = seed;
  cfg.budget_programs = budget;
  cfg.docs = "The compiler accepts C11: _Generic, VLAs, compound literals, computed goto.\n";
  cfg.generation.samples_per_call = 4;
  cfg.generation.distillation.candidates_low_temp = 1;
  cfg.generation.distillation.candidates_high_temp = 2;
  cfg.generation.distillation.programs_per_candidate = 4;
  cfg.generation.distillation.programs_per_hybrid = 3;
  cfg.sut.simulated.validity_rate = 0.8;
  return cfg;
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr, merged
};

CliResult run_cli(const std::string& args) {
  CliResult r;
  std::string cmd = std::string(FUNFUZZ_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[512];
  while (std::fgets(buf, sizeof(buf), pipe)) r.output += buf;
  int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_CASE("feature detection respects comments, strings, and token boundaries") {
  auto det = default_detectors();
  CHECK(detect_feature("typedef int T;", "typedef", det));
  CHECK_FALSE(detect_feature("/* typedef */ int x;", "typedef", det));
  CHECK_FALSE(detect_feature("goto done;", "union", det));

  CHECK_FALSE(detect_feature("const char* s = \"typedef\";", "typedef", det));
  CHECK_FALSE(detect_feature("int typedefs = 0;", "typedef", det));
  CHECK_FALSE(detect_feature("int mytypedef = 0;", "typedef", det));
  CHECK(detect_feature("// c\ntypedef long L;\n", "typedef", det));
  CHECK(detect_feature("std::variant<int, float> v;", "std::variant", det));
  CHECK_FALSE(detect_feature("int variant = 3;", "std::variant", det));
  CHECK(detect_feature("union U { int a; };", "union", det));

  CHECK_THROWS_AS(detect_feature("int x;", "no-such-feature", det), ConfigError);
}

TEST_CASE("hit rates are recounted from the stored programs") {
  fs::path dir = scratch_dir("hits");
  fs::create_directories(dir / "programs");
  std::ofstream(dir / "programs" / "a.c") << "typedef int T; union U { T t; };\n";
  std::ofstream(dir / "programs" / "b.c") << "int main(void) { return 0; }\n";
  std::ofstream(dir / "programs" / "c.c") << "/* typedef */ union V { int x; };\n";

  auto rates = recount_hit_rates(dir, {"typedef", "union", "goto"}, default_detectors());
  REQUIRE(rates.size() == 3);
  CHECK(rates[0].feature == "typedef");
  CHECK(rates[0].hits == 1);
  CHECK(rates[0].total == 3);
  CHECK(rates[1].hits == 2);  // union appears outside comments twice
  CHECK(rates[2].hits == 0);
  fs::remove_all(dir);
}

TEST_CASE("report derives its files and is byte-stable across reruns") {
  CampaignConfig cfg = experiment_cfg(202, 150);
  cfg.targeted_features = {"typedef"};
  cfg.migration.period_seconds = 3.0;  // several firings over the metered run
  fs::path dir = scratch_dir("report");
  CampaignSummary summary = run_experiment_arm(cfg, dir.string());
  REQUIRE(summary.programs_compiled > 0);

  ReportResult first = report(dir);
  CHECK(first.have_summary);
  CHECK(first.have_timeseries);
  CHECK(first.gaps.empty());
  CHECK(first.summary_table.find("Progs\tValid %\tCoverage\n") == 0);
  // The recount walks distinct persisted programs; duplicates share a file.
  REQUIRE(first.hit_rates.size() == 1);
  CHECK(first.hit_rates[0].total > 0);
  CHECK(first.hit_rates[0].total <= summary.programs_compiled);

  for (const char* name :
       {"summary.tsv", "summary.json", "coverage_timeseries.tsv", "hit_rates.tsv"})
    CHECK(fs::exists(first.report_dir / name));
  if (summary.unique_bugs > 0) CHECK(fs::exists(first.report_dir / "bugs_timeseries.tsv"));

  // Purity: a second run reproduces every derived file byte for byte.
  std::map<std::string, std::string> before;
  for (const auto& e : fs::directory_iterator(first.report_dir))
    before[e.path().filename()] = slurp(e.path());
  ReportResult second = report(dir);
  for (const auto& e : fs::directory_iterator(second.report_dir)) {
    REQUIRE(before.count(e.path().filename()) == 1);
    CHECK(before[e.path().filename()] == slurp(e.path()));
  }

  // The reported validity matches a brute-force recount of the records.
  std::size_t success = 0, total = 0;
  std::ifstream evals(dir / "evaluations.jsonl");
  std::string line;
  while (std::getline(evals, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    ++total;
    if (j.at("classification") == "success") ++success;
  }
  CHECK(total == summary.programs_compiled);
  CHECK(summary.validity_rate == double(success) / double(total));

  fs::remove_all(dir);
}

TEST_CASE("report on an incomplete directory lists the gaps instead of failing") {
  fs::path dir = scratch_dir("gaps");
  ReportResult res = report(dir);
  CHECK_FALSE(res.have_summary);
  CHECK_FALSE(res.have_timeseries);
  CHECK_FALSE(res.have_ledger);
  CHECK(res.gaps.size() >= 3);
  CHECK(fs::exists(res.report_dir / "gaps.txt"));
  fs::remove_all(dir);
}

TEST_CASE("report computes pairwise ledger overlap across campaigns") {
  CampaignConfig cfg = experiment_cfg(33, 220);
  cfg.sut.simulated.bug_probability = 1.0;
  cfg.sut.simulated.clusters = 40;
  cfg.sut.simulated.bug_pairs = 30;
  fs::path a = scratch_dir("overlap-a"), b = scratch_dir("overlap-b");
  CampaignSummary sa = run_experiment_arm(cfg, a.string());
  CampaignSummary sb = run_experiment_arm(cfg, b.string());  // identical seed: same bugs
  REQUIRE(sa.unique_bugs > 0);
  REQUIRE(sa.unique_bugs == sb.unique_bugs);

  ReportResult res = report(a, {b});
  REQUIRE(res.overlaps.size() == 1);
  CHECK(res.overlaps[0].shared == sa.unique_bugs);
  CHECK(res.overlaps[0].only_a == 0);
  CHECK(res.overlaps[0].only_b == 0);
  CHECK(fs::exists(res.report_dir / "ledger_overlap.tsv"));

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("ablation rows run matched seeds and validate the toggle name") {
  CampaignConfig cfg = experiment_cfg(55, 120);
  CHECK_THROWS_AS(ablate(cfg, "+Bogus"), ConfigError);

  AblationRow row = ablate(cfg, "+Filter");
  CHECK(row.toggle == "+Filter");
  CHECK(row.baseline.programs_generated + row.baseline.migrant_reevals == 120);
  CHECK(row.variant.programs_generated + row.variant.migrant_reevals == 120);
  CHECK(row.baseline.union_frontier > 0);
  CHECK(row.variant.union_frontier > 0);
}

TEST_CASE("every documented toggle maps onto the scoring config") {
  for (const auto& name : ablation_toggles()) {
    ScoringConfig base, toggled = base;
    apply_toggle(toggled, name);
    CHECK(!(toggled == base));  // each toggle changes exactly its own knob
  }
}

TEST_CASE("topology comparison sweeps counts and both migration modes") {
  CampaignConfig cfg = experiment_cfg(66, 100);
  CHECK_THROWS_AS(compare_topologies(cfg, {}), ConfigError);
  CHECK_THROWS_AS(compare_topologies(cfg, {0}), ConfigError);

  auto cells = compare_topologies(cfg, {1, 2});
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].islands == 1);
  CHECK(cells[0].mode == MigrationMode::soft);
  CHECK(cells[1].mode == MigrationMode::full_reset);
  CHECK(cells[2].islands == 2);
  for (const auto& c : cells) CHECK(c.summary.union_frontier > 0);

  std::string table = topology_table(cells);
  CHECK(table.find("islands\tmode\tcoverage") == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);  // header + 4 rows
}

TEST_CASE("the command line front end wires the subcommands together") {
  CliResult help = run_cli("--help");
  CHECK(help.exit_code == 0);
  for (const char* sub : {"run", "report", "ablate", "compare-topologies", "reverify", "distill"})
    CHECK(help.output.find(sub) != std::string::npos);

  CHECK(run_cli("").exit_code != 0);            // a subcommand is required
  CHECK(run_cli("run").exit_code != 0);         // --out is required to run
  CHECK(run_cli("ablate +Fail --config /nonexistent.json").exit_code != 0);

  fs::path dir = scratch_dir("cli-run");
  fs::path cfg_path = dir / "cfg.json";
  {
    std::ofstream f(cfg_path);
    f << R"({
      "campaign": {"n_islands": 2, "rng_seed": 3, "budget_programs": 60, "workers": 1,
                   "docs": "C11: _Generic, VLAs, compound literals."},
      "generation": {"provider": "mock", "samples_per_call": 4,
                     "distillation": {"candidates_low_temp": 1, "candidates_high_temp": 2,
                                      "programs_per_candidate": 3, "programs_per_hybrid": 2}},
      "sut": {"kind": "simulated"}
    })";
  }
  fs::path out = dir / "out";
  CliResult run = run_cli("run --config " + cfg_path.string() + " --out " + out.string() +
                          " --seed 99 --budget-programs 50");
  INFO(run.output);
  CHECK(run.exit_code == 0);
  CHECK(run.output.find("Progs\tValid %\tCoverage") != std::string::npos);
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "evaluations.jsonl"));

  // Flag overrides land in the persisted config echo.
  auto echoed = nlohmann::json::parse(slurp(out / "config.json"));
  CHECK(echoed.at("campaign").at("rng_seed").get<std::uint64_t>() == 99);
  CHECK(echoed.at("campaign").at("budget_programs").get<std::uint64_t>() == 50);

  CliResult rep = run_cli("report " + out.string());
  CHECK(rep.exit_code == 0);
  CHECK(rep.output.find("report written to") != std::string::npos);
  CHECK(fs::exists(out / "report" / "summary.tsv"));

  CliResult rev = run_cli("reverify --config " + cfg_path.string() + " " + out.string());
  CHECK(rev.exit_code == 0);

  fs::remove_all(dir);
}
