#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "funfuzz/coverage_report.hpp"
#include "funfuzz/process_sut.hpp"

using namespace funfuzz;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static std::atomic<int> n{0};
  fs::path p = fs::temp_directory_path() /
               ("funfuzz-psut-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(n.fetch_add(1)));
  fs::create_directories(p);
  return p;
}

bool command_exists(const std::string& name) {
  return std::system(("command -v " + name + " >/dev/null 2>&1").c_str()) == 0;
}

// A tiny instrumented "compiler" with input-dependent branches:
//   BOOM           -> internal-error banner, exit 4
//   -x + SPIN      -> loops forever
//   -x + XRAY      -> rejected, exit 1
//   BAD            -> rejected, exit 1
//   otherwise      -> ok, exit 0
const char* kToySource = R"src(#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static char *slurp(const char *path) {
  FILE *f = fopen(path, "rb");
  if (!f) return NULL;
  fseek(f, 0, SEEK_END);
  long n = ftell(f);
  fseek(f, 0, SEEK_SET);
  char *buf = malloc((size_t)n + 1);
  if (fread(buf, 1, (size_t)n, f) != (size_t)n) { fclose(f); return NULL; }
  buf[n] = 0;
  fclose(f);
  return buf;
}

int main(int argc, char **argv) {
  int extended = 0;
  const char *input = NULL;
  for (int i = 1; i < argc; i++) {
    if (strcmp(argv[i], "-x") == 0) extended = 1;
    else input = argv[i];
  }
  if (!input) { fprintf(stderr, "usage: toycc [-x] file\n"); return 2; }
  char *text = slurp(input);
  if (!text) { fprintf(stderr, "error: cannot read %s\n", input); return 1; }
  if (extended && strstr(text, "SPIN")) {
    for (;;) {}
  }
  if (strstr(text, "BOOM")) {
    fprintf(stderr, "internal compiler error: in toy_fold, at toycc.c:31\n");
    return 4;
  }
  if (extended && strstr(text, "XRAY")) {
    fprintf(stderr, "toycc: extended mode diagnostic\n");
    fprintf(stderr, "error: XRAY not allowed\n");
    return 1;
  }
  if (strstr(text, "BAD")) {
    fprintf(stderr, "%s:1: error: BAD construct\n", input);
    return 1;
  }
  fprintf(stderr, "toycc: ok\n");
  return 0;
}
)src";

struct ToyFixture {
  fs::path dir;
  bool built = false;
};

const ToyFixture& toy_fixture() {
  static ToyFixture f = [] {
    ToyFixture t;
    if (!command_exists("gcc") || !command_exists("gcov")) return t;
    t.dir = fresh_dir("toy");
    std::ofstream(t.dir / "toycc.c") << kToySource;
    // The absolute source path is recorded in the .gcno, so gcov can resolve
    // the source later no matter which directory it runs from.
    std::string build = "cd " + t.dir.string() + " && gcc --coverage -O0 " +
                        (t.dir / "toycc.c").string() + " -o toycc";
    t.built = std::system((build + " >/dev/null 2>&1").c_str()) == 0;
    return t;
  }();
  return f;
}

SutConfig toy_config(std::vector<std::string> flag_sets = {""}) {
  const ToyFixture& f = toy_fixture();
  SutConfig cfg;
  cfg.kind = SutKind::process;
  cfg.process.compile = "GCOV_PREFIX={scratch}/cov GCOV_PREFIX_STRIP=99 " +
                        (f.dir / "toycc").string() + " {flags} {input}";
  cfg.process.coverage = "mkdir -p {scratch}/cov && cp " + (f.dir / "toycc.gcno").string() +
                         " {scratch}/cov/ && gcov -t -o {scratch}/cov " +
                         (f.dir / "toycc.c").string() + " > {report}";
  cfg.process.scratch_root = fresh_dir("toyscratch").string();
  cfg.process.flag_sets = std::move(flag_sets);
  return cfg;
}

SutConfig cc_config(const std::string& compile = "cc -c {input} -o {output} {flags}") {
  SutConfig cfg;
  cfg.kind = SutKind::process;
  cfg.process.compile = compile;
  cfg.process.scratch_root = fresh_dir("cc").string();
  return cfg;
}

std::string doubling_macro_unit(int levels) {
  std::string s = "#define A0 x\n";
  for (int i = 1; i <= levels; ++i)
    s += "#define A" + std::to_string(i) + " A" + std::to_string(i - 1) + " A" +
         std::to_string(i - 1) + "\n";
  s += "int main(void) { int x = 1; A" + std::to_string(levels) + "; return x; }\n";
  return s;
}

}  // namespace

TEST_CASE("file interner assigns stable ids and remembers names") {
  FileInterner fi;
  CHECK(fi.id_of("alpha.c") == 0);
  CHECK(fi.id_of("beta.c") == 1);
  CHECK(fi.id_of("alpha.c") == 0);
  CHECK(fi.size() == 2);
  CHECK(fi.name_of(0) == "alpha.c");
  CHECK(fi.name_of(1) == "beta.c");
  CHECK_THROWS_AS(fi.name_of(7), std::out_of_range);
}

TEST_CASE("classic gcov text records parse into covered line sets") {
  const char* report =
      "        -:    0:Source:alpha.c\n"
      "        -:    0:Graph:alpha.gcno\n"
      "        -:    0:Data:alpha.gcda\n"
      "        -:    0:Runs:2\n"
      "        -:    1:#include <stdio.h>\n"
      "        3:    2:int f(void) {\n"
      "       1*:    3:  if (g) h();\n"
      "    #####:    5:  dead();\n"
      "    =====:    6:  dead_eh();\n"
      "function f called 3 returned 100% blocks executed 80%\n"
      "branch  0 taken 1 (fallthrough)\n"
      "        7:    9:}\n"
      "        -:    0:Source:beta.c\n"
      "        1:    4:int g;\n";
  FileInterner fi;
  CoverageParse p = parse_coverage_report(report, fi);
  CHECK(p.files_seen == 2);
  CHECK(p.line_records == 6);
  CHECK(p.skipped_lines == 2);
  CHECK(p.recognized());
  CHECK(p.covered.size() == 4);
  std::uint32_t alpha = fi.id_of("alpha.c"), beta = fi.id_of("beta.c");
  CHECK(p.covered.contains(alpha, 2));
  CHECK(p.covered.contains(alpha, 3));
  CHECK(p.covered.contains(alpha, 9));
  CHECK(p.covered.contains(beta, 4));
  CHECK_FALSE(p.covered.contains(alpha, 1));
  CHECK_FALSE(p.covered.contains(alpha, 5));
  CHECK_FALSE(p.covered.contains(alpha, 6));
}

TEST_CASE("lcov records parse into covered line sets") {
  const char* report =
      "TN:smoke\n"
      "SF:/src/beta.c\n"
      "FN:3,main\n"
      "FNDA:2,main\n"
      "DA:3,2\n"
      "DA:4,0\n"
      "DA:7,1,abcDEF==\n"
      "LF:3\n"
      "LH:2\n"
      "end_of_record\n"
      "SF:gamma.c\n"
      "DA:1,1\n"
      "end_of_record\n";
  FileInterner fi;
  CoverageParse p = parse_coverage_report(report, fi);
  CHECK(p.files_seen == 2);
  CHECK(p.line_records == 4);
  CHECK(p.skipped_lines == 0);
  std::uint32_t beta = fi.id_of("/src/beta.c"), gamma = fi.id_of("gamma.c");
  CHECK(p.covered.size() == 3);
  CHECK(p.covered.contains(beta, 3));
  CHECK(p.covered.contains(beta, 7));
  CHECK_FALSE(p.covered.contains(beta, 4));
  CHECK(p.covered.contains(gamma, 1));
}

TEST_CASE("lcov records tolerate windows line endings") {
  FileInterner fi;
  CoverageParse p = parse_coverage_report("SF:delta.c\r\nDA:2,1\r\nend_of_record\r\n", fi);
  CHECK(p.covered.size() == 1);
  CHECK(p.covered.contains(fi.id_of("delta.c"), 2));
}

TEST_CASE("parsing the same report twice yields equal coverage sets") {
  std::string combined =
      "        -:    0:Source:alpha.c\n"
      "        5:    2:int f;\n"
      "    #####:    3:int g;\n"
      "SF:beta.c\n"
      "DA:10,1\n"
      "DA:11,0\n"
      "end_of_record\n";
  FileInterner a, b;
  CoverageParse pa = parse_coverage_report(combined, a);
  CoverageParse pb = parse_coverage_report(combined, b);
  CHECK(pa.covered == pb.covered);
  CHECK(pa.covered.size() == 2);

  CoverageSet u;
  u.union_in_place(pa.covered);
  CHECK(u == pa.covered);
  u.union_in_place(pb.covered);  // idempotent union
  CHECK(u == pa.covered);
  CoverageSet extra;
  extra.insert(99, 1);
  u.union_in_place(extra);
  CHECK(u.size() == pa.covered.size() + 1);
  CHECK(u.count_new(pa.covered) == 0);  // union keeps everything it had
}

TEST_CASE("garbage text yields no recognizable records") {
  FileInterner fi;
  CoverageParse p = parse_coverage_report("this is not a coverage report\n12345\ntotally:wrong\n", fi);
  CHECK_FALSE(p.recognized());
  CHECK(p.covered.empty());
  CHECK(p.skipped_lines == 3);
}

TEST_CASE("line records before any file context are skipped") {
  FileInterner fi;
  CoverageParse p = parse_coverage_report("        5:   12:x();\nDA:3,1\n", fi);
  CHECK_FALSE(p.recognized());
  CHECK(p.covered.empty());
  CHECK(p.skipped_lines == 2);
}

TEST_CASE("process sut defaults match the documented contract") {
  SutConfig cfg;
  CHECK(cfg.timeout_seconds == 30.0);
  CHECK(cfg.process.flag_sets == std::vector<std::string>{""});
  CHECK(cfg.process.source_extension == ".c");
  ProcessSutConfig p;
  CHECK(p.scratch_root.empty());
}

TEST_CASE("the real compiler accepts an empty translation unit") {
  if (!command_exists("cc")) SKIP("cc not available");
  ProcessSut sut(cc_config());
  SutResult r = sut.compile_with_coverage("");
  CHECK(r.classification == Classification::success);
  CHECK(r.exit_code == 0);
  CHECK(r.term_signal == 0);
  CHECK_FALSE(r.timed_out);
  CHECK(r.coverage.empty());
}

TEST_CASE("the real compiler rejects a syntax error as a benign error") {
  if (!command_exists("cc")) SKIP("cc not available");
  ProcessSut sut(cc_config());
  SutResult r = sut.compile_with_coverage("int main( {\n");
  CHECK(r.classification == Classification::benign_error);
  CHECK(r.exit_code == 1);
  CHECK(r.diagnostics.find("error:") != std::string::npos);
}

TEST_CASE("the real compiler accepts a valid unit and the wall time is recorded") {
  if (!command_exists("cc")) SKIP("cc not available");
  ProcessSut sut(cc_config());
  SutResult r = sut.compile_with_coverage("int main(void) { return 0; }\n");
  CHECK(r.classification == Classification::success);
  CHECK(r.compile_time_s > 0.0);
  CHECK(r.compile_time_s < 30.0);
}

TEST_CASE("a compile exceeding the timeout is killed as a hang") {
  if (!command_exists("cc")) SKIP("cc not available");
  SutConfig cfg = cc_config("cc -E {input} -o /dev/null");
  cfg.timeout_seconds = 1.0;
  ProcessSut sut(cfg);
  auto t0 = std::chrono::steady_clock::now();
  SutResult r = sut.compile_with_coverage(doubling_macro_unit(22));
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(r.classification == Classification::hang);
  CHECK(r.timed_out);
  // Unkilled, this expansion takes several seconds; a prompt return proves
  // the timeout actually terminated the compiler.
  CHECK(wall < 4.0);
}

TEST_CASE("the timeout kills the whole process group") {
  SutConfig cfg = cc_config("sleep 30 && echo never");
  cfg.timeout_seconds = 0.3;
  ProcessSut sut(cfg);
  auto t0 = std::chrono::steady_clock::now();
  SutResult r = sut.compile_with_coverage("x");
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(r.classification == Classification::hang);
  CHECK(r.timed_out);
  CHECK(wall < 2.0);  // a leaked sleep would hold the pipe open for 30 s
}

TEST_CASE("stdout and stderr are both captured as diagnostics") {
  ProcessSut sut(cc_config("echo out-line && echo err-line >&2 && exit 1"));
  SutResult r = sut.compile_with_coverage("x");
  CHECK(r.classification == Classification::benign_error);
  CHECK(r.diagnostics.find("out-line") != std::string::npos);
  CHECK(r.diagnostics.find("err-line") != std::string::npos);
}

TEST_CASE("oversized diagnostics are truncated at the cap") {
  ProcessSut sut(cc_config("head -c 5242880 /dev/zero | tr '\\0' a"));
  SutResult r = sut.compile_with_coverage("x");
  CHECK(r.classification == Classification::success);
  CHECK(r.diagnostics.size() < (5u << 20));
  CHECK(r.diagnostics.find("[output truncated]") != std::string::npos);
}

TEST_CASE("an internal-failure marker overrides a clean exit") {
  ProcessSut sut(cc_config("echo 'internal compiler error: in x, at y.c:1' >&2"));
  SutResult r = sut.compile_with_coverage("x");
  CHECK(r.classification == Classification::potential_bug);
  CHECK(r.exit_code == 0);
}

TEST_CASE("an unwritable scratch root raises an error") {
  SutConfig cfg = cc_config("true");
  cfg.process.scratch_root = "/proc/version/scratch";
  ProcessSut sut(cfg);
  CHECK_THROWS_AS(sut.compile_with_coverage("x"), SutError);
}

TEST_CASE("a missing coverage report keeps the result and warns") {
  SutConfig cfg = cc_config("true");
  cfg.process.coverage = "true";  // produces no report file
  ProcessSut sut(cfg);
  SutResult r = sut.compile_with_coverage("x");
  CHECK(r.classification == Classification::success);
  CHECK(r.coverage.empty());
  auto warnings = sut.drain_warnings();
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("coverage report missing") != std::string::npos);
  CHECK(sut.drain_warnings().empty());
}

TEST_CASE("a corrupt coverage report keeps the result and warns") {
  SutConfig cfg = cc_config("true");
  cfg.process.coverage = "echo 'not a report' > {report}";
  ProcessSut sut(cfg);
  SutResult r = sut.compile_with_coverage("x");
  CHECK(r.classification == Classification::success);
  CHECK(r.coverage.empty());
  auto warnings = sut.drain_warnings();
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("no recognizable records") != std::string::npos);
}

TEST_CASE("a report naming files but recording no lines keeps the result and warns") {
  SutConfig cfg = cc_config("true");
  cfg.process.coverage = "printf '        -:    0:Source:alpha.c\\n' > {report}";
  ProcessSut sut(cfg);
  SutResult r = sut.compile_with_coverage("x");
  CHECK(r.classification == Classification::success);
  CHECK(r.coverage.empty());
  auto warnings = sut.drain_warnings();
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("no line records") != std::string::npos);
}

TEST_CASE("an instrumented toy compiler yields per-input coverage") {
  if (!toy_fixture().built) SKIP("gcc/gcov not available to build the fixture");
  ProcessSut sut(toy_config());

  SutResult ok1 = sut.compile_with_coverage("hello\n");
  CHECK(ok1.classification == Classification::success);
  CHECK(ok1.diagnostics.find("toycc: ok") != std::string::npos);
  REQUIRE_FALSE(ok1.coverage.empty());

  SutResult boom = sut.compile_with_coverage("BOOM\n");
  CHECK(boom.classification == Classification::potential_bug);
  CHECK(boom.exit_code == 4);
  CHECK(boom.diagnostics.find("internal compiler error") != std::string::npos);
  REQUIRE_FALSE(boom.coverage.empty());

  // Different branches, different lines, in both directions.
  CHECK(ok1.coverage.count_new(boom.coverage) > 0);
  CHECK(boom.coverage.count_new(ok1.coverage) > 0);

  // Counters are per-invocation: a run after the BOOM run must not inherit
  // its lines.
  SutResult ok2 = sut.compile_with_coverage("hello\n");
  CHECK(ok2.coverage == ok1.coverage);
  CHECK(sut.drain_warnings().empty());
}

TEST_CASE("flag sets union coverage and surface the worst outcome") {
  if (!toy_fixture().built) SKIP("gcc/gcov not available to build the fixture");
  ProcessSut plain(toy_config({""}));
  SutResult base = plain.compile_with_coverage("XRAY please\n");
  CHECK(base.classification == Classification::success);

  ProcessSut both(toy_config({"", "-x"}));
  SutResult r = both.compile_with_coverage("XRAY please\n");
  CHECK(r.classification == Classification::benign_error);
  CHECK(r.exit_code == 1);
  CHECK(r.diagnostics.find("XRAY not allowed") != std::string::npos);
  CHECK(r.coverage.count_new(base.coverage) == 0);   // union covers the plain run
  CHECK(base.coverage.count_new(r.coverage) > 0);    // plus the extended branch
  CHECK(r.compile_time_s > base.compile_time_s);     // both sets were paid for

  auto warnings = both.drain_warnings();
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("flag sets disagree") != std::string::npos);
}

TEST_CASE("a bug under one flag set beats a hang under another") {
  if (!toy_fixture().built) SKIP("gcc/gcov not available to build the fixture");
  for (auto sets : {std::vector<std::string>{"", "-x"}, std::vector<std::string>{"-x", ""}}) {
    SutConfig cfg = toy_config(sets);
    cfg.timeout_seconds = 1.0;
    ProcessSut sut(cfg);
    SutResult r = sut.compile_with_coverage("SPIN BOOM\n");
    CHECK(r.classification == Classification::potential_bug);
    CHECK(r.exit_code == 4);
    CHECK_FALSE(r.timed_out);
    CHECK(r.compile_time_s > 1.0);  // the hung set burned its timeout
  }
}

TEST_CASE("header probes compile a minimal unit and are cached") {
  if (!command_exists("cc")) SKIP("cc not available");
  ProcessSut sut(cc_config());
  CHECK(sut.probe_header("stdio.h"));
  CHECK(sut.probe_header("stdio.h"));
  CHECK_FALSE(sut.probe_header("definitely_no_such_header_zq.h"));
  CHECK_FALSE(sut.probe_header("definitely_no_such_header_zq.h"));
}

TEST_CASE("scratch directories are removed after each compile") {
  SutConfig cfg = cc_config("true");
  ProcessSut sut(cfg);
  sut.compile_with_coverage("a");
  sut.compile_with_coverage("b");
  CHECK(fs::is_empty(cfg.process.scratch_root));
}

TEST_CASE("concurrent compiles stay isolated") {
  if (!command_exists("cc")) SKIP("cc not available");
  SutConfig cfg = cc_config();
  ProcessSut sut(cfg);
  std::atomic<int> ok{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&] {
      for (int i = 0; i < 2; ++i) {
        SutResult r = sut.compile_with_coverage("int main(void) { return 0; }\n");
        if (r.classification == Classification::success) ok.fetch_add(1);
      }
    });
  for (auto& th : pool) th.join();
  CHECK(ok.load() == 8);
  CHECK(fs::is_empty(cfg.process.scratch_root));
}
