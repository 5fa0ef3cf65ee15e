#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "funfuzz/rng.hpp"
#include "funfuzz/sut.hpp"
#include "funfuzz/triage.hpp"

using namespace funfuzz;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("funfuzz-triage-" + tag);
  fs::remove_all(p);
  return p;
}

SutResult bug_result(std::string diagnostics, int signal = 6) {
  SutResult r;
  r.classification = Classification::potential_bug;
  r.exit_code = signal == 0 ? 4 : -1;
  r.term_signal = signal;
  r.diagnostics = std::move(diagnostics);
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("normalize_diagnostic rewrites nondeterministic tokens in order") {
  // hand-applied rewrites, frozen
  CHECK(normalize_diagnostic("internal compiler error: in verify_gimple, at tree-cfg.cc:5671") ==
        "internal compiler error: in verify_gimple, at tree-cfg.cc:<LINE>");
  CHECK(normalize_diagnostic("#4 0x7f3a21 in fold_binary /build/gcc/fold-const.cc:1182") ==
        "#4 <ADDR> in fold_binary fold-const.cc:<LINE>");

  SECTION("addresses") {
    CHECK(normalize_diagnostic("crash at 0xDEADbeef12 here") == "crash at <ADDR> here");
    CHECK(normalize_diagnostic("0x0") == "<ADDR>");
    // a bare 0x with no digits is not an address
    CHECK(normalize_diagnostic("weird 0x token") == "weird 0x token");
    // identifier-embedded hex is left alone
    CHECK(normalize_diagnostic("var s0x1f stays") == "var s0x1f stays");
  }
  SECTION("paths reduce to their final component") {
    CHECK(normalize_diagnostic("/usr/lib/gcc/x86_64-linux-gnu/11/cc1plus crashed") ==
          "cc1plus crashed");
    CHECK(normalize_diagnostic("see build/sub/unit.c for details") ==
          "see unit.c for details");
  }
  SECTION("line and column suffixes") {
    CHECK(normalize_diagnostic("unit.c:12:7: error: oops") == "unit.c:<LINE>:<LINE>: error: oops");
    // scope operators carry no digits and are untouched
    CHECK(normalize_diagnostic("std::vector grew") == "std::vector grew");
  }
  SECTION("temp file names") {
    CHECK(normalize_diagnostic("wrote ccX4q8Zw.s then died") == "wrote <TMP> then died");
    CHECK(normalize_diagnostic("spilled to /tmp/ccAb12Cd.o early") == "spilled to <TMP> early");
    CHECK(normalize_diagnostic("input tmp8x1q.c rejected") == "input <TMP> rejected");
    // deterministic names that merely start with cc or tmp survive
    CHECK(normalize_diagnostic("cc1 signalled") == "cc1 signalled");
    CHECK(normalize_diagnostic("tmpfile.c kept") == "tmpfile.c kept");
    CHECK(normalize_diagnostic("accumulate.c kept") == "accumulate.c kept");
  }
  SECTION("whitespace collapses") {
    CHECK(normalize_diagnostic("  a \t  b\t\tc  ") == "a b c");
    CHECK(normalize_diagnostic("two\nlines") == "two lines");
  }
  SECTION("idempotence on goldens") {
    for (std::string s : {
             "internal compiler error: in verify_gimple, at tree-cfg.cc:<LINE>",
             "#4 <ADDR> in fold_binary fold-const.cc:<LINE>",
             "wrote <TMP> then died",
             "plain text with nothing to do",
         }) {
      CHECK(normalize_diagnostic(s) == s);
    }
  }
}

TEST_CASE("normalization erases run-to-run noise under random perturbations") {
  Rng rng(7);
  const std::string want = "#2 <ADDR> in do_fold fold.cc:<LINE> via <TMP>";
  static const char* prefixes[] = {"/build/gcc", "/home/user/work/gcc-13.2.0", "/b",
                                   "/very/deep/nested/build/tree"};
  for (int round = 0; round < 200; ++round) {
    std::string addr = "0x" + to_hex(rng.below(1ull << 48), 1 + int(rng.index(12)));
    std::string line = std::to_string(1 + rng.below(99999));
    std::string prefix = prefixes[rng.index(4)];
    std::string tmp = "cc";
    for (int i = 0; i < 6; ++i) tmp += "ABCdef123"[rng.index(9)];
    std::string text = "#2 " + addr + " in do_fold " + prefix + "/fold.cc:" + line + " via /tmp/" +
                       tmp + ".s";
    std::string got = normalize_diagnostic(text);
    CHECK(got == want);
    CHECK(normalize_diagnostic(got) == got);
  }
}

TEST_CASE("fingerprint extracts a marker header and frame lines") {
  SutResult r = bug_result(
      "during GIMPLE pass: forwprop\n"
      "unit.c:14:3: internal compiler error: in fold_stmt, at gimple-fold.cc:6821\n"
      "#0 0x1a2b3c in fold_stmt gimple-fold.cc:6821\n"
      "#1 0x2b3c4d in forwprop_pass /build/gcc/passes.cc:212\n"
      "Please submit a full bug report.\n");
  auto fp = fingerprint(r);
  CHECK(fp.header_norm ==
        "unit.c:<LINE>:<LINE>: internal compiler error: in fold_stmt, at gimple-fold.cc:<LINE>");
  REQUIRE(fp.trace_norm.size() == 2);
  CHECK(fp.trace_norm[0] == "#0 <ADDR> in fold_stmt gimple-fold.cc:<LINE>");
  CHECK(fp.trace_norm[1] == "#1 <ADDR> in forwprop_pass passes.cc:<LINE>");
  CHECK(fp.digest == fingerprint(r).digest);
  CHECK(fp.digest == fingerprint_digest(fp.header_norm, fp.trace_norm));
}

TEST_CASE("fingerprint falls back to the first non-empty line without a marker") {
  SutResult r = bug_result("\nsomething odd happened\nmore context\n", 0);
  auto fp = fingerprint(r);
  CHECK(fp.header_norm == "something odd happened");
  CHECK(fp.trace_norm.empty());
}

TEST_CASE("fingerprint of a silent signal crash") {
  SutResult segv = bug_result("", 11);
  auto fp = fingerprint(segv);
  CHECK(fp.header_norm == "signal:SIGSEGV");
  CHECK(fp.trace_norm.empty());
  CHECK(fingerprint(bug_result("", 6)).header_norm == "signal:SIGABRT");
  CHECK(fingerprint(bug_result("", 99)).header_norm == "signal:99");
  // silent non-signal failure still yields a usable header
  CHECK(fingerprint(bug_result("", 0)).header_norm == "exit:4");
}

TEST_CASE("fingerprint accepts at-style frames and ignores prose") {
  SutResult r = bug_result(
      "Assertion `n < size' failed.\n"
      "    at vec_extract tree-vec.cc:881\n"
      "  at gimple_fold gimple.cc:99\n"
      "note: see documentation at https://example.org/docs:8080 for help\n");
  auto fp = fingerprint(r);
  CHECK(fp.header_norm == "Assertion `n < size' failed.");
  REQUIRE(fp.trace_norm.size() == 2);
  CHECK(fp.trace_norm[0] == "at vec_extract tree-vec.cc:<LINE>");
  CHECK(fp.trace_norm[1] == "at gimple_fold gimple.cc:<LINE>");
}

TEST_CASE("digest identity follows the normalized content") {
  std::string base =
      "internal compiler error: Segmentation fault\n"
      "#0 0xAAAA in evaluate /b1/eval.cc:10\n";
  std::string perturbed =
      "internal compiler error: Segmentation fault\n"
      "#0 0xBBBBBB in evaluate /other/build/eval.cc:9955\n";
  std::string different_frame =
      "internal compiler error: Segmentation fault\n"
      "#0 0xAAAA in reduce /b1/eval.cc:10\n";
  auto a = fingerprint(bug_result(base));
  auto b = fingerprint(bug_result(perturbed));
  auto c = fingerprint(bug_result(different_frame));
  CHECK(a.digest == b.digest);
  CHECK_FALSE(a.digest == c.digest);
  CHECK(a.header_norm == c.header_norm);
}

TEST_CASE("ledger records new digests and counts duplicate hits") {
  auto dir = fresh_dir("record");
  BugLedger ledger(dir);

  std::string unit = "int main(void) { return 0; }\n";
  auto r1 = bug_result(
      "internal compiler error: in tighten, at opt.cc:42\n#0 0x1 in tighten opt.cc:42\n");
  CHECK(ledger.record(r1, unit, 10.0) == RecordOutcome::fresh);
  CHECK(ledger.size() == 1);

  // same failure, different addresses: a duplicate hit
  auto r2 = bug_result(
      "internal compiler error: in tighten, at opt.cc:42\n#0 0x9f3 in tighten opt.cc:42\n");
  CHECK(ledger.record(r2, unit, 11.0) == RecordOutcome::duplicate_hit);
  CHECK(ledger.size() == 1);

  auto r3 = bug_result("internal compiler error: in widen, at opt.cc:99\n");
  CHECK(ledger.record(r3, "int main(void) { return 1; }\n", 12.0) == RecordOutcome::fresh);
  CHECK(ledger.size() == 2);

  const auto& entries = ledger.entries();
  auto first_hex = to_hex(fingerprint(r1).digest);
  REQUIRE(entries.count(first_hex) == 1);
  const auto& e = entries.at(first_hex);
  CHECK(e.hit_count == 2);
  CHECK(e.first_seen == 10.0);
  CHECK(e.status == BugStatus::fresh);
  CHECK_FALSE(e.persist_failed);

  SECTION("directory layout holds reproducer, diagnostics, meta, and index") {
    fs::path sub = dir / first_hex;
    CHECK(read_file(sub / "reproducer.c") == unit);
    CHECK(read_file(sub / "diagnostics.txt") == r1.diagnostics);
    auto meta = nlohmann::json::parse(read_file(sub / "meta.json"));
    CHECK(meta["hit_count"] == 2);
    CHECK(meta["status"] == "new");
    CHECK(meta["first_seen"] == 10.0);
    CHECK(meta["header"] == fingerprint(r1).header_norm);

    auto index = nlohmann::json::parse(read_file(dir / "index.json"));
    CHECK(index["digest_algorithm"] == "murmur3-x64-128");
    CHECK(index["digests"].size() == 2);
  }

  SECTION("a reloaded ledger matches the in-memory one") {
    REQUIRE(ledger.set_status(first_hex, BugStatus::confirmed));
    BugLedger loaded = BugLedger::load(dir);
    REQUIRE(loaded.size() == 2);
    const auto& le = loaded.entries().at(first_hex);
    CHECK(le.hit_count == 2);
    CHECK(le.first_seen == 10.0);
    CHECK(le.status == BugStatus::confirmed);
    CHECK(le.fingerprint.digest == fingerprint(r1).digest);
    CHECK(le.fingerprint.header_norm == fingerprint(r1).header_norm);
    CHECK(le.source == unit);
  }

  fs::remove_all(dir);
}

TEST_CASE("unique count equals a brute-force set of normalized pairs") {
  // replayed stream with run-to-run noise: the ledger must agree with a
  // direct set count over (header, trace) after normalization
  Rng rng(99);
  BugLedger ledger;  // in-memory
  std::set<std::pair<std::string, std::vector<std::string>>> oracle;
  static const char* kinds[] = {"in fold_unary", "in fold_binary", "in verify_ssa",
                                "in expand_call", "in tighten_bounds", "in widen_types"};
  for (int i = 0; i < 300; ++i) {
    std::string where = kinds[rng.index(6)];
    int frames = int(rng.index(3));
    std::string diag = "internal compiler error: " + std::string(where) + ", at pass.cc:" +
                       std::to_string(rng.below(5000)) + "\n";
    for (int f = 0; f < frames; ++f)
      diag += "#" + std::to_string(f) + " 0x" + to_hex(rng.below(1ull << 40), 10) + " in frame_" +
              std::to_string(f) + " /b" + std::to_string(rng.below(4)) + "/x.cc:" +
              std::to_string(rng.below(900)) + "\n";
    auto result = bug_result(diag);
    ledger.record(result, "int main(void){}\n", double(i));
    auto fp = fingerprint(result);
    oracle.emplace(fp.header_norm, fp.trace_norm);
  }
  CHECK(ledger.size() == oracle.size());
  // the line-number scrub means far fewer uniques than raw diagnostics
  CHECK(ledger.size() < 40);
  CHECK(ledger.size() >= 6);
}

TEST_CASE("ledger merge is associative and commutative") {
  auto make = [](std::uint64_t seed, int n, double t0) {
    BugLedger ledger;
    Rng rng(seed);
    static const char* kinds[] = {"alpha", "beta", "gamma", "delta", "epsilon"};
    for (int i = 0; i < n; ++i) {
      std::string diag = "internal compiler error: in " + std::string(kinds[rng.index(5)]) +
                         ", at p.cc:" + std::to_string(rng.below(3)) + "\n";
      ledger.record(bug_result(diag), "int main(void){}\n", t0 + i);
    }
    return ledger;
  };
  BugLedger a = make(1, 40, 100.0);
  BugLedger b = make(2, 40, 50.0);
  BugLedger c = make(3, 40, 200.0);

  // opinions recorded in different runs must merge the same way regardless
  // of order: status joins by rank, counts add, first_seen takes the min
  std::string shared;
  for (const auto& [hex, entry] : a.entries())
    if (b.entries().count(hex)) {
      shared = hex;
      break;
    }
  REQUIRE_FALSE(shared.empty());
  a.set_status(shared, BugStatus::pending);
  b.set_status(shared, BugStatus::confirmed);

  auto merged_abc = [&] {
    BugLedger m;
    m.merge_from(a);
    m.merge_from(b);
    m.merge_from(c);
    return m;
  }();
  auto merged_cba = [&] {
    BugLedger m;
    m.merge_from(c);
    m.merge_from(b);
    m.merge_from(a);
    return m;
  }();
  auto merged_right = [&] {
    BugLedger bc;
    bc.merge_from(b);
    bc.merge_from(c);
    BugLedger m;
    m.merge_from(a);
    m.merge_from(bc);
    return m;
  }();

  REQUIRE(merged_abc.size() == merged_cba.size());
  REQUIRE(merged_abc.size() == merged_right.size());
  for (const auto& [hex, entry] : merged_abc.entries()) {
    for (const BugLedger* other : {&merged_cba, &merged_right}) {
      REQUIRE(other->entries().count(hex) == 1);
      const auto& oe = other->entries().at(hex);
      CHECK(oe.hit_count == entry.hit_count);
      CHECK(oe.first_seen == entry.first_seen);
      CHECK(oe.status == entry.status);
    }
  }
  CHECK(merged_abc.entries().at(shared).status == BugStatus::confirmed);
}

TEST_CASE("a failing persistence root keeps the entry in memory and flags it") {
  BugLedger ledger(fs::path("/proc/version/not-a-dir"));
  auto r = bug_result("internal compiler error: in x, at y.cc:1\n");
  CHECK(ledger.record(r, "int main(void){}\n", 1.0) == RecordOutcome::fresh);
  REQUIRE(ledger.size() == 1);
  CHECK(ledger.entries().begin()->second.persist_failed);
}

namespace {

// Campaign-shaped fixture: a simulated compiler with aggressive bug
// settings, fed distinct units until several distinct digests land.
struct BugCampaign {
  SutConfig cfg;
  fs::path dir;
  BugLedger ledger;

  explicit BugCampaign(const std::string& tag) : dir(fresh_dir(tag)), ledger(dir) {
    cfg.simulated.validity_rate = 1.0;
    cfg.simulated.bug_probability = 1.0;
    cfg.simulated.clusters = 60;
    cfg.simulated.bug_pairs = 8;
  }

  void fill(SimulatedSut& sut, int want_entries) {
    for (int i = 0; i < 4000 && int(ledger.size()) < want_entries; ++i) {
      std::string unit = "int main(void) { int q" + std::to_string(i % 97) + "_a = " +
                         std::to_string(i) + "; int w" + std::to_string((i * 7) % 83) +
                         "_b = 2; return q" + std::to_string(i % 97) + "_a; }\n";
      auto r = sut.compile(unit);
      if (r.classification == Classification::potential_bug) ledger.record(r, unit, double(i));
    }
  }
};

}  // namespace

TEST_CASE("reverify against the same harness reproduces every entry") {
  BugCampaign camp("reverify-same");
  SimulatedSut sut(camp.cfg, 3);
  camp.fill(sut, 3);
  REQUIRE(camp.ledger.size() >= 3);

  auto report = reverify(camp.ledger, sut);
  REQUIRE(report.outcomes.size() == camp.ledger.size());
  for (const auto& [hex, outcome] : report.outcomes) CHECK(outcome == ReverifyOutcome::still_reproduces);
  CHECK(report.count(ReverifyOutcome::still_reproduces) == camp.ledger.size());

  SECTION("a harness without the failure feature reports everything fixed") {
    SutConfig fixed_cfg = camp.cfg;
    fixed_cfg.simulated.enable_bugs = false;
    SimulatedSut fixed_sut(fixed_cfg, 3);
    auto fixed_report = reverify(camp.ledger, fixed_sut);
    for (const auto& [hex, outcome] : fixed_report.outcomes)
      CHECK(outcome == ReverifyOutcome::fixed);
  }

  SECTION("a missing reproducer is unverifiable, the rest are untouched") {
    fs::remove(camp.dir / camp.ledger.entries().begin()->first / "reproducer.c");
    auto partial = reverify(camp.ledger, sut);
    CHECK(partial.outcomes.at(camp.ledger.entries().begin()->first) ==
          ReverifyOutcome::unverifiable);
    CHECK(partial.count(ReverifyOutcome::still_reproduces) == camp.ledger.size() - 1);
  }

  fs::remove_all(camp.dir);
}

namespace {

// Wraps a harness and injects a different leading failure header, moving
// every fingerprint while the result stays a potential bug.
struct MovedFailureSut : SutHarness {
  SutHarness& inner;
  explicit MovedFailureSut(SutHarness& h) : inner(h) {}
  SutResult compile(const std::string& unit) override {
    auto r = inner.compile(unit);
    if (r.classification == Classification::potential_bug)
      r.diagnostics = "internal compiler error: in relocated_pass, at other.c:1\n" + r.diagnostics;
    return r;
  }
  bool probe_header(const std::string& name) override { return inner.probe_header(name); }
};

}  // namespace

TEST_CASE("reverify reports shifted digests when the failure mode moves") {
  BugCampaign camp("reverify-shift");
  SimulatedSut sut(camp.cfg, 3);
  camp.fill(sut, 2);
  REQUIRE(camp.ledger.size() >= 2);

  MovedFailureSut moved(sut);
  auto report = reverify(camp.ledger, moved);
  for (const auto& [hex, outcome] : report.outcomes) CHECK(outcome == ReverifyOutcome::shifted);
  fs::remove_all(camp.dir);
}

TEST_CASE("reverify of an empty ledger is empty") {
  BugLedger ledger;
  SutConfig cfg;
  SimulatedSut sut(cfg, 1);
  auto report = reverify(ledger, sut);
  CHECK(report.outcomes.empty());
  CHECK(report.count(ReverifyOutcome::still_reproduces) == 0);
}

TEST_CASE("bug status names round-trip") {
  for (auto s : {BugStatus::fresh, BugStatus::confirmed, BugStatus::duplicate, BugStatus::pending})
    CHECK(bug_status_from_string(to_string(s)) == s);
  CHECK(to_string(BugStatus::fresh) == std::string("new"));
}
