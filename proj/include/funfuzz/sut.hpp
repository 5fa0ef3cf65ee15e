#pragma once

// System-under-test harness. classify_outcome is the single classification
// authority; the simulated harness below is a pure function of (unit, seed)
// so desk-scale campaigns replay byte-for-byte.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "funfuzz/config.hpp"
#include "funfuzz/coverage.hpp"
#include "funfuzz/hash.hpp"
#include "funfuzz/normalize.hpp"
#include "funfuzz/rng.hpp"
#include "funfuzz/text.hpp"

namespace funfuzz {

enum class Classification { success, benign_error, potential_bug, hang };

inline std::string to_string(Classification c) {
  switch (c) {
    case Classification::success: return "success";
    case Classification::benign_error: return "benign-error";
    case Classification::potential_bug: return "potential-bug";
    case Classification::hang: return "hang";
  }
  return "potential-bug";
}

inline Classification classification_from_string(const std::string& s) {
  if (s == "success") return Classification::success;
  if (s == "benign-error") return Classification::benign_error;
  if (s == "potential-bug") return Classification::potential_bug;
  if (s == "hang") return Classification::hang;
  throw std::invalid_argument("unknown classification: " + s);
}

struct SutResult {
  Classification classification = Classification::benign_error;
  int exit_code = 0;
  int term_signal = 0;  // 0 = exited normally
  bool timed_out = false;
  CoverageSet coverage;
  double compile_time_s = 0.0;
  std::string diagnostics;
};

inline bool contains_failure_marker(const std::string& diagnostics,
                                    const std::vector<std::string>& markers) {
  for (const auto& m : markers)
    if (!m.empty() && diagnostics.find(m) != std::string::npos) return true;
  return false;
}

// Total decision table. A timeout dominates; an internal-failure marker is
// trusted over the exit code (a compiler that reports an internal error and
// still exits cleanly is a bug, not a success).
inline Classification classify_outcome(int exit_code, int term_signal,
                                       const std::string& diagnostics, bool timed_out,
                                       const std::vector<std::string>& markers) {
  if (timed_out) return Classification::hang;
  if (contains_failure_marker(diagnostics, markers)) return Classification::potential_bug;
  if (term_signal != 0) return Classification::potential_bug;
  if (exit_code == 0) return Classification::success;
  if (exit_code == 1) return Classification::benign_error;
  return Classification::potential_bug;
}

class SutHarness {
 public:
  virtual ~SutHarness() = default;
  virtual SutResult compile(const std::string& unit) = 0;
  virtual bool probe_header(const std::string& name) = 0;
};

namespace sutdetail {

inline std::uint64_t mix2(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ b;
  return splitmix64(s);
}

inline double unit_draw(std::uint64_t h, std::uint64_t salt) {
  return double(mix2(h, salt) >> 11) * (1.0 / 9007199254740992.0);
}

inline std::string fake_address(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(0x00007f0000000000ULL | (v & 0xffffffffffULL)));
  return buf;
}

inline const std::unordered_set<std::string>& known_headers() {
  static const std::unordered_set<std::string> h = {
      "assert.h", "ctype.h",  "errno.h",  "float.h",  "inttypes.h", "limits.h", "math.h",
      "setjmp.h", "signal.h", "stdarg.h", "stdbool.h", "stddef.h",  "stdint.h", "stdio.h",
      "stdlib.h", "string.h", "time.h",
      "algorithm", "array",  "cmath",   "cstdint", "cstdio",   "cstdlib", "cstring",
      "expected",  "functional", "iostream", "map", "memory",  "numeric", "optional",
      "set",       "string", "tuple",   "utility", "variant",  "vector"};
  return h;
}

}  // namespace sutdetail

// Deterministic stand-in for an instrumented compiler build. Coverage is
// synthesized from token unigrams/bigrams mapped into a clustered line
// universe; crashes fire on rare cluster co-occurrences.
class SimulatedSut : public SutHarness {
 public:
  SimulatedSut(const SutConfig& cfg, std::uint64_t campaign_seed)
      : cfg_(cfg), sim_(cfg.simulated) {
    using sutdetail::mix2;
    salt_valid_ = mix2(campaign_seed, fnv1a64("sut-validity"));
    salt_bug_ = mix2(campaign_seed, fnv1a64("sut-bug-roll"));
    salt_hang_ = mix2(campaign_seed, fnv1a64("sut-hang"));
    salt_time_ = mix2(campaign_seed, fnv1a64("sut-time"));
    salt_texture_ = mix2(campaign_seed, fnv1a64("sut-texture"));

    Rng pair_rng = new_campaign_rng(campaign_seed, "sut-bug-pairs");
    for (std::uint32_t i = 0; i < sim_.bug_pairs && sim_.clusters >= 2; ++i) {
      for (int attempt = 0; attempt < 16; ++attempt) {
        auto a = std::uint32_t(pair_rng.below(sim_.clusters));
        auto b = std::uint32_t(pair_rng.below(sim_.clusters));
        if (a == b) b = (b + 1) % sim_.clusters;
        if (a > b) std::swap(a, b);
        bool dup = false;
        for (auto& p : bug_pairs_)
          if (p.first == a && p.second == b) dup = true;
        if (!dup) {
          bug_pairs_.emplace_back(a, b);
          break;
        }
      }
    }
  }

  SutResult compile(const std::string& unit) override { return simulate(unit); }

  bool probe_header(const std::string& name) override {
    return sutdetail::known_headers().count(name) > 0;
  }

  std::uint64_t coverage_universe_size() const {
    return std::uint64_t(sim_.clusters) * sim_.lines_per_cluster;
  }

 private:
  struct Feature {
    std::uint32_t cluster;
    std::uint32_t start;
    std::uint32_t depth;
  };

  SutResult simulate(const std::string& unit) const {
    using sutdetail::unit_draw;
    SutResult r;

    if (is_blank(unit)) {
      r.classification = Classification::benign_error;
      r.exit_code = 1;
      r.diagnostics = "unit.c:1: error: empty input file";
      r.compile_time_s = 0.001;
      return r;
    }

    std::string masked = mask_comments_and_strings(unit);
    std::uint64_t h = fnv1a64(unit);

    if (auto structural = structural_error(masked, h)) {
      r.classification = Classification::benign_error;
      r.exit_code = 1;
      r.diagnostics = *structural;
      r.compile_time_s = 0.002 + 2e-5 * double(unit.size());
      return r;
    }

    auto features = extract_features(masked);

    // A known library symbol used without its header fails fast with a
    // diagnostic naming the symbol, so the header-repair pass has something
    // to match on; the repaired unit re-enters as a fresh compile.
    if (auto missing = missing_include_error(unit, masked, h)) {
      r.classification = Classification::benign_error;
      r.exit_code = 1;
      r.diagnostics = *missing;
      for (const auto& f : features)
        r.coverage.insert_key(CoverageSet::pack(f.cluster, f.start));
      r.compile_time_s = 0.01 + 5e-5 * double(unit.size());
      return r;
    }

    if (sim_.hang_probability > 0 && unit_draw(h, salt_hang_) < sim_.hang_probability) {
      r.classification = Classification::hang;
      r.timed_out = true;
      r.compile_time_s = cfg_.timeout_seconds;
      return r;
    }

    bool valid = unit_draw(h, salt_valid_) < sim_.validity_rate;

    std::unordered_set<std::uint64_t> keys;
    std::unordered_set<std::uint32_t> clusters_hit;
    for (const auto& f : features) {
      clusters_hit.insert(f.cluster);
      std::uint32_t depth = valid ? f.depth : 1;
      for (std::uint32_t d = 0; d < depth; ++d)
        keys.insert(CoverageSet::pack(f.cluster, (f.start + d) % sim_.lines_per_cluster));
    }

    double jitter = 0.9 + 0.2 * unit_draw(h, salt_time_);
    r.compile_time_s =
        (0.04 + 1.5e-4 * double(unit.size()) + 1.2e-3 * double(clusters_hit.size())) * jitter;

    if (!valid) {
      r.classification = Classification::benign_error;
      r.exit_code = 1;
      r.diagnostics = benign_diagnostic(h);
      for (auto k : keys) r.coverage.insert_key(k);
      return r;
    }

    int bug_pair = -1;
    if (sim_.enable_bugs && sim_.bug_probability > 0) {
      for (std::size_t i = 0; i < bug_pairs_.size(); ++i) {
        if (clusters_hit.count(bug_pairs_[i].first) && clusters_hit.count(bug_pairs_[i].second)) {
          if (unit_draw(h, salt_bug_) < sim_.bug_probability) bug_pair = int(i);
          break;
        }
      }
    }

    if (bug_pair >= 0) {
      // Crash sites sit deep in the pair's clusters.
      const auto& p = bug_pairs_[std::size_t(bug_pair)];
      for (std::uint32_t d = 0; d < 3 && d < sim_.lines_per_cluster; ++d) {
        keys.insert(CoverageSet::pack(p.first, sim_.lines_per_cluster - 1 - d));
        keys.insert(CoverageSet::pack(p.second, sim_.lines_per_cluster - 1 - d));
      }
      fill_bug_result(r, std::uint32_t(bug_pair), h);
    } else {
      r.classification = Classification::success;
      r.exit_code = 0;
      if (unit_draw(h, salt_texture_) < 0.1)
        r.diagnostics = "unit.c:" + std::to_string(1 + h % 9) +
                        ": warning: unused variable 'tmp'";
    }
    for (auto k : keys) r.coverage.insert_key(k);
    return r;
  }

  // Library symbols whose use requires a specific header. Checked on the
  // masked text so mentions inside comments or strings do not count.
  std::optional<std::string> missing_include_error(const std::string& unit,
                                                   const std::string& masked,
                                                   std::uint64_t h) const {
    static const std::pair<const char*, const char*> kNeeds[] = {
        {"printf", "stdio.h"},  {"scanf", "stdio.h"},  {"malloc", "stdlib.h"},
        {"free", "stdlib.h"},   {"strlen", "string.h"}, {"memcpy", "string.h"},
        {"sqrt", "math.h"},     {"pow", "math.h"}};
    for (const auto& [symbol, header] : kNeeds) {
      std::size_t pos = 0;
      bool used = false;
      std::string_view m(masked);
      std::size_t sym_len = std::string_view(symbol).size();
      while ((pos = m.find(symbol, pos)) != std::string_view::npos) {
        bool left_ok = pos == 0 || !is_ident_char(m[pos - 1]);
        std::size_t end = pos + sym_len;
        bool right_ok = end >= m.size() || m[end] == '(';
        if (left_ok && right_ok) { used = true; break; }
        pos = end;
      }
      if (!used) continue;
      bool included = false;
      for (auto line : split_lines(unit)) {
        if (!is_include_line(line)) continue;
        if (auto t = parse_include_target(line); t && *t == header) included = true;
      }
      if (!included)
        return "unit.c:" + std::to_string(1 + h % 12) +
               ":3: error: implicit declaration of function '" + std::string(symbol) +
               "' [-Werror=implicit-function-declaration]";
    }
    return std::nullopt;
  }

  std::optional<std::string> structural_error(const std::string& masked, std::uint64_t h) const {
    long depth = 0;
    for (char c : masked) {
      if (c == '{') ++depth;
      if (c == '}') {
        if (--depth < 0)
          return "unit.c:" + std::to_string(1 + h % 30) +
                 ": error: expected declaration before '}' token";
      }
    }
    if (depth != 0) return "unit.c: error: expected '}' at end of input";
    if (find_entry_definitions(masked).size() > 1)
      return "unit.c: error: redefinition of 'main'";
    return std::nullopt;
  }

  std::vector<Feature> extract_features(const std::string& masked) const {
    auto tokens = whitespace_tokens(masked);
    std::vector<std::uint64_t> hashes;
    hashes.reserve(tokens.size() * 2);
    for (auto t : tokens) hashes.push_back(fnv1a64(t));
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      std::string pair(tokens[i]);
      pair += '\x1f';
      pair += tokens[i + 1];
      hashes.push_back(fnv1a64(pair));
    }
    std::vector<Feature> out;
    out.reserve(hashes.size());
    for (auto fh : hashes) {
      Feature f;
      f.cluster = std::uint32_t(fh % sim_.clusters);
      f.start = std::uint32_t((fh >> 17) % sim_.lines_per_cluster);
      f.depth = std::uint32_t(1 + (fh >> 29) % 5);
      if (f.depth > sim_.lines_per_cluster) f.depth = sim_.lines_per_cluster;
      out.push_back(f);
    }
    return out;
  }

  std::string benign_diagnostic(std::uint64_t h) const {
    static const char* kShapes[] = {
        "error: expected ';' before '}' token",
        "error: 'x' undeclared (first use in this function)",
        "error: invalid operands to binary * (have 'int' and 'char *')",
        "error: conflicting types for 'helper'",
        "error: too few arguments to function 'process'",
        "error: initializer element is not constant",
    };
    std::uint64_t pick = sutdetail::mix2(h, salt_texture_);
    return "unit.c:" + std::to_string(1 + pick % 40) + ":" + std::to_string(1 + (pick >> 8) % 60) +
           ": " + kShapes[(pick >> 16) % 6];
  }

  void fill_bug_result(SutResult& r, std::uint32_t pair_index, std::uint64_t h) const {
    r.classification = Classification::potential_bug;
    std::string id = std::to_string(pair_index);
    std::string a1 = sutdetail::fake_address(sutdetail::mix2(h, 0x51ed270b));
    std::string a2 = sutdetail::fake_address(sutdetail::mix2(h, 0xc3a5c85c));
    std::string line = std::to_string(1 + h % 9);
    switch (pair_index % 3) {
      case 0:
        r.exit_code = 4;
        r.diagnostics = "during GIMPLE pass: fold\nunit.c:" + line +
                        ":5: internal compiler error: in fold_merge_" + id +
                        ", at fold-checks.c:" + std::to_string(1200 + pair_index) + "\n" + a1 +
                        " fold_merge_" + id + "(tree_node*)\n\t../../src/fold-checks.c:" +
                        std::to_string(1200 + pair_index) +
                        "\nPlease submit a full bug report, with preprocessed source if "
                        "appropriate.";
        break;
      case 1:
        r.term_signal = 6;
        r.diagnostics = "unit.c: In function 'main':\ncc1: ../../src/ssa-prop.c:" +
                        std::to_string(900 + pair_index) + ": verify_prop_" + id +
                        ": Assertion `idx_" + id + " < limit' failed.";
        break;
      default:
        r.term_signal = 11;
        r.diagnostics = "during RTL pass: sched2\nSegmentation fault\n#0 " + a1 +
                        " sched_emit_" + id + " ../../src/sched-deps.c:" +
                        std::to_string(700 + pair_index) + "\n#1 " + a2 +
                        " schedule_block ../../src/haifa-sched.c:" +
                        std::to_string(3100 + pair_index * 37) + "\n";
        break;
    }
  }

  SutConfig cfg_;
  SimulatedSutConfig sim_;
  std::uint64_t salt_valid_ = 0;
  std::uint64_t salt_bug_ = 0;
  std::uint64_t salt_hang_ = 0;
  std::uint64_t salt_time_ = 0;
  std::uint64_t salt_texture_ = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> bug_pairs_;
};

}  // namespace funfuzz
