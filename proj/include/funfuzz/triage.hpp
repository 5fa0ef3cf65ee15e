#pragma once

// Crash fingerprinting and the bug ledger. A fingerprint is the pair
// (normalized failure header, normalized backtrace frames); its digest
// identifies one unique failure across runs and machines. The ledger keeps
// one directory per digest with the reproducer alongside.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "funfuzz/config.hpp"
#include "funfuzz/hash.hpp"
#include "funfuzz/sut.hpp"
#include "funfuzz/text.hpp"

namespace funfuzz {

namespace triagedetail {

inline bool is_hex_digit(char c) {
  return std::isxdigit(static_cast<unsigned char>(c)) != 0;
}

// 0x-prefixed hex runs become <ADDR> unless glued onto an identifier.
inline std::string scrub_addresses(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    bool boundary = i == 0 || !is_ident_char(text[i - 1]);
    if (boundary && text[i] == '0' && i + 2 < text.size() &&
        (text[i + 1] == 'x' || text[i + 1] == 'X') && is_hex_digit(text[i + 2])) {
      std::size_t j = i + 2;
      while (j < text.size() && is_hex_digit(text[j])) ++j;
      out += "<ADDR>";
      i = j;
    } else {
      out += text[i++];
    }
  }
  return out;
}

inline std::string reduce_path(std::string token) {
  while (token.size() > 1 && token.back() == '/') token.pop_back();
  if (auto slash = token.rfind('/'); slash != std::string::npos && slash + 1 < token.size())
    return token.substr(slash + 1);
  return token;
}

inline std::string scrub_lines(std::string_view token) {
  std::string out;
  for (std::size_t i = 0; i < token.size();) {
    if (token[i] == ':' && i + 1 < token.size() &&
        std::isdigit(static_cast<unsigned char>(token[i + 1]))) {
      std::size_t j = i + 1;
      while (j < token.size() && std::isdigit(static_cast<unsigned char>(token[j]))) ++j;
      out += ":<LINE>";
      i = j;
    } else {
      out += token[i++];
    }
  }
  return out;
}

// Run-specific temp names: the six-random-character compiler scratch files
// and mktemp-style tmp* names (which always carry digits). Deterministic
// names that merely start with cc or tmp must survive.
inline bool is_temp_name(std::string_view head) {
  if (head.size() >= 9 && head.starts_with("cc")) {
    bool ok = true;
    for (std::size_t i = 2; i < 8; ++i)
      if (!std::isalnum(static_cast<unsigned char>(head[i]))) ok = false;
    if (ok && head[8] == '.' && head.size() > 9) {
      for (std::size_t i = 9; i < head.size(); ++i)
        if (!std::isalnum(static_cast<unsigned char>(head[i]))) ok = false;
      if (ok) return true;
    }
  }
  if (head.starts_with("tmp")) {
    for (char c : head)
      if (std::isdigit(static_cast<unsigned char>(c))) return true;
  }
  return false;
}

inline std::string scrub_temp(std::string token) {
  std::size_t colon = token.find(':');
  std::string_view head =
      colon == std::string::npos ? std::string_view(token) : std::string_view(token).substr(0, colon);
  if (!is_temp_name(head)) return token;
  std::string rest = colon == std::string::npos ? std::string() : token.substr(colon);
  return "<TMP>" + rest;
}

}  // namespace triagedetail

// Rewrites, in order: hex addresses, path components, :line suffixes, temp
// file names, whitespace runs. Idempotent by construction: no rewrite
// output matches a later rule.
inline std::string normalize_diagnostic(std::string_view text) {
  std::string scrubbed = triagedetail::scrub_addresses(text);
  std::string out;
  out.reserve(scrubbed.size());
  std::size_t i = 0;
  const std::size_t n = scrubbed.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(scrubbed[i]))) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(scrubbed[j]))) ++j;
    std::string token = scrubbed.substr(i, j - i);
    token = triagedetail::reduce_path(std::move(token));
    token = triagedetail::scrub_lines(token);
    token = triagedetail::scrub_temp(std::move(token));
    if (!out.empty()) out += ' ';
    out += token;
    i = j;
  }
  return out;
}

struct CrashFingerprint {
  std::string header_norm;
  std::vector<std::string> trace_norm;
  Digest128 digest;
  bool operator==(const CrashFingerprint&) const = default;
};

// Components never contain newlines after normalization, so a newline join
// is unambiguous.
inline Digest128 fingerprint_digest(const std::string& header,
                                    const std::vector<std::string>& trace) {
  std::string blob = header;
  for (const auto& frame : trace) {
    blob += '\n';
    blob += frame;
  }
  return murmur3_x64_128(blob);
}

inline const char* signal_name(int sig) {
  switch (sig) {
    case 4: return "SIGILL";
    case 6: return "SIGABRT";
    case 7: return "SIGBUS";
    case 8: return "SIGFPE";
    case 11: return "SIGSEGV";
    default: return nullptr;
  }
}

// Header: the first diagnostics line carrying an internal-failure marker,
// else the first non-empty line, else a synthesized signal/exit tag.
// Trace: every line shaped like a backtrace frame. Unknown trace layouts
// degrade to header-only fingerprints rather than failing.
inline CrashFingerprint fingerprint(const SutResult& result,
                                    const std::vector<std::string>& markers =
                                        default_failure_markers()) {
  CrashFingerprint fp;
  std::string first_nonempty;
  std::string marker_line;
  for (auto line : split_lines(result.diagnostics)) {
    std::string_view t = trim(line);
    if (t.empty()) continue;
    bool frame = (t.size() > 1 && t[0] == '#' &&
                  std::isdigit(static_cast<unsigned char>(t[1]))) ||
                 t.starts_with("at ");
    if (frame) {
      fp.trace_norm.push_back(normalize_diagnostic(t));
      continue;
    }
    if (first_nonempty.empty()) first_nonempty.assign(t);
    if (marker_line.empty()) {
      for (const auto& m : markers) {
        if (t.find(m) != std::string_view::npos) {
          marker_line.assign(t);
          break;
        }
      }
    }
  }
  if (!marker_line.empty()) {
    fp.header_norm = normalize_diagnostic(marker_line);
  } else if (!first_nonempty.empty()) {
    fp.header_norm = normalize_diagnostic(first_nonempty);
  } else if (result.term_signal != 0) {
    const char* name = signal_name(result.term_signal);
    fp.header_norm = "signal:" + (name ? std::string(name) : std::to_string(result.term_signal));
  } else {
    fp.header_norm = "exit:" + std::to_string(result.exit_code);
  }
  fp.digest = fingerprint_digest(fp.header_norm, fp.trace_norm);
  return fp;
}

enum class BugStatus { fresh, confirmed, duplicate, pending };

inline const char* to_string(BugStatus s) {
  switch (s) {
    case BugStatus::fresh: return "new";
    case BugStatus::confirmed: return "confirmed";
    case BugStatus::duplicate: return "duplicate";
    case BugStatus::pending: return "pending";
  }
  return "new";
}

inline BugStatus bug_status_from_string(std::string_view s) {
  if (s == "confirmed") return BugStatus::confirmed;
  if (s == "duplicate") return BugStatus::duplicate;
  if (s == "pending") return BugStatus::pending;
  return BugStatus::fresh;
}

// Merge join for triage opinions: stronger knowledge wins in any order.
inline int status_rank(BugStatus s) {
  switch (s) {
    case BugStatus::fresh: return 0;
    case BugStatus::pending: return 1;
    case BugStatus::duplicate: return 2;
    case BugStatus::confirmed: return 3;
  }
  return 0;
}

struct BugLedgerEntry {
  CrashFingerprint fingerprint;
  double first_seen = 0.0;
  std::string reproducer_path;  // empty when not persisted
  std::uint64_t hit_count = 1;
  BugStatus status = BugStatus::fresh;
  bool persist_failed = false;
  std::string diagnostics;  // raw first-seen text
  std::string source;       // reproducer content
};

enum class RecordOutcome { fresh, duplicate_hit };

inline constexpr const char* kDigestAlgorithm = "murmur3-x64-128";

class BugLedger {
 public:
  BugLedger() : mu_(std::make_unique<std::mutex>()) {}

  explicit BugLedger(std::filesystem::path dir, std::string source_extension = ".c")
      : mu_(std::make_unique<std::mutex>()),
        dir_(std::move(dir)),
        ext_(std::move(source_extension)),
        persistent_(true) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
  }

  RecordOutcome record(const SutResult& result, const std::string& unit_source, double now,
                       const std::vector<std::string>& markers = default_failure_markers()) {
    CrashFingerprint fp = fingerprint(result, markers);
    std::string hex = to_hex(fp.digest);
    std::lock_guard<std::mutex> lock(*mu_);
    if (auto it = entries_.find(hex); it != entries_.end()) {
      it->second.hit_count += 1;
      if (persistent_ && !it->second.persist_failed) write_meta(hex, it->second);
      return RecordOutcome::duplicate_hit;
    }
    BugLedgerEntry entry;
    entry.fingerprint = std::move(fp);
    entry.first_seen = now;
    entry.diagnostics = result.diagnostics;
    entry.source = unit_source;
    if (persistent_) persist_entry(hex, entry);
    entries_.emplace(hex, std::move(entry));
    if (persistent_) write_index();
    return RecordOutcome::fresh;
  }

  const std::map<std::string, BugLedgerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const std::filesystem::path& directory() const { return dir_; }

  bool set_status(const std::string& digest_hex, BugStatus status) {
    std::lock_guard<std::mutex> lock(*mu_);
    auto it = entries_.find(digest_hex);
    if (it == entries_.end()) return false;
    it->second.status = status;
    if (persistent_ && !it->second.persist_failed) write_meta(digest_hex, it->second);
    return true;
  }

  // Union by digest: counts add, first_seen takes the earliest, status takes
  // the strongest claim. Associative and commutative by construction.
  void merge_from(const BugLedger& other) {
    std::lock_guard<std::mutex> lock(*mu_);
    for (const auto& [hex, oe] : other.entries_) {
      auto it = entries_.find(hex);
      if (it == entries_.end()) {
        BugLedgerEntry copy = oe;
        copy.reproducer_path.clear();
        copy.persist_failed = false;
        if (persistent_) persist_entry(hex, copy);
        entries_.emplace(hex, std::move(copy));
        continue;
      }
      BugLedgerEntry& e = it->second;
      e.hit_count += oe.hit_count;
      e.first_seen = std::min(e.first_seen, oe.first_seen);
      if (status_rank(oe.status) > status_rank(e.status)) e.status = oe.status;
      if (persistent_ && !e.persist_failed) write_meta(hex, e);
    }
    if (persistent_) write_index();
  }

  static BugLedger load(const std::filesystem::path& dir) {
    BugLedger ledger(dir);
    std::ifstream index(dir / "index.json");
    if (!index.good()) return ledger;
    nlohmann::json idx = nlohmann::json::parse(index, nullptr, false);
    if (idx.is_discarded() || !idx.contains("digests")) return ledger;
    for (const auto& d : idx["digests"]) {
      std::string hex = d.get<std::string>();
      std::filesystem::path sub = dir / hex;
      std::ifstream meta_in(sub / "meta.json");
      if (!meta_in.good()) continue;
      nlohmann::json meta = nlohmann::json::parse(meta_in, nullptr, false);
      if (meta.is_discarded()) continue;
      BugLedgerEntry entry;
      entry.fingerprint.header_norm = meta.value("header", std::string());
      for (const auto& f : meta.value("trace", nlohmann::json::array()))
        entry.fingerprint.trace_norm.push_back(f.get<std::string>());
      entry.fingerprint.digest =
          fingerprint_digest(entry.fingerprint.header_norm, entry.fingerprint.trace_norm);
      entry.first_seen = meta.value("first_seen", 0.0);
      entry.hit_count = meta.value("hit_count", std::uint64_t(1));
      entry.status = bug_status_from_string(meta.value("status", std::string("new")));
      entry.diagnostics = slurp(sub / "diagnostics.txt");
      std::string repro = meta.value("reproducer", std::string());
      if (!repro.empty()) {
        entry.reproducer_path = (sub / repro).string();
        entry.source = slurp(sub / repro);
      }
      ledger.entries_.emplace(std::move(hex), std::move(entry));
    }
    return ledger;
  }

 private:
  static std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in.good()) return {};
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  static bool spill(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out.good()) return false;
    out.write(content.data(), std::streamsize(content.size()));
    return out.good();
  }

  void persist_entry(const std::string& hex, BugLedgerEntry& entry) {
    std::error_code ec;
    std::filesystem::path sub = dir_ / hex;
    std::filesystem::create_directories(sub, ec);
    if (ec) {
      entry.persist_failed = true;
      return;
    }
    std::string repro_name = "reproducer" + ext_;
    bool ok = spill(sub / repro_name, entry.source) &&
              spill(sub / "diagnostics.txt", entry.diagnostics);
    if (!ok) {
      entry.persist_failed = true;
      return;
    }
    entry.reproducer_path = (sub / repro_name).string();
    write_meta(hex, entry);
  }

  void write_meta(const std::string& hex, const BugLedgerEntry& entry) {
    nlohmann::json meta = {
        {"digest", hex},
        {"header", entry.fingerprint.header_norm},
        {"trace", entry.fingerprint.trace_norm},
        {"first_seen", entry.first_seen},
        {"hit_count", entry.hit_count},
        {"status", to_string(entry.status)},
        {"reproducer", entry.reproducer_path.empty() ? std::string()
                                                     : "reproducer" + ext_},
    };
    spill(dir_ / hex / "meta.json", meta.dump(2) + "\n");
  }

  void write_index() {
    nlohmann::json idx;
    idx["digest_algorithm"] = kDigestAlgorithm;
    idx["digests"] = nlohmann::json::array();
    for (const auto& [hex, entry] : entries_)
      if (!entry.persist_failed) idx["digests"].push_back(hex);
    spill(dir_ / "index.json", idx.dump(2) + "\n");
  }

  std::unique_ptr<std::mutex> mu_;
  std::map<std::string, BugLedgerEntry> entries_;
  std::filesystem::path dir_;
  std::string ext_ = ".c";
  bool persistent_ = false;
};

enum class ReverifyOutcome { still_reproduces, shifted, fixed, unverifiable };

inline const char* to_string(ReverifyOutcome o) {
  switch (o) {
    case ReverifyOutcome::still_reproduces: return "still-reproduces";
    case ReverifyOutcome::shifted: return "shifted";
    case ReverifyOutcome::fixed: return "fixed";
    case ReverifyOutcome::unverifiable: return "unverifiable";
  }
  return "unverifiable";
}

struct ReverifyReport {
  std::map<std::string, ReverifyOutcome> outcomes;
  std::size_t count(ReverifyOutcome o) const {
    std::size_t n = 0;
    for (const auto& [hex, outcome] : outcomes)
      if (outcome == o) ++n;
    return n;
  }
};

// Replays every reproducer through the given harness. Persisted entries are
// read back from disk so a lost file surfaces as unverifiable; in-memory
// entries fall back to their retained source.
inline ReverifyReport reverify(const BugLedger& ledger, SutHarness& harness,
                               const std::vector<std::string>& markers =
                                   default_failure_markers()) {
  ReverifyReport report;
  for (const auto& [hex, entry] : ledger.entries()) {
    std::string source;
    if (!entry.reproducer_path.empty()) {
      std::ifstream in(entry.reproducer_path, std::ios::binary);
      if (!in.good()) {
        report.outcomes[hex] = ReverifyOutcome::unverifiable;
        continue;
      }
      source.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } else if (!entry.source.empty()) {
      source = entry.source;
    } else {
      report.outcomes[hex] = ReverifyOutcome::unverifiable;
      continue;
    }
    SutResult result = harness.compile(source);
    if (result.classification != Classification::potential_bug) {
      report.outcomes[hex] = ReverifyOutcome::fixed;
      continue;
    }
    CrashFingerprint fp = fingerprint(result, markers);
    report.outcomes[hex] = fp.digest == entry.fingerprint.digest
                               ? ReverifyOutcome::still_reproduces
                               : ReverifyOutcome::shifted;
  }
  return report;
}

}  // namespace funfuzz
