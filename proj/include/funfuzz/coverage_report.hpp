#pragma once

// Textual line-coverage reports -> exact CoverageSets. Two record dialects
// are recognized and may be freely mixed in one stream; anything else is
// skipped, so a partially damaged report still yields whatever parses.
//
//   gcov text   "    7:   12:source..."  count:line:source. '-' marks a
//               non-executable line, '#####' and '=====' an executable line
//               that never ran, and counts may carry a '*' suffix. File
//               identity comes from the line-0 "Source:" record.
//   lcov        "SF:<path>" opens a file section, "DA:<line>,<count>[,..]"
//               marks a line (covered iff count > 0), "end_of_record"
//               closes the section.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "funfuzz/coverage.hpp"

namespace funfuzz {

// Maps report file names to the 32-bit unit ids CoverageSet keys are built
// from. Ids are assigned in first-seen order, so parsing equal text through
// equal interner states yields equal sets.
class FileInterner {
 public:
  std::uint32_t id_of(std::string_view name) {
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    std::uint32_t id = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
  }

  const std::string& name_of(std::uint32_t id) const {
    if (id >= names_.size()) throw std::out_of_range("unknown unit id");
    return names_[id];
  }

  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> names_;
};

struct CoverageParse {
  CoverageSet covered;
  std::size_t files_seen = 0;
  std::size_t line_records = 0;   // recognized executable-line records
  std::size_t skipped_lines = 0;  // non-blank lines matching neither dialect
  bool recognized() const { return line_records > 0 || files_seen > 0; }
};

namespace covdetail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  std::uint64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = v;
  return true;
}

// gcov count field: '-', '#####', '=====', or digits with an optional '*'.
// Returns false if the field is something else (e.g. "branch", "call").
inline bool parse_gcov_count(std::string_view field, bool& executable, bool& covered) {
  if (field == "-") { executable = false; covered = false; return true; }
  if (field == "#####" || field == "=====") { executable = true; covered = false; return true; }
  if (!field.empty() && field.back() == '*') field.remove_suffix(1);
  std::uint64_t v = 0;
  if (!parse_u64(field, v)) return false;
  executable = true;
  covered = v > 0;
  return true;
}

}  // namespace covdetail

inline CoverageParse parse_coverage_report(std::string_view text, FileInterner& files) {
  using covdetail::trim;
  CoverageParse out;
  bool have_file = false;
  std::uint32_t current = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    if (line.rfind("SF:", 0) == 0) {
      current = files.id_of(trim(line.substr(3)));
      have_file = true;
      ++out.files_seen;
      continue;
    }
    if (line.rfind("DA:", 0) == 0) {
      std::string_view rest = line.substr(3);
      std::size_t comma = rest.find(',');
      std::uint64_t lineno = 0, count = 0;
      std::string_view count_field = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      std::size_t comma2 = count_field.find(',');  // optional trailing checksum
      if (comma2 != std::string_view::npos) count_field = count_field.substr(0, comma2);
      if (!have_file || comma == std::string_view::npos ||
          !covdetail::parse_u64(trim(rest.substr(0, comma)), lineno) ||
          !covdetail::parse_u64(trim(count_field), count) || lineno == 0) {
        ++out.skipped_lines;
        continue;
      }
      ++out.line_records;
      if (count > 0) out.covered.insert(current, static_cast<std::uint32_t>(lineno));
      continue;
    }
    if (trim(line) == "end_of_record") {
      have_file = false;
      continue;
    }
    // Other lcov record kinds carry no line coverage; skip them quietly.
    if (line.rfind("TN:", 0) == 0 || line.rfind("FN:", 0) == 0 || line.rfind("FNDA:", 0) == 0 ||
        line.rfind("FNF:", 0) == 0 || line.rfind("FNH:", 0) == 0 || line.rfind("LF:", 0) == 0 ||
        line.rfind("LH:", 0) == 0 || line.rfind("BRDA:", 0) == 0 || line.rfind("BRF:", 0) == 0 ||
        line.rfind("BRH:", 0) == 0 || line.rfind("BA:", 0) == 0 || line.rfind("VER:", 0) == 0)
      continue;

    // gcov text: count ':' lineno ':' source
    std::size_t c1 = line.find(':');
    if (c1 != std::string_view::npos) {
      bool executable = false, covered = false;
      if (covdetail::parse_gcov_count(trim(line.substr(0, c1)), executable, covered)) {
        std::string_view rest = line.substr(c1 + 1);
        std::size_t c2 = rest.find(':');
        std::uint64_t lineno = 0;
        if (c2 != std::string_view::npos && covdetail::parse_u64(trim(rest.substr(0, c2)), lineno)) {
          std::string_view src = rest.substr(c2 + 1);
          if (lineno == 0) {
            if (src.rfind("Source:", 0) == 0) {
              current = files.id_of(trim(src.substr(7)));
              have_file = true;
              ++out.files_seen;
            }
            continue;  // Graph:/Data:/Runs: and friends
          }
          if (!have_file) {
            ++out.skipped_lines;
            continue;
          }
          if (executable) {
            ++out.line_records;
            if (covered) out.covered.insert(current, static_cast<std::uint32_t>(lineno));
          }
          continue;
        }
      }
    }
    ++out.skipped_lines;
  }
  return out;
}

}  // namespace funfuzz
