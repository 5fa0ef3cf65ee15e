#pragma once

// Normalization of raw generator output into compilable units. Deterministic
// and deliberately conservative: include lines and fence apparatus are the
// only things ever touched; payload lines pass through byte-identical.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "funfuzz/config.hpp"
#include "funfuzz/text.hpp"

namespace funfuzz {

using ResolvablePredicate = std::function<bool(const std::string&)>;

struct HeaderHint {
  std::string pattern;  // matched case-sensitively against diagnostics
  std::string header;
};
using HeaderHintTable = std::vector<HeaderHint>;

inline HeaderHintTable default_header_hint_table() {
  HeaderHintTable t;
  for (const auto& [pattern, header] : default_header_hints()) t.push_back({pattern, header});
  return t;
}

inline HeaderHintTable header_hint_table_from_config(const CampaignConfig& cfg) {
  HeaderHintTable t;
  for (const auto& [pattern, header] : cfg.header_hints) t.push_back({pattern, header});
  return t;
}

inline bool is_include_line(std::string_view line) {
  return trim(line).starts_with("#include");
}

// Parses an include line's target. Empty result means the line is malformed.
inline std::optional<std::string> parse_include_target(std::string_view line) {
  std::string_view s = trim(line);
  if (!s.starts_with("#include")) return std::nullopt;
  s.remove_prefix(8);
  s = trim(s);
  if (s.empty()) return std::nullopt;
  char open = s.front();
  char close = open == '<' ? '>' : (open == '"' ? '"' : '\0');
  if (close == '\0') return std::nullopt;
  s.remove_prefix(1);
  std::size_t end = s.find(close);
  if (end == std::string_view::npos || end == 0) return std::nullopt;
  std::string name(s.substr(0, end));
  std::string_view rest = trim(s.substr(end + 1));
  if (!rest.empty() && !rest.starts_with("//") && !rest.starts_with("/*")) return std::nullopt;
  return name;
}

inline std::string strip_bad_includes(const std::string& source,
                                      const ResolvablePredicate& resolvable) {
  auto lines = split_lines(source);
  std::vector<std::string_view> kept;
  for (auto line : lines) {
    if (is_include_line(line)) {
      auto target = parse_include_target(line);
      if (!target || !resolvable(*target)) continue;
    }
    kept.push_back(line);
  }
  return join_lines(kept, ends_with_newline(source));
}

// One pass over the hint table: a pattern seen in the diagnostics prepends its
// header unless the source already includes it. No fixpoint iteration; the
// caller recompiles at most once.
inline std::pair<std::string, std::vector<std::string>> add_missing_headers(
    const std::string& source, const std::string& diagnostics, const HeaderHintTable& table) {
  std::vector<std::string> existing;
  for (auto line : split_lines(source))
    if (auto t = parse_include_target(line)) existing.push_back(*t);

  std::vector<std::string> added;
  for (const auto& hint : table) {
    if (diagnostics.find(hint.pattern) == std::string::npos) continue;
    bool present = false;
    for (const auto& e : existing)
      if (e == hint.header) { present = true; break; }
    for (const auto& a : added)
      if (a == hint.header) { present = true; break; }
    if (!present) added.push_back(hint.header);
  }
  if (added.empty()) return {source, added};

  std::string out;
  for (const auto& h : added) out += "#include <" + h + ">\n";
  out += source;
  return {out, added};
}

namespace normdetail {

inline bool is_fence_line(std::string_view line) { return trim(line).starts_with("```"); }

inline std::vector<std::string> include_lines_of(std::string_view text) {
  std::vector<std::string> out;
  for (auto line : split_lines(text))
    if (is_include_line(line)) out.emplace_back(line);
  return out;
}

inline bool has_include_line(std::string_view text) {
  for (auto line : split_lines(text))
    if (is_include_line(line)) return true;
  return false;
}

struct EntrySplit {
  std::vector<std::string> units;
  std::vector<std::string> donor;  // include lines preceding the first entry
};

inline EntrySplit split_on_entries(const std::string& block) {
  EntrySplit result;
  std::string masked = mask_comments_and_strings(block);
  auto defs = find_entry_definitions(masked);
  if (defs.size() < 2) {
    result.units.push_back(block);
    return result;
  }
  std::vector<std::size_t> cuts;
  for (std::size_t i = 1; i < defs.size(); ++i) {
    std::size_t cut = line_start_at(block, defs[i]);
    // A later program's own include lines usually sit directly above its
    // entry definition; pull the cut back so they travel with that unit.
    // The previous definition line is a natural barrier: it is neither an
    // include line nor blank, so the walk can never swallow a whole unit.
    while (cut > 0) {
      std::size_t prev_start = line_start_at(block, cut - 1);
      if (prev_start >= cut) break;
      std::string_view prev_line(block.data() + prev_start, cut - 1 - prev_start);
      if (!is_include_line(prev_line) && !is_blank(prev_line)) break;
      cut = prev_start;
    }
    if (cuts.empty() ? cut > 0 : cut > cuts.back()) cuts.push_back(cut);
  }
  std::size_t prev = 0;
  for (std::size_t cut : cuts) {
    result.units.push_back(block.substr(prev, cut - prev));
    prev = cut;
  }
  result.units.push_back(block.substr(prev));
  result.donor = include_lines_of(std::string_view(block).substr(0, defs[0]));
  return result;
}

inline std::string prepend_donor(const std::vector<std::string>& donor, const std::string& unit) {
  if (donor.empty()) return unit;
  std::string out;
  for (const auto& l : donor) {
    out += l;
    out += '\n';
  }
  out += unit;
  return out;
}

}  // namespace normdetail

inline std::vector<std::string> split_compilation_units(const std::string& raw) {
  using namespace normdetail;

  auto lines = split_lines(raw);
  bool any_fence = false;
  for (auto line : lines)
    if (is_fence_line(line)) { any_fence = true; break; }

  if (!any_fence) {
    auto es = split_on_entries(raw);
    if (es.units.size() == 1) return {raw};  // single program: byte-identical
    std::vector<std::string> out;
    for (const auto& u : es.units)
      out.push_back(has_include_line(u) ? u : prepend_donor(es.donor, u));
    return out;
  }

  // Fenced path: code lives between fence lines, everything outside is
  // wrapper prose. Include lines in the leading prose still act as a donor
  // for fenced units that carry none of their own.
  std::vector<std::string> blocks;
  std::vector<std::string> prose_donor;
  bool inside = false;
  bool seen_first_fence = false;
  std::vector<std::string_view> current;
  for (auto line : lines) {
    if (is_fence_line(line)) {
      if (inside) {
        blocks.push_back(join_lines(current, false));
        current.clear();
      }
      inside = !inside;
      seen_first_fence = true;
      continue;
    }
    if (inside) {
      current.push_back(line);
    } else if (!seen_first_fence && is_include_line(line)) {
      prose_donor.emplace_back(line);
    }
  }
  if (inside && !current.empty()) blocks.push_back(join_lines(current, false));

  std::vector<std::string> out;
  for (const auto& block : blocks) {
    if (is_blank(block)) continue;
    auto es = split_on_entries(block);
    const auto& donor = es.donor.empty() ? prose_donor : es.donor;
    for (const auto& u : es.units)
      out.push_back(has_include_line(u) ? u : prepend_donor(donor, u));
  }
  if (out.empty()) {
    // Fence lines with no payload between them: fall back to the raw text
    // minus the fence apparatus.
    std::vector<std::string_view> kept;
    for (auto line : lines)
      if (!is_fence_line(line)) kept.push_back(line);
    std::string fallback = join_lines(kept, ends_with_newline(raw));
    if (!is_blank(fallback)) out.push_back(fallback);
  }
  return out;
}

// Full pipeline used by the evolution loop: split, then strip include lines
// that cannot resolve. Units reduced to pure whitespace are dropped.
inline std::vector<std::string> normalize_units(const std::string& raw,
                                                const ResolvablePredicate& resolvable) {
  std::vector<std::string> out;
  for (const auto& unit : split_compilation_units(raw)) {
    std::string stripped = strip_bad_includes(unit, resolvable);
    if (!is_blank(stripped)) out.push_back(std::move(stripped));
  }
  return out;
}

}  // namespace funfuzz
