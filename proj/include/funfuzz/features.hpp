#pragma once

// Targeted-construct detection: decides whether a source unit uses a named
// language feature. The detector table maps feature names to the literal
// pattern that marks the construct; matches only count outside comments and
// string literals, and a pattern with identifier edges must sit on
// identifier boundaries ("typedef" never fires on "typedefs").

#include <map>
#include <string>

#include "funfuzz/config.hpp"
#include "funfuzz/text.hpp"

namespace funfuzz {

inline bool detect_feature(const std::string& source, const std::string& feature,
                           const std::map<std::string, std::string>& detectors) {
  auto it = detectors.find(feature);
  if (it == detectors.end()) throw ConfigError("unknown targeted feature: " + feature);
  const std::string& pattern = it->second;
  if (pattern.empty()) return false;

  std::string masked = mask_comments_and_strings(source);
  bool left_edge_ident = is_ident_char(pattern.front());
  bool right_edge_ident = is_ident_char(pattern.back());
  std::size_t pos = 0;
  while ((pos = masked.find(pattern, pos)) != std::string::npos) {
    bool left_ok = !left_edge_ident || pos == 0 || !is_ident_char(masked[pos - 1]);
    std::size_t end = pos + pattern.size();
    bool right_ok = !right_edge_ident || end >= masked.size() || !is_ident_char(masked[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

inline bool detect_feature(const std::string& source, const std::string& feature) {
  return detect_feature(source, feature, default_detectors());
}

}  // namespace funfuzz
