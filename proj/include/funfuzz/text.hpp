#pragma once

// Shared lexical helpers for normalization, the simulated SUT and feature
// detection: line handling, a comment/string mask, a brace-depth scanner for
// top-level entry functions, whitespace tokens and edit distance.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace funfuzz {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (!out.empty() && out.back().empty() && text.size() > 0 && text.back() == '\n') {
    // Trailing newline produces an empty final segment; drop it, join_lines
    // restores the newline via the caller's flag.
    out.pop_back();
  }
  return out;
}

inline bool ends_with_newline(std::string_view text) {
  return !text.empty() && text.back() == '\n';
}

template <typename Seq>
inline std::string join_lines(const Seq& lines, bool trailing_newline) {
  std::string out;
  bool first = true;
  for (const auto& l : lines) {
    if (!first) out += '\n';
    out.append(l.begin(), l.end());
    first = false;
  }
  if (trailing_newline) out += '\n';
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool is_blank(std::string_view text) {
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return true;
}

inline std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

// Replaces the interiors of comments, string literals and char literals with
// spaces, preserving length and newlines. Downstream scanners then treat the
// result positionally: braces, identifiers and patterns found in the mask are
// guaranteed to be real code.
inline std::string mask_comments_and_strings(std::string_view src) {
  std::string out(src);
  enum class St { code, line_comment, block_comment, str, chr };
  St st = St::code;
  for (std::size_t i = 0; i < src.size(); ++i) {
    char c = src[i];
    char next = i + 1 < src.size() ? src[i + 1] : '\0';
    switch (st) {
      case St::code:
        if (c == '/' && next == '/') {
          st = St::line_comment;
          out[i] = out[i + 1] = ' ';
          ++i;
        } else if (c == '/' && next == '*') {
          st = St::block_comment;
          out[i] = out[i + 1] = ' ';
          ++i;
        } else if (c == '"') {
          st = St::str;
          out[i] = ' ';
        } else if (c == '\'') {
          st = St::chr;
          out[i] = ' ';
        }
        break;
      case St::line_comment:
        if (c == '\n') st = St::code;
        else out[i] = ' ';
        break;
      case St::block_comment:
        if (c == '*' && next == '/') {
          out[i] = out[i + 1] = ' ';
          st = St::code;
          ++i;
        } else if (c != '\n') {
          out[i] = ' ';
        }
        break;
      case St::str:
        if (c == '\\' && i + 1 < src.size()) {
          out[i] = ' ';
          if (next != '\n') out[i + 1] = ' ';
          ++i;
        } else if (c == '"') {
          out[i] = ' ';
          st = St::code;
        } else if (c != '\n') {
          out[i] = ' ';
        }
        break;
      case St::chr:
        if (c == '\\' && i + 1 < src.size()) {
          out[i] = ' ';
          if (next != '\n') out[i + 1] = ' ';
          ++i;
        } else if (c == '\'') {
          out[i] = ' ';
          st = St::code;
        } else if (c != '\n') {
          out[i] = ' ';
        }
        break;
    }
  }
  return out;
}

inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Byte offsets of top-level `int main` / `void main` definition starts,
// computed on the masked text so literals and comments cannot fool the brace
// counter.
inline std::vector<std::size_t> find_entry_definitions(std::string_view masked) {
  std::vector<std::size_t> offsets;
  int depth = 0;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    char c = masked[i];
    if (c == '{') { ++depth; continue; }
    if (c == '}') { if (depth > 0) --depth; continue; }
    if (depth != 0) continue;
    if ((c == 'i' || c == 'v') && (i == 0 || !is_ident_char(masked[i - 1]))) {
      std::string_view rest = masked.substr(i);
      std::size_t kw_len = 0;
      if (rest.starts_with("int") && !is_ident_char(rest.size() > 3 ? rest[3] : ' ')) kw_len = 3;
      else if (rest.starts_with("void") && !is_ident_char(rest.size() > 4 ? rest[4] : ' ')) kw_len = 4;
      if (kw_len == 0) continue;
      std::size_t j = i + kw_len;
      while (j < masked.size() && std::isspace(static_cast<unsigned char>(masked[j]))) ++j;
      if (!masked.substr(j).starts_with("main")) continue;
      j += 4;
      if (j < masked.size() && is_ident_char(masked[j])) continue;
      while (j < masked.size() && std::isspace(static_cast<unsigned char>(masked[j]))) ++j;
      if (j < masked.size() && masked[j] == '(') offsets.push_back(i);
    }
  }
  return offsets;
}

inline std::size_t line_start_at(std::string_view text, std::size_t offset) {
  if (offset > text.size()) offset = text.size();
  std::size_t nl = text.rfind('\n', offset == 0 ? 0 : offset - 1);
  return nl == std::string_view::npos ? 0 : nl + 1;
}

// Plain Levenshtein distance; callers cap input length themselves.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(a.size() + 1), cur(a.size() + 1);
  for (std::size_t i = 0; i <= a.size(); ++i) prev[i] = i;
  for (std::size_t j = 1; j <= b.size(); ++j) {
    cur[0] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      std::size_t sub = prev[i - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[i] = std::min({prev[i] + 1, cur[i - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[a.size()];
}

inline double normalized_levenshtein(std::string_view a, std::string_view b) {
  std::size_t m = std::max(a.size(), b.size());
  if (m == 0) return 0.0;
  return double(levenshtein(a, b)) / double(m);
}

}  // namespace funfuzz
