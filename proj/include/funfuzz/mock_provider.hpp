#pragma once

// Deterministic stand-in for a text-completion model. Output depends only on
// (provider seed, prompt text, per-prompt draw index), never on call order
// across prompts, so multi-worker runs and reordered batch evaluations
// reproduce byte for byte. At temperature zero every call collapses onto
// draw index 0, mimicking greedy decoding.

#include <cctype>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "funfuzz/config.hpp"
#include "funfuzz/generation.hpp"
#include "funfuzz/hash.hpp"
#include "funfuzz/rng.hpp"
#include "funfuzz/text.hpp"

namespace funfuzz {

namespace mockdetail {

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  return splitmix64(x);
}

inline const std::vector<std::string>& topic_pool() {
  static const std::vector<std::string> topics = {
      "nested loops over arrays",
      "struct copying and comparison",
      "function pointers and dispatch tables",
      "integer promotion and wraparound",
      "string buffers and bounded copies",
      "floating point accumulation",
      "switch-based state machines",
      "recursive helper functions",
      "bitwise masks and shifts",
      "short-circuit boolean chains",
      "comma expressions in loops",
      "pointer arithmetic on arrays",
      "conditional expressions",
      "compound literals",
      "do-while retry loops",
      "early returns and guard clauses",
  };
  return topics;
}

// Bounded variation keeps the token universe finite: coverage then saturates
// per construct and novelty has to come from statement combinations.
inline constexpr int kVariants = 4;
inline constexpr int kConstants[6] = {1, 2, 3, 5, 8, 13};

inline std::string fill(std::string tmpl, int variant, int constant) {
  const std::string v = "v" + std::to_string(variant);
  const std::string n = std::to_string(constant);
  for (std::string::size_type p; (p = tmpl.find("{V}")) != std::string::npos;)
    tmpl.replace(p, 3, v);
  for (std::string::size_type p; (p = tmpl.find("{N}")) != std::string::npos;)
    tmpl.replace(p, 3, n);
  return tmpl;
}

// Every template carries an "s<id>_" marker token so statements can be
// recognized and reused when the prompt embeds a parent program.
inline const std::vector<std::string>& statement_templates() {
  static const std::vector<std::string> t = {
      "  int s0_{V} = {N};",
      "  int s1_{V} = {N} * 3 + 1; acc += s1_{V};",
      "  unsigned s2_{V} = {N}u << 2; acc |= (int)s2_{V};",
      "  long s3_{V} = {N}L * {N}L; acc ^= (int)s3_{V};",
      "  double s4_{V} = {N} / 2.0; acc += (int)s4_{V};",
      "  char s5_{V}[8] = \"t{N}\"; acc += s5_{V}[0];",
      "  int s6_{V}[4] = {0, {N}, {N} + 1, 3}; acc += s6_{V}[2];",
      "  struct { int a; int b; } s7_{V} = {{N}, {N}}; acc += s7_{V}.b;",
      "  int s8_{V} = ({N} > 2) ? {N} : -{N}; acc -= s8_{V};",
      "  for (int s9_{V} = 0; s9_{V} < {N}; ++s9_{V}) acc += s9_{V};",
      "  while (acc > {N} * 100) acc -= {N};",
      "  switch (acc % {N}) { case 0: acc += {N}; break; default: acc ^= {N}; }",
      "  if (acc < {N}) acc = {N}; else acc = acc - {N};",
      "  int s13_{V} = acc, s14_{V} = {N}; acc = s13_{V} + s14_{V};",
      "  do { acc -= {N}; } while (acc > {N} * 50);",
      "  acc = (acc << {N}) | (acc >> (31 - {N}));",
      "  int s16_{V} = (acc, {N}, acc + {N}); acc = s16_{V};",
      "  const int s17_{V} = {N}; acc += s17_{V} * s17_{V};",
      "  short s18_{V} = (short)(acc + {N}); acc = s18_{V};",
      "  int s19_{V} = !(acc % {N}) && (acc > -{N}); acc += s19_{V};",
  };
  return t;
}

// Feature-directed statements; the fallback embeds the feature text verbatim
// so downstream detectors can find it as a code token.
inline std::string construct_statement(const std::string& feature, int variant, int constant) {
  if (feature == "typedef")
    return fill("  typedef int td{N}_{V}; td{N}_{V} s_typedef_{V} = {N}; acc += s_typedef_{V};",
                variant, constant);
  if (feature == "union")
    return fill("  union { int i; char c[4]; } s_union_{V}; s_union_{V}.i = {N}; "
                "acc += s_union_{V}.c[0];",
                variant, constant);
  if (feature == "goto")
    return fill("  if (acc % {N} == 0) goto s_goto_{V}; acc += {N}; s_goto_{V}: acc ^= {N};",
                variant, constant);
  return fill("  " + feature + " s_feat_{V} = {{N}};", variant, constant);
}

struct CallOption {
  const char* line;
  const char* header;
  double prob;
};

// Call lines deliberately carry no statement marker: a reused call without
// its include would trip the implicit-declaration check, so calls are always
// re-derived alongside their headers instead of harvested from parents.
inline constexpr CallOption kCallOptions[] = {
    {"  printf(\"acc=%d\\n\", acc);", "stdio.h", 0.60},
    {"  { void* blk = malloc((unsigned long)(acc > 0 ? acc : 1)); free(blk); }", "stdlib.h",
     0.15},
    {"  acc += (int)strlen(\"mockstr\");", "string.h", 0.10},
    {"  acc += (int)sqrt((double)(acc < 0 ? -acc : acc));", "math.h", 0.10},
};

inline bool has_statement_marker(std::string_view line) {
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    if (line[i] != 's') continue;
    if (i > 0 && is_ident_char(line[i - 1])) continue;
    std::size_t j = i + 1;
    if (line[j] == '_') return true;
    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i + 1 && j < line.size() && line[j] == '_') return true;
  }
  return false;
}

inline std::vector<std::string> harvest_statements(std::string_view prompt) {
  std::vector<std::string> lines;
  std::size_t begin = prompt.find(prompt_text::kExampleBegin);
  if (begin == std::string_view::npos) return lines;
  std::size_t end = prompt.find(prompt_text::kExampleEnd, begin);
  std::string_view region =
      prompt.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin);
  for (auto line : split_lines(region))
    if (line.starts_with("  ") && has_statement_marker(line)) lines.emplace_back(line);
  return lines;
}

inline std::vector<std::string> parse_targeted_features(std::string_view prompt) {
  std::vector<std::string> features;
  std::size_t at = prompt.find(prompt_text::kTargetedHeader);
  if (at == std::string_view::npos) return features;
  at += std::string_view(prompt_text::kTargetedHeader).size();
  std::size_t stop = prompt.find("*/", at);
  std::string_view list = prompt.substr(at, stop == std::string_view::npos ? std::string_view::npos
                                                                           : stop - at);
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    std::string_view item = list.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                             : comma - pos);
    std::string f{trim(item)};
    if (!f.empty()) features.push_back(std::move(f));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return features;
}

inline std::size_t requested_instruction_count(std::string_view prompt) {
  std::size_t at = prompt.rfind("Generate ");
  if (at == std::string_view::npos) return 1;
  at += 9;
  std::size_t n = 0;
  while (at < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[at])))
    n = n * 10 + static_cast<std::size_t>(prompt[at++] - '0');
  return n == 0 ? 1 : n;
}

}  // namespace mockdetail

class MockProvider : public GenerationProvider {
 public:
  MockProvider(const MockProviderConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}

  std::vector<std::string> generate(const std::string& prompt, std::size_t n, double temperature,
                                    std::size_t /*max_tokens*/) override {
    std::uint64_t prompt_hash = fnv1a64(prompt);
    std::uint64_t base = 0;
    {
      std::lock_guard<std::mutex> lock(mu_);
      std::uint64_t& counter = draws_[prompt_hash];
      base = counter;
      counter += n;
    }
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t draw = temperature <= 0.0 ? 0 : base + i;
      Rng rng(mockdetail::mix(mockdetail::mix(seed_, prompt_hash), draw));
      out.push_back(emit(prompt, prompt_hash, rng));
    }
    return out;
  }

 private:
  std::string emit(const std::string& prompt, std::uint64_t prompt_hash, Rng& rng) {
    using namespace prompt_text;
    if (prompt.find(kDistillMarker) != std::string::npos) return emit_candidate_prompt(rng);
    if (prompt.find(kInstructionMarker) != std::string::npos)
      return emit_instruction_sheet(mockdetail::requested_instruction_count(prompt), rng);
    return emit_program(prompt, prompt_hash, rng);
  }

  std::string emit_candidate_prompt(Rng& rng) {
    static const std::vector<std::string> shapes = {
        "Write one complete C program that compiles with a strict compiler. Use varied "
        "declarations and control flow. Lean toward {T}.",
        "Produce a single self-contained C translation unit. It must compile cleanly. Mix "
        "arithmetic, branching, and {T}.",
        "Generate exactly one C program, no commentary. Keep it standard C that any compiler "
        "accepts. Favor {T}.",
        "You write test programs for compilers. Emit one compilable C program with diverse "
        "constructs, especially {T}.",
        "Output a short C program that a compiler should accept without errors, mixing loops, "
        "calls, and {T}.",
        "Compose one valid C program. Prefer unusual but standard constructs such as {T}.",
    };
    std::string shape = shapes[rng.index(shapes.size())];
    const auto& topics = mockdetail::topic_pool();
    const std::string& topic = topics[rng.index(topics.size())];
    std::string::size_type p = shape.find("{T}");
    shape.replace(p, 3, topic);
    return shape + "\n";
  }

  std::string emit_instruction_sheet(std::size_t k, Rng& rng) {
    const auto& topics = mockdetail::topic_pool();
    std::string sheet = "Here are the seed instructions:\n\n";
    std::vector<std::size_t> picks;
    if (k <= topics.size()) {
      picks = rng.sample_without_replacement(topics.size(), k);
    } else {
      for (std::size_t i = 0; i < k; ++i) picks.push_back(rng.index(topics.size()));
    }
    for (std::size_t i = 0; i < k; ++i) {
      sheet += "/* Write a C program that exercises " + topics[picks[i]] + ". */\n";
      if (rng.uniform01() < 0.6) sheet += "#include <stdio.h>\n";
      sheet += "\n";
    }
    return sheet;
  }

  // Draw order below is fixed and is part of the determinism contract.
  std::string emit_program(const std::string& prompt, std::uint64_t prompt_hash, Rng& rng) {
    using namespace mockdetail;
    using namespace prompt_text;

    // Prompt wording sets a quality level; weaker prompts break structure
    // more often, which is what distillation selection discriminates on.
    std::uint64_t qbits = mix(prompt_hash, fnv1a64("mock-quality"));
    double quality = 0.55 + 0.45 * (static_cast<double>(qbits >> 11) * 0x1.0p-53);

    double reuse_prob = 0.0;
    std::size_t fresh_min = 3, fresh_span = 6;
    if (prompt.find(kDirectiveEquiv) != std::string::npos) {
      reuse_prob = 0.95;
      fresh_min = 0;
      fresh_span = 2;
    } else if (prompt.find(kDirectiveMutate) != std::string::npos) {
      reuse_prob = 0.7;
      fresh_min = 1;
      fresh_span = 3;
    }

    std::vector<std::string> statements;
    if (reuse_prob > 0.0) {
      for (auto& line : harvest_statements(prompt))
        if (rng.uniform01() < reuse_prob) statements.push_back(std::move(line));
    }
    std::size_t fresh = fresh_min + rng.index(fresh_span);
    const auto& pool = statement_templates();
    for (std::size_t i = 0; i < fresh; ++i) {
      const std::string& tmpl = pool[rng.index(pool.size())];
      int variant = static_cast<int>(rng.index(kVariants));
      int constant = kConstants[rng.index(6)];
      statements.push_back(fill(tmpl, variant, constant));
    }

    auto targeted = parse_targeted_features(prompt);
    if (!targeted.empty() && rng.uniform01() < cfg_.construct_bias) {
      for (const auto& feature : targeted) {
        int variant = static_cast<int>(rng.index(kVariants));
        int constant = kConstants[rng.index(6)];
        std::size_t pos = statements.empty() ? 0 : rng.index(statements.size() + 1);
        statements.insert(statements.begin() + static_cast<std::ptrdiff_t>(pos),
                          construct_statement(feature, variant, constant));
      }
    }

    std::vector<std::string> calls;
    std::vector<std::string> headers;
    for (const auto& opt : kCallOptions) {
      if (rng.uniform01() < opt.prob) {
        calls.emplace_back(opt.line);
        headers.emplace_back(opt.header);
      }
    }

    std::string body;
    for (const auto& h : headers) {
      if (rng.uniform01() < cfg_.missing_include_probability) continue;
      body += "#include <" + h + ">\n";
    }
    if (rng.uniform01() < cfg_.bad_include_probability)
      body += "#include <fuzzmock" + std::to_string(kConstants[rng.index(6)]) + "_internal.h>\n";
    if (!body.empty()) body += "\n";

    if (rng.uniform01() < 0.25) {
      int variant = static_cast<int>(rng.index(kVariants));
      int constant = kConstants[rng.index(6)];
      body += fill("static int helper_{V}(int x) { return x * {N} + 1; }\n\n", variant, constant);
    }

    body += "int main(void) {\n";
    body += fill("  int acc = {N};\n", 0, kConstants[rng.index(6)]);
    for (const auto& s : statements) body += s + "\n";
    for (const auto& c : calls) body += c + "\n";
    body += "  return acc & 0xff;\n";

    bool broken = rng.uniform01() < (1.0 - quality) * 0.5;
    if (!broken) body += "}\n";

    if (rng.uniform01() < cfg_.multi_program_probability)
      body += fill("\nint main(void) { return {N}; }\n", 0, kConstants[rng.index(6)]);

    if (rng.uniform01() < cfg_.fence_probability) {
      std::string wrapped = "Sure, here is a program for you:\n\n```c\n";
      wrapped += body;
      wrapped += "```\n\nLet me know if you want another.\n";
      return wrapped;
    }
    return body;
  }

  MockProviderConfig cfg_;
  std::uint64_t seed_;
  std::mutex mu_;
  std::unordered_map<std::uint64_t, std::uint64_t> draws_;
};

}  // namespace funfuzz
