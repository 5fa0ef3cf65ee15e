#pragma once

// Program-generation providers, prompt assembly, and the two-stage
// initialization pipeline: distill a base prompt from documentation, then
// derive one seed instruction per island and keep the better batch.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "funfuzz/config.hpp"
#include "funfuzz/hash.hpp"
#include "funfuzz/model.hpp"
#include "funfuzz/normalize.hpp"
#include "funfuzz/rng.hpp"
#include "funfuzz/sut.hpp"
#include "funfuzz/text.hpp"

namespace funfuzz {

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class GenerationProvider {
 public:
  virtual ~GenerationProvider() = default;
  // Returns exactly n raw completions or throws GenerationError.
  virtual std::vector<std::string> generate(const std::string& prompt, std::size_t n,
                                            double temperature, std::size_t max_tokens) = 0;
};

// Fixed phrases shared between the prompt builders and the mock provider,
// which keys its behavior off them the way a real model keys off wording.
namespace prompt_text {
inline constexpr const char* kTargetedHeader = "Focus especially on the following constructs:";
inline constexpr const char* kExampleBegin = "/* --- example program --- */";
inline constexpr const char* kExampleEnd = "/* --- end of example --- */";
inline constexpr const char* kDistillMarker = "Propose one complete prompt";
inline constexpr const char* kInstructionMarker = "different seed instructions";
inline constexpr const char* kDirectiveNew =
    "Write one new, self-contained C program following the instruction above.";
inline constexpr const char* kDirectiveMutate =
    "Mutate the example program above into a different program that still compiles.";
inline constexpr const char* kDirectiveEquiv =
    "Rewrite the example program above into a semantically equivalent program with different "
    "syntax.";
}  // namespace prompt_text

inline const char* transformation_directive(Strategy s) {
  switch (s) {
    case Strategy::generate_new: return prompt_text::kDirectiveNew;
    case Strategy::mutate_existing: return prompt_text::kDirectiveMutate;
    case Strategy::semantic_equiv: return prompt_text::kDirectiveEquiv;
  }
  return prompt_text::kDirectiveNew;
}

// Deterministic concatenation: base prompt, optional targeted-construct
// guidance, island instruction, optional example block, directive, and a
// trailing include to prime code output.
inline std::string render_prompt(const PromptState& state,
                                 const std::vector<std::string>& targeted_features = {}) {
  std::string out = state.base_prompt;
  if (!out.empty() && out.back() != '\n') out += '\n';
  if (!targeted_features.empty()) {
    out += "/* ";
    out += prompt_text::kTargetedHeader;
    out += ' ';
    for (std::size_t i = 0; i < targeted_features.size(); ++i) {
      if (i) out += ", ";
      out += targeted_features[i];
    }
    out += " */\n";
  }
  if (!state.seed_instruction.empty()) {
    out += state.seed_instruction;
    if (out.back() != '\n') out += '\n';
  }
  if (state.transformation != Strategy::generate_new && state.selected_example) {
    out += prompt_text::kExampleBegin;
    out += '\n';
    out += *state.selected_example;
    if (out.back() != '\n') out += '\n';
    out += prompt_text::kExampleEnd;
    out += '\n';
  }
  out += transformation_directive(state.transformation);
  out += '\n';
  out += "#include <stdio.h>\n";
  return out;
}

// Instructions are comment blocks optionally followed by include lines;
// anything else between blocks is wrapper prose and is dropped.
inline std::vector<std::string> parse_seed_instructions(const std::string& text) {
  enum class Mode { scanning, in_comment, post_comment };
  Mode mode = Mode::scanning;
  std::vector<std::string> out;
  std::vector<std::string> current;

  auto finalize = [&] {
    if (current.empty()) return;
    std::string block;
    for (const auto& l : current) {
      block += l;
      block += '\n';
    }
    out.push_back(std::move(block));
    current.clear();
  };

  for (auto line : split_lines(text)) {
    std::string_view t = trim(line);
    bool opens = t.starts_with("/*");
    switch (mode) {
      case Mode::scanning:
        if (opens) {
          current.emplace_back(line);
          mode = t.find("*/", 2) != std::string_view::npos ? Mode::post_comment : Mode::in_comment;
        }
        break;
      case Mode::in_comment:
        current.emplace_back(line);
        if (t.find("*/") != std::string_view::npos) mode = Mode::post_comment;
        break;
      case Mode::post_comment:
        if (is_include_line(line)) {
          current.emplace_back(line);
        } else if (t.empty()) {
          // soft separator; includes may still follow
        } else if (opens) {
          finalize();
          current.emplace_back(line);
          mode = t.find("*/", 2) != std::string_view::npos ? Mode::post_comment : Mode::in_comment;
        } else {
          finalize();
          mode = Mode::scanning;
        }
        break;
    }
  }
  finalize();
  return out;
}

inline std::string distill_request_prompt(const std::string& docs) {
  std::string p = "Below is documentation for the compiler under test.\n\n";
  p += docs;
  if (p.back() != '\n') p += '\n';
  p += "\n";
  p += prompt_text::kDistillMarker;
  p += " that instructs a language model to produce a single, complete, compilable C program "
       "exercising diverse language features. Output only the prompt text.\n";
  return p;
}

inline std::string instruction_request_prompt(const std::string& docs, std::size_t n) {
  std::string p = "Below is documentation for the compiler under test.\n\n";
  p += docs;
  if (p.back() != '\n') p += '\n';
  p += "\nExample seed instruction:\n";
  p += "/* Write a short C program exercising pointer arithmetic on arrays. */\n";
  p += "#include <stdio.h>\n\n";
  p += "Generate " + std::to_string(n) + " ";
  p += prompt_text::kInstructionMarker;
  p += " like the above one, each a C comment block optionally followed by include lines.\n";
  return p;
}

struct InstructionBatch {
  std::vector<std::string> instructions;
  int attempts = 1;
  bool padded = false;
  bool truncated = false;
};

inline const char* kFallbackInstruction =
    "/* Write a short C program exercising pointer arithmetic on arrays. */\n#include <stdio.h>\n";

// One completion is requested and parsed into n instructions; a wrong count
// gets one retry, then the batch is padded with duplicates of the last
// instruction or truncated to the first n. Deviations land in `warnings`.
inline InstructionBatch request_instruction_batch(const std::string& docs,
                                                  GenerationProvider& provider, std::size_t n,
                                                  double temperature, std::size_t max_tokens,
                                                  std::vector<std::string>& warnings) {
  InstructionBatch batch;
  std::string prompt = instruction_request_prompt(docs, n);
  auto fetch = [&] {
    auto outputs = provider.generate(prompt, 1, temperature, max_tokens);
    return parse_seed_instructions(outputs.at(0));
  };
  auto parsed = fetch();
  if (parsed.size() != n) {
    warnings.push_back("seed-instruction parse returned " + std::to_string(parsed.size()) +
                       " of " + std::to_string(n) + " at temperature " +
                       std::to_string(temperature) + "; retrying once");
    parsed = fetch();
    batch.attempts = 2;
  }
  if (parsed.size() < n) {
    batch.padded = true;
    warnings.push_back("seed-instruction batch short after retry (" +
                       std::to_string(parsed.size()) + "/" + std::to_string(n) +
                       "); padding with duplicates");
    if (parsed.empty()) parsed.push_back(kFallbackInstruction);
    while (parsed.size() < n) parsed.push_back(parsed.back());
  } else if (parsed.size() > n) {
    batch.truncated = true;
    warnings.push_back("seed-instruction batch long after retry (" +
                       std::to_string(parsed.size()) + "/" + std::to_string(n) +
                       "); keeping the first " + std::to_string(n));
    parsed.resize(n);
  }
  batch.instructions = std::move(parsed);
  return batch;
}

struct DistillationResult {
  std::string base_prompt;
  std::vector<std::string> island_instructions;
  std::string chosen_batch;  // "low-temp" or "high-temp"
  std::vector<std::size_t> validity_table;       // per base-prompt candidate
  std::vector<std::size_t> hybrid_valid_low;     // per instruction, chosen-order
  std::vector<std::size_t> hybrid_valid_high;
  std::vector<std::string> warnings;
  std::uint64_t programs_compiled = 0;  // unit evaluations spent here
};

namespace gendetail {

inline ResolvablePredicate probe_of(SutHarness& sut) {
  return [&sut](const std::string& name) { return sut.probe_header(name); };
}

// A raw sample counts as valid when at least one of its normalized units
// compiles cleanly. Every unit evaluation is tallied for budget reporting.
inline bool sample_compiles(const std::string& raw, SutHarness& sut,
                            std::uint64_t& compiles) {
  bool ok = false;
  for (const auto& unit : normalize_units(raw, probe_of(sut))) {
    ++compiles;
    if (sut.compile(unit).classification == Classification::success) ok = true;
  }
  return ok;
}

inline std::size_t count_valid(const std::vector<std::string>& raws, SutHarness& sut,
                               std::uint64_t& compiles) {
  std::size_t n = 0;
  for (const auto& raw : raws)
    if (sample_compiles(raw, sut, compiles)) ++n;
  return n;
}

}  // namespace gendetail

// Stage 1a: candidate base prompts (one conservative, the rest sampled hot),
// scored by how many of their programs compile; argmax wins, ties to the
// lowest index, an all-zero table falls back to candidate 0 with a warning.
inline std::pair<std::string, std::vector<std::size_t>> distill_base_prompt(
    const std::string& docs, GenerationProvider& provider, SutHarness& sut,
    const DistillationConfig& dcfg, const GenerationConfig& gcfg,
    std::vector<std::string>& warnings, std::uint64_t& programs_compiled) {
  std::string request = distill_request_prompt(docs);
  std::vector<std::string> candidates;
  for (auto& c : provider.generate(request, dcfg.candidates_low_temp, dcfg.low_temperature,
                                   gcfg.max_tokens))
    candidates.push_back(std::move(c));
  for (auto& c : provider.generate(request, dcfg.candidates_high_temp, dcfg.high_temperature,
                                   gcfg.max_tokens))
    candidates.push_back(std::move(c));

  std::vector<std::size_t> table;
  for (const auto& cand : candidates) {
    auto programs = provider.generate(cand, dcfg.programs_per_candidate, gcfg.temperature,
                                      gcfg.max_tokens);
    table.push_back(gendetail::count_valid(programs, sut, programs_compiled));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i)
    if (table[i] > table[best]) best = i;
  if (table[best] == 0)
    warnings.push_back("all base-prompt candidates scored 0; falling back to candidate 0");
  return {candidates[best], table};
}

// Stage 1b+1c: derive both instruction batches and keep the one whose
// hybrid prompts compile more programs in total; ties keep the low batch.
inline DistillationResult run_distillation(const std::string& docs, GenerationProvider& provider,
                                           SutHarness& sut, std::size_t n_islands,
                                           const GenerationConfig& gcfg) {
  const DistillationConfig& dcfg = gcfg.distillation;
  DistillationResult result;

  auto [base, table] = distill_base_prompt(docs, provider, sut, dcfg, gcfg, result.warnings,
                                           result.programs_compiled);
  result.base_prompt = std::move(base);
  result.validity_table = std::move(table);

  InstructionBatch low = request_instruction_batch(docs, provider, n_islands,
                                                   dcfg.low_temperature, gcfg.max_tokens,
                                                   result.warnings);
  InstructionBatch high = request_instruction_batch(docs, provider, n_islands,
                                                    dcfg.high_temperature, gcfg.max_tokens,
                                                    result.warnings);

  auto hybrid_counts = [&](const InstructionBatch& batch) {
    std::vector<std::size_t> counts;
    for (const auto& instr : batch.instructions) {
      PromptState state;
      state.base_prompt = result.base_prompt;
      state.seed_instruction = instr;
      auto programs = provider.generate(render_prompt(state), dcfg.programs_per_hybrid,
                                        gcfg.temperature, gcfg.max_tokens);
      counts.push_back(gendetail::count_valid(programs, sut, result.programs_compiled));
    }
    return counts;
  };

  result.hybrid_valid_low = hybrid_counts(low);
  result.hybrid_valid_high = hybrid_counts(high);
  std::size_t sum_low = 0, sum_high = 0;
  for (auto c : result.hybrid_valid_low) sum_low += c;
  for (auto c : result.hybrid_valid_high) sum_high += c;

  if (sum_high > sum_low) {
    result.chosen_batch = "high-temp";
    result.island_instructions = std::move(high.instructions);
  } else {
    result.chosen_batch = "low-temp";
    result.island_instructions = std::move(low.instructions);
  }
  return result;
}

struct BatchOutcome {
  bool ok = false;
  std::vector<std::string> outputs;
  int attempts = 0;
  std::string error;
};

// Transient provider failures back off exponentially for up to three
// attempts; a final failure is reported so the caller can skip the
// iteration without consuming budget.
inline BatchOutcome request_batch(const PromptState& state,
                                  const std::vector<std::string>& targeted_features,
                                  const GenerationConfig& cfg, GenerationProvider& provider,
                                  const std::function<void(int)>& sleep_ms = {}) {
  BatchOutcome out;
  std::string prompt = render_prompt(state, targeted_features);
  for (int attempt = 1; attempt <= 3; ++attempt) {
    out.attempts = attempt;
    try {
      out.outputs = provider.generate(prompt, cfg.samples_per_call, cfg.temperature,
                                      cfg.max_tokens);
      out.ok = true;
      return out;
    } catch (const GenerationError& e) {
      out.error = e.what();
      if (attempt < 3) {
        int delay = cfg.http.backoff_ms << (attempt - 1);
        if (sleep_ms)
          sleep_ms(delay);
        else
          std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      }
    }
  }
  return out;
}

}  // namespace funfuzz
