#pragma once

// Campaign persistence: append-only line-delimited records for evaluations
// and the coverage time series, content-addressed program storage, and the
// config/distillation/summary documents. Workers hand records to a bounded
// queue; a single writer thread owns every stream so appends never interleave
// mid-line. Write failures never interrupt a campaign; they latch an error
// flag the summary reports as data loss.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "funfuzz/config.hpp"
#include "funfuzz/generation.hpp"
#include "funfuzz/hash.hpp"
#include "funfuzz/model.hpp"

namespace funfuzz {

struct EvaluationRecord {
  std::string kind;  // "evaluation" or "migrant-reeval"
  double t = 0;
  std::uint32_t island_id = 0;
  Id program_id = 0;
  std::string address;  // content address under programs/
  std::string classification;
  std::uint64_t gain = 0;
  double score = 0;
  double compile_time = 0;
  std::string origin;
  std::string strategy;
  std::optional<Id> parent_id;
};

inline nlohmann::json to_json(const EvaluationRecord& r) {
  nlohmann::json j{{"kind", r.kind},
                   {"t", r.t},
                   {"island", r.island_id},
                   {"id", r.program_id},
                   {"address", r.address},
                   {"classification", r.classification},
                   {"gain", r.gain},
                   {"score", r.score},
                   {"compile_time", r.compile_time},
                   {"origin", r.origin},
                   {"strategy", r.strategy}};
  if (r.parent_id) j["parent_id"] = *r.parent_id;
  return j;
}

inline EvaluationRecord evaluation_from_json(const nlohmann::json& j) {
  EvaluationRecord r;
  r.kind = j.at("kind").get<std::string>();
  r.t = j.at("t").get<double>();
  r.island_id = j.at("island").get<std::uint32_t>();
  r.program_id = j.at("id").get<Id>();
  r.address = j.at("address").get<std::string>();
  r.classification = j.at("classification").get<std::string>();
  r.gain = j.at("gain").get<std::uint64_t>();
  r.score = j.at("score").get<double>();
  r.compile_time = j.at("compile_time").get<double>();
  r.origin = j.at("origin").get<std::string>();
  r.strategy = j.at("strategy").get<std::string>();
  if (j.contains("parent_id")) r.parent_id = j.at("parent_id").get<Id>();
  return r;
}

struct TimeSeriesPoint {
  double t = 0;
  std::vector<std::uint64_t> island_frontiers;
  std::uint64_t union_frontier = 0;
  std::uint64_t programs_generated = 0;
  std::uint64_t programs_compiled = 0;
  std::uint64_t valid_programs = 0;
  std::uint64_t unique_bugs = 0;
};

inline nlohmann::json to_json(const TimeSeriesPoint& p) {
  return nlohmann::json{{"t", p.t},
                        {"island_frontiers", p.island_frontiers},
                        {"union_frontier", p.union_frontier},
                        {"programs_generated", p.programs_generated},
                        {"programs_compiled", p.programs_compiled},
                        {"valid_programs", p.valid_programs},
                        {"unique_bugs", p.unique_bugs}};
}

inline TimeSeriesPoint timeseries_from_json(const nlohmann::json& j) {
  TimeSeriesPoint p;
  p.t = j.at("t").get<double>();
  p.island_frontiers = j.at("island_frontiers").get<std::vector<std::uint64_t>>();
  p.union_frontier = j.at("union_frontier").get<std::uint64_t>();
  p.programs_generated = j.at("programs_generated").get<std::uint64_t>();
  p.programs_compiled = j.at("programs_compiled").get<std::uint64_t>();
  p.valid_programs = j.at("valid_programs").get<std::uint64_t>();
  p.unique_bugs = j.at("unique_bugs").get<std::uint64_t>();
  return p;
}

inline nlohmann::json to_json(const DistillationResult& d) {
  return nlohmann::json{{"base_prompt", d.base_prompt},
                        {"island_instructions", d.island_instructions},
                        {"chosen_batch", d.chosen_batch},
                        {"validity_table", d.validity_table},
                        {"hybrid_valid_low", d.hybrid_valid_low},
                        {"hybrid_valid_high", d.hybrid_valid_high},
                        {"warnings", d.warnings},
                        {"programs_compiled", d.programs_compiled}};
}

inline DistillationResult distillation_from_json(const nlohmann::json& j) {
  DistillationResult d;
  d.base_prompt = j.at("base_prompt").get<std::string>();
  d.island_instructions = j.at("island_instructions").get<std::vector<std::string>>();
  d.chosen_batch = j.at("chosen_batch").get<std::string>();
  d.validity_table = j.at("validity_table").get<std::vector<std::size_t>>();
  d.hybrid_valid_low = j.at("hybrid_valid_low").get<std::vector<std::size_t>>();
  d.hybrid_valid_high = j.at("hybrid_valid_high").get<std::vector<std::size_t>>();
  d.warnings = j.at("warnings").get<std::vector<std::string>>();
  d.programs_compiled = j.at("programs_compiled").get<std::uint64_t>();
  return d;
}

// Reads every C/C++ source file directly inside `dir`, sorted by filename so
// corpus indices are stable across runs and platforms.
inline std::vector<std::string> load_warm_start_corpus(const std::string& dir,
                                                       std::vector<std::string>* warnings = nullptr) {
  namespace fs = std::filesystem;
  std::vector<std::string> out;
  auto note = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  std::error_code ec;
  if (dir.empty()) return out;
  if (!fs::is_directory(dir, ec)) {
    note("warm-start corpus directory missing: " + dir);
    return out;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    if (ext == ".c" || ext == ".cc" || ext == ".cpp" || ext == ".cxx") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream f(p, std::ios::binary);
    if (!f) {
      note("unreadable corpus file: " + p.string());
      continue;
    }
    std::ostringstream text;
    text << f.rdbuf();
    out.push_back(std::move(text).str());
  }
  if (out.empty()) note("warm-start corpus is empty: " + dir);
  return out;
}

class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir, std::size_t queue_capacity = 1024)
      : dir_(std::move(dir)), capacity_(queue_capacity) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir_ / "programs", ec);
    if (ec) error_ = true;
    evaluations_.open(dir_ / "evaluations.jsonl", std::ios::app);
    timeseries_.open(dir_ / "timeseries.jsonl", std::ios::app);
    log_.open(dir_ / "campaign.log", std::ios::app);
    if (!evaluations_ || !timeseries_ || !log_) error_ = true;
    writer_ = std::thread([this] { writer_main(); });
  }

  ~OutputWriter() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      done_ = true;
    }
    ready_.notify_all();
    writer_.join();
  }

  OutputWriter(const OutputWriter&) = delete;
  OutputWriter& operator=(const OutputWriter&) = delete;

  const std::filesystem::path& directory() const { return dir_; }

  void write_config(const CampaignConfig& cfg) {
    write_document("config.json", config_to_json(cfg).dump(2) + "\n");
  }

  void write_distillation(const DistillationResult& d) {
    write_document("distillation.json", to_json(d).dump(2) + "\n");
  }

  void write_summary(const nlohmann::json& summary) {
    write_document("summary.json", summary.dump(2) + "\n");
  }

  // Stores the source once under its content address; returns the address.
  std::string store_program(const std::string& source) {
    std::string addr = content_address(source);
    std::filesystem::path path = dir_ / "programs" / (addr + ".c");
    std::lock_guard<std::mutex> lock(store_mu_);
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) return addr;
    std::ofstream f(path, std::ios::binary);
    f.write(source.data(), std::streamsize(source.size()));
    if (!f) error_ = true;
    return addr;
  }

  void append_evaluation(const EvaluationRecord& r) { push(Stream::evaluations, to_json(r).dump()); }
  void append_timeseries(const TimeSeriesPoint& p) { push(Stream::timeseries, to_json(p).dump()); }
  void append_log(std::string line) { push(Stream::log, std::move(line)); }

  // Blocks until every queued record reached its stream.
  void flush() {
    std::unique_lock<std::mutex> lock(mu_);
    drained_.wait(lock, [this] { return queue_.empty() && !writing_; });
    evaluations_.flush();
    timeseries_.flush();
    log_.flush();
  }

  bool had_errors() const {
    std::lock_guard<std::mutex> lock(mu_);
    return error_;
  }

 private:
  enum class Stream { evaluations, timeseries, log };

  void write_document(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    f << content;
    if (!f) {
      std::lock_guard<std::mutex> lock(mu_);
      error_ = true;
    }
  }

  void push(Stream s, std::string line) {
    std::unique_lock<std::mutex> lock(mu_);
    space_.wait(lock, [this] { return queue_.size() < capacity_ || done_; });
    if (done_) return;  // shutting down; drop rather than deadlock
    queue_.emplace_back(s, std::move(line));
    ready_.notify_one();
  }

  void writer_main() {
    std::unique_lock<std::mutex> lock(mu_);
    for (;;) {
      ready_.wait(lock, [this] { return !queue_.empty() || done_; });
      if (queue_.empty() && done_) break;
      while (!queue_.empty()) {
        auto [stream, line] = std::move(queue_.front());
        queue_.pop_front();
        writing_ = true;
        lock.unlock();
        std::ofstream* out = stream == Stream::evaluations ? &evaluations_
                             : stream == Stream::timeseries ? &timeseries_
                                                            : &log_;
        *out << line << '\n';
        bool ok = bool(*out);
        lock.lock();
        writing_ = false;
        if (!ok) error_ = true;
        space_.notify_all();
      }
      drained_.notify_all();
    }
  }

  std::filesystem::path dir_;
  std::size_t capacity_;
  std::ofstream evaluations_, timeseries_, log_;
  mutable std::mutex mu_;
  std::mutex store_mu_;
  std::condition_variable ready_, space_, drained_;
  std::deque<std::pair<Stream, std::string>> queue_;
  std::thread writer_;
  bool done_ = false;
  bool writing_ = false;
  bool error_ = false;
};

}  // namespace funfuzz
