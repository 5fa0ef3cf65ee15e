#pragma once

// Real-process system-under-test adapter. Each candidate is written into a
// fresh scratch directory, the configured compile command runs there under
// the timeout (the whole process group is killed when it fires), merged
// stdout+stderr becomes the diagnostics, and an optional coverage command
// produces a report file that is parsed into the result's CoverageSet.
//
// Failure policy: a missing or unparseable coverage report degrades to empty
// coverage plus a warning and never discards the compile result; scratch I/O
// failures throw SutError, which callers treat as an iteration-level error.
//
// Command templates are /bin/sh fragments with literal placeholder
// substitution ({input}, {output}, {flags}, {report}, {scratch}); substituted
// paths are derived from scratch_root, so keep scratch_root free of shell
// metacharacters. Environment prefixes (e.g. GCOV_PREFIX={scratch}/cov)
// belong in the templates; the adapter only guarantees one scratch directory
// per invocation.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <string.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "funfuzz/config.hpp"
#include "funfuzz/coverage_report.hpp"
#include "funfuzz/sut.hpp"

namespace funfuzz {

struct SutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProcessRun {
  bool spawned = false;
  int exit_code = 0;
  int term_signal = 0;  // 0 = exited normally
  bool timed_out = false;
  double wall_s = 0.0;
  std::string output;  // merged stdout+stderr
  std::string error;   // spawn-level failure description
};

inline std::string substitute_placeholders(
    std::string_view tmpl,
    const std::vector<std::pair<std::string_view, std::string_view>>& subs) {
  std::string out(tmpl);
  for (const auto& [key, value] : subs) {
    std::string pat = "{" + std::string(key) + "}";
    std::size_t at = 0;
    while ((at = out.find(pat, at)) != std::string::npos) {
      out.replace(at, pat.size(), value);
      at += value.size();
    }
  }
  return out;
}

namespace procdetail {

constexpr std::size_t kOutputCap = 4u << 20;  // diagnostics kept per run

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace procdetail

// Runs `command` via /bin/sh -c in `workdir`, capturing merged stdout+stderr.
// On timeout the child's whole process group gets SIGKILL; the pipe is then
// drained to EOF so grandchildren cannot wedge the caller.
inline ProcessRun run_command(const std::string& command, double timeout_s,
                              const std::string& workdir = {}) {
  ProcessRun r;
  int fds[2];
  if (pipe(fds) != 0) {
    r.error = std::string("pipe: ") + strerror(errno);
    return r;
  }
  auto t0 = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) {
    r.error = std::string("fork: ") + strerror(errno);
    close(fds[0]);
    close(fds[1]);
    return r;
  }
  if (pid == 0) {
    setpgid(0, 0);
    if (!workdir.empty() && chdir(workdir.c_str()) != 0) _exit(127);
    dup2(fds[1], 1);
    dup2(fds[1], 2);
    close(fds[0]);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);  // either side may win this race; both set the same group
  close(fds[1]);

  bool truncated = false;
  char buf[16384];
  for (;;) {
    double remaining = timeout_s - procdetail::seconds_since(t0);
    if (!r.timed_out && remaining <= 0) {
      kill(-pid, SIGKILL);
      r.timed_out = true;
    }
    int wait_ms = r.timed_out ? 1000
                              : static_cast<int>(std::min(remaining * 1000.0, 60000.0)) + 1;
    struct pollfd p {fds[0], POLLIN, 0};
    int pr = poll(&p, 1, wait_ms);
    if (pr < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (pr == 0) continue;  // deadline check at loop head
    ssize_t n = read(fds[0], buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 0) break;  // all writers gone
    if (r.output.size() < procdetail::kOutputCap)
      r.output.append(buf, static_cast<std::size_t>(
          std::min<std::size_t>(static_cast<std::size_t>(n),
                                procdetail::kOutputCap - r.output.size())));
    else
      truncated = true;
  }
  close(fds[0]);
  if (truncated) r.output += "\n...[output truncated]\n";

  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) {
      r.error = std::string("waitpid: ") + strerror(errno);
      return r;
    }
  }
  r.spawned = true;
  r.wall_s = procdetail::seconds_since(t0);
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status)) r.term_signal = WTERMSIG(status);
  return r;
}

class ProcessSut : public SutHarness {
 public:
  explicit ProcessSut(SutConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.process.compile.empty())
      throw SutError("process sut: compile command template is empty");
    if (cfg_.process.flag_sets.empty()) cfg_.process.flag_sets.push_back("");
    root_ = cfg_.process.scratch_root.empty()
                ? std::filesystem::temp_directory_path() / "funfuzz-scratch"
                : std::filesystem::path(cfg_.process.scratch_root);
  }

  SutResult compile(const std::string& unit) override { return compile_with_coverage(unit); }

  // One candidate, all configured flag sets: coverage is the union over the
  // sets, the classification is the most severe single outcome, exit status
  // and diagnostics come from the run that decided it, and compile time is
  // the candidate's total cost.
  SutResult compile_with_coverage(const std::string& unit) {
    Scratch scratch = make_scratch();
    std::filesystem::path input = scratch.dir / ("input" + cfg_.process.source_extension);
    write_file(input, unit);
    run_reset(scratch.dir);

    SutResult best;
    CoverageSet cov_union;
    double total_time = 0.0;
    bool first = true;
    std::vector<Classification> per_set;

    for (std::size_t i = 0; i < cfg_.process.flag_sets.size(); ++i) {
      SutResult r = run_flag_set(cfg_.process.flag_sets[i], scratch.dir, input, i, cov_union);
      total_time += r.compile_time_s;
      per_set.push_back(r.classification);
      if (first || severity(r.classification) > severity(best.classification)) best = std::move(r);
      first = false;
    }
    for (std::size_t i = 1; i < per_set.size(); ++i)
      if (per_set[i] != per_set[0]) {
        warn("flag sets disagree on \"" + preview(unit) + "\": " + to_string(per_set[0]) +
             " under \"" + cfg_.process.flag_sets[0] + "\" vs " + to_string(per_set[i]) +
             " under \"" + cfg_.process.flag_sets[i] + "\"");
        break;
      }
    best.compile_time_s = total_time;
    best.coverage = std::move(cov_union);
    return best;
  }

  // True iff a minimal unit including the header compiles cleanly under the
  // first flag set. Results are cached; headers don't appear and vanish.
  bool probe_header(const std::string& name) override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = probe_cache_.find(name);
      if (it != probe_cache_.end()) return it->second;
    }
    std::string unit = "#include <" + name + ">\nint main(void) { return 0; }\n";
    Scratch scratch = make_scratch();
    std::filesystem::path input = scratch.dir / ("input" + cfg_.process.source_extension);
    write_file(input, unit);
    ProcessRun pr = run_command(compile_command(input, scratch.dir, cfg_.process.flag_sets[0]),
                                cfg_.timeout_seconds, scratch.dir.string());
    if (!pr.spawned) throw SutError("header probe: " + pr.error);
    bool ok = classify_outcome(pr.exit_code, pr.term_signal, pr.output, pr.timed_out,
                               cfg_.failure_markers) == Classification::success;
    std::lock_guard<std::mutex> lock(mu_);
    probe_cache_.emplace(name, ok);
    return ok;
  }

  std::vector<std::string> drain_warnings() {
    std::lock_guard<std::mutex> lock(mu_);
    return std::exchange(warnings_, {});
  }

  // Unit-id namespace for every coverage set this adapter produces.
  FileInterner& files() { return files_; }

 private:
  struct Scratch {
    std::filesystem::path dir;
    ~Scratch() {
      if (!dir.empty()) {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
      }
    }
    Scratch() = default;
    Scratch(Scratch&& o) noexcept : dir(std::exchange(o.dir, {})) {}
    Scratch& operator=(Scratch&&) = delete;
    Scratch(const Scratch&) = delete;
  };

  static int severity(Classification c) {
    switch (c) {
      case Classification::potential_bug: return 3;
      case Classification::hang: return 2;
      case Classification::benign_error: return 1;
      case Classification::success: return 0;
    }
    return 0;
  }

  static std::string preview(const std::string& unit) {
    std::string head = unit.substr(0, 32);
    for (char& c : head)
      if (c == '\n' || c == '"') c = ' ';
    return head;
  }

  Scratch make_scratch() {
    Scratch s;
    std::uint64_t n = counter_.fetch_add(1, std::memory_order_relaxed);
    std::filesystem::path dir =
        root_ / ("job-" + std::to_string(static_cast<long>(getpid())) + "-" + std::to_string(n));
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
      throw SutError("cannot create scratch directory " + dir.string() +
                     (ec ? ": " + ec.message() : std::string()));
    s.dir = dir;
    return s;
  }

  void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw SutError("cannot write " + path.string());
  }

  void warn(std::string msg) {
    std::lock_guard<std::mutex> lock(mu_);
    warnings_.push_back(std::move(msg));
  }

  std::string compile_command(const std::filesystem::path& input,
                              const std::filesystem::path& scratch, const std::string& flags) {
    std::string in = input.string(), out = (scratch / "out.o").string(), sc = scratch.string();
    return substitute_placeholders(
        cfg_.process.compile,
        {{"input", in}, {"output", out}, {"flags", flags}, {"scratch", sc}});
  }

  void run_reset(const std::filesystem::path& scratch) {
    if (cfg_.process.reset.empty()) return;
    std::string sc = scratch.string();
    std::string cmd = substitute_placeholders(cfg_.process.reset, {{"scratch", sc}});
    ProcessRun pr = run_command(cmd, cfg_.timeout_seconds, sc);
    if (!pr.spawned) throw SutError("reset command: " + pr.error);
    if (pr.exit_code != 0 || pr.term_signal != 0 || pr.timed_out)
      warn("reset command failed: " + cmd);
  }

  SutResult run_flag_set(const std::string& flags, const std::filesystem::path& scratch,
                         const std::filesystem::path& input, std::size_t set_index,
                         CoverageSet& cov_union) {
    ProcessRun pr =
        run_command(compile_command(input, scratch, flags), cfg_.timeout_seconds, scratch.string());
    if (!pr.spawned) throw SutError("compile command: " + pr.error);

    SutResult r;
    r.exit_code = pr.exit_code;
    r.term_signal = pr.term_signal;
    r.timed_out = pr.timed_out;
    r.diagnostics = pr.output;
    r.compile_time_s = pr.wall_s;
    r.classification =
        classify_outcome(pr.exit_code, pr.term_signal, pr.output, pr.timed_out, cfg_.failure_markers);

    // A hung compiler leaves no trustworthy counters behind; skip collection.
    if (!pr.timed_out && !cfg_.process.coverage.empty())
      collect_coverage(input, scratch, set_index, cov_union);
    return r;
  }

  void collect_coverage(const std::filesystem::path& input, const std::filesystem::path& scratch,
                        std::size_t set_index, CoverageSet& cov_union) {
    std::filesystem::path report = scratch / ("coverage-" + std::to_string(set_index) + ".txt");
    std::string in = input.string(), rep = report.string(), sc = scratch.string();
    std::string cmd = substitute_placeholders(cfg_.process.coverage,
                                              {{"input", in}, {"report", rep}, {"scratch", sc}});
    ProcessRun pr = run_command(cmd, cfg_.timeout_seconds, sc);
    if (!pr.spawned) {
      warn("coverage command could not run: " + pr.error);
      return;
    }
    std::ifstream f(report, std::ios::binary);
    if (!f) {
      warn("coverage report missing at " + rep + " (coverage command exit " +
           std::to_string(pr.exit_code) + ")");
      return;
    }
    std::ostringstream text;
    text << f.rdbuf();
    CoverageParse parsed;
    {
      std::lock_guard<std::mutex> lock(mu_);
      parsed = parse_coverage_report(text.str(), files_);
    }
    if (!parsed.recognized()) {
      warn("coverage report at " + rep + " contained no recognizable records");
      return;
    }
    // A report that names files but records no lines usually means the tool
    // ran from the wrong place or against the wrong data; say so.
    if (parsed.line_records == 0) {
      warn("coverage report at " + rep + " named " + std::to_string(parsed.files_seen) +
           " file(s) but contained no line records");
      return;
    }
    cov_union.union_in_place(parsed.covered);
  }

  SutConfig cfg_;
  std::filesystem::path root_;
  std::atomic<std::uint64_t> counter_{0};
  std::mutex mu_;  // guards interner, warnings, probe cache
  FileInterner files_;
  std::vector<std::string> warnings_;
  std::unordered_map<std::string, bool> probe_cache_;
};

}  // namespace funfuzz
