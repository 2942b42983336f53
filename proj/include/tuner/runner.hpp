// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// Trial execution. An external trial is a child process that receives its
// configuration through <workdir>/<trial_id>/hparams.json and reports
// metrics on stdout, one per line:
//
//   tuner-metric name=<metric> iteration=<r> value=<float>
//
// Exit status 0 means success. The last report of the objective metric is
// the trial's final value. Builtin trials evaluate a synthetic benchmark
// in-process.

#ifndef TUNER_RUNNER_HPP
#define TUNER_RUNNER_HPP

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <regex>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tuner/benchmarks.hpp"
#include "tuner/config_json.hpp"
#include "tuner/error.hpp"
#include "tuner/space.hpp"

extern char** environ;

namespace tuner {

struct BuiltinSpec {
  std::string benchmark = "branin";
  double noise_std = 0.0;
  /// Simulated iterations; 0 picks the benchmark default (100 for
  /// curve-sim, 1 otherwise).
  std::int64_t iterations = 0;
  std::chrono::milliseconds delay{0};
};

struct ExternalSpec {
  /// Program and arguments. "{trial_id}", "{hparams_file}" and "{workdir}"
  /// are substituted in every argument.
  std::vector<std::string> command;
  std::filesystem::path workdir = "work";
  double timeout_seconds = 3600.0;
};

enum class ExecutorKind { Builtin, External };

struct ExecutorSpec {
  ExecutorKind kind = ExecutorKind::Builtin;
  BuiltinSpec builtin;
  ExternalSpec external;

  void validate() const {
    if (kind == ExecutorKind::Builtin) {
      (void)bench::make_benchmark(builtin.benchmark);
      if (!(builtin.noise_std >= 0.0)) throw Error(Errc::InvalidConfig, "noise_std must be >= 0");
      if (builtin.iterations < 0) throw Error(Errc::InvalidConfig, "iterations must be >= 0");
      if (builtin.delay.count() < 0) throw Error(Errc::InvalidConfig, "delay_ms must be >= 0");
    } else {
      if (external.command.empty()) throw Error(Errc::InvalidConfig, "external executor needs a command");
      if (!(external.timeout_seconds > 0.0)) throw Error(Errc::InvalidConfig, "timeout must be > 0");
    }
  }
};

/// Receives each objective report; returning false asks the trial to stop.
using MetricSink = std::function<bool(std::int64_t iteration, double value)>;

enum class OutcomeKind { Completed, Failed, Stopped };

struct TrialOutcome {
  OutcomeKind kind = OutcomeKind::Failed;
  std::optional<double> final_value;
  std::optional<Errc> error;
  std::string message;

  static TrialOutcome completed(double v) { return {OutcomeKind::Completed, v, std::nullopt, {}}; }
  static TrialOutcome failed(Errc code, std::string msg) { return {OutcomeKind::Failed, std::nullopt, code, std::move(msg)}; }
  static TrialOutcome stopped(std::optional<double> last) { return {OutcomeKind::Stopped, last, std::nullopt, {}}; }
};

struct TrialTask {
  std::string trial_id;
  Configuration config;
  std::uint64_t seed = 0;
  int attempt = 1;
  std::string objective = "objective";
  std::stop_token stop;
};

struct MetricLine {
  std::string name;
  std::int64_t iteration = 0;
  double value = 0.0;
};

/// nullopt for ordinary output; throws ProtocolViolation for a line that
/// starts with the protocol tag but does not match the grammar.
inline std::optional<MetricLine> parse_metric_line(std::string_view line) {
  static constexpr std::string_view kTag = "tuner-metric";
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  if (line.substr(0, kTag.size()) != kTag) return std::nullopt;
  static const std::regex grammar(
      R"(^tuner-metric name=([A-Za-z_][A-Za-z0-9_.:/-]*) iteration=([0-9]{1,18}) value=(\S+)\s*$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(line.begin(), line.end(), m, grammar))
    throw Error(Errc::ProtocolViolation, "malformed metric line: " + std::string(line));
  MetricLine out;
  out.name = m[1].str();
  out.iteration = std::stoll(m[2].str());
  const std::string value = m[3].str();
  char* end = nullptr;
  out.value = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size() || !std::isfinite(out.value))
    throw Error(Errc::ProtocolViolation, "metric value is not a finite number: " + value);
  return out;
}

namespace detail {

inline bool sleep_unless_stopped(std::chrono::milliseconds total, const std::stop_token& stop) {
  auto deadline = std::chrono::steady_clock::now() + total;
  while (std::chrono::steady_clock::now() < deadline) {
    if (stop.stop_requested()) return false;
    auto left = deadline - std::chrono::steady_clock::now();
    std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(left, std::chrono::milliseconds(5)));
  }
  return !stop.stop_requested();
}

inline std::string substitute(std::string arg, const std::string& key, const std::string& value) {
  for (std::size_t pos = arg.find(key); pos != std::string::npos; pos = arg.find(key, pos + value.size()))
    arg.replace(pos, key.size(), value);
  return arg;
}

inline void kill_group(pid_t pid) {
  ::kill(-pid, SIGKILL);
  ::kill(pid, SIGKILL);
}

inline int reap(pid_t pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  return status;
}

}  // namespace detail

/// Pure given (config, seed): the noise stream is seeded from `seed`.
inline TrialOutcome evaluate_builtin(const BuiltinSpec& spec, const Configuration& config, std::uint64_t seed,
                                     const MetricSink& sink, std::stop_token stop = {}) {
  bench::Benchmark b = bench::make_benchmark(spec.benchmark);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto perturb = [&](double v) { return spec.noise_std > 0.0 ? v + spec.noise_std * noise(rng) : v; };

  try {
    if (b.curve) {
      const bench::CurveShape shape = b.curve(config);
      const std::int64_t iters = spec.iterations > 0 ? spec.iterations : 100;
      double last = 0.0;
      for (std::int64_t r = 1; r <= iters; ++r) {
        if (!detail::sleep_unless_stopped(spec.delay, stop)) return TrialOutcome::stopped(r > 1 ? std::optional(last) : std::nullopt);
        last = perturb(shape.at(r));
        if (!sink(r, last)) return TrialOutcome::stopped(last);
      }
      return TrialOutcome::completed(last);
    }
    const std::int64_t iters = spec.iterations > 0 ? spec.iterations : 1;
    if (!detail::sleep_unless_stopped(spec.delay * iters, stop)) return TrialOutcome::stopped(std::nullopt);
    const double value = perturb(b.objective(config));
    if (!sink(iters, value)) return TrialOutcome::stopped(value);
    return TrialOutcome::completed(value);
  } catch (const std::out_of_range&) {
    return TrialOutcome::failed(Errc::ValueOutOfDomain, "configuration lacks a dimension of " + spec.benchmark);
  } catch (const Error& e) {
    return TrialOutcome::failed(e.code(), e.what());
  }
}

/// Runs the external command for one trial and streams its objective
/// reports into `sink`. Never throws for child misbehaviour; every failure
/// comes back as a Failed outcome carrying the error code.
inline TrialOutcome evaluate_external(const ExternalSpec& spec, const std::string& trial_id,
                                      const Configuration& config, const std::string& objective,
                                      const MetricSink& sink, std::stop_token stop = {}) {
  namespace fs = std::filesystem;
  if (spec.command.empty()) return TrialOutcome::failed(Errc::SpawnFailure, "empty command");

  const fs::path dir = fs::absolute(spec.workdir / trial_id);
  const fs::path hparams = dir / "hparams.json";
  {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(hparams, std::ios::trunc);
    out << config_to_json(config).dump() << '\n';
    if (ec || !out) return TrialOutcome::failed(Errc::SpawnFailure, "cannot write " + hparams.string());
  }

  // Everything the child needs is prepared before fork.
  std::vector<std::string> args;
  for (const auto& a : spec.command)
    args.push_back(detail::substitute(
        detail::substitute(detail::substitute(a, "{trial_id}", trial_id), "{hparams_file}", hparams.string()),
        "{workdir}", dir.string()));
  std::vector<std::string> env_strings;
  for (char** e = environ; e && *e; ++e) {
    std::string_view kv(*e);
    if (kv.starts_with("TUNER_TRIAL_ID=") || kv.starts_with("TUNER_HPARAMS_FILE=")) continue;
    env_strings.emplace_back(kv);
  }
  env_strings.push_back("TUNER_TRIAL_ID=" + trial_id);
  env_strings.push_back("TUNER_HPARAMS_FILE=" + hparams.string());
  std::vector<char*> argv, envp;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  for (auto& e : env_strings) envp.push_back(e.data());
  envp.push_back(nullptr);
  const std::string dir_str = dir.string();

  int out_pipe[2], err_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) return TrialOutcome::failed(Errc::SpawnFailure, "pipe failed");
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    return TrialOutcome::failed(Errc::SpawnFailure, "pipe failed");
  }

  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
    return TrialOutcome::failed(Errc::SpawnFailure, "fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(dir_str.c_str()) == 0 && ::dup2(out_pipe[1], STDOUT_FILENO) >= 0)
      ::execvpe(argv[0], argv.data(), envp.data());
    int err = errno;
    [[maybe_unused]] auto n = ::write(err_pipe[1], &err, sizeof err);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);

  int exec_errno = 0;
  ssize_t got = ::read(err_pipe[0], &exec_errno, sizeof exec_errno);
  ::close(err_pipe[0]);
  if (got == static_cast<ssize_t>(sizeof exec_errno)) {
    ::close(out_pipe[0]);
    detail::reap(pid);
    return TrialOutcome::failed(Errc::SpawnFailure,
                                "cannot execute '" + args.front() + "': " + std::strerror(exec_errno));
  }

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(spec.timeout_seconds));
  std::optional<double> last;
  std::int64_t last_iteration = 0;
  std::string buffer;
  auto abort_child = [&](TrialOutcome outcome) {
    detail::kill_group(pid);
    ::close(out_pipe[0]);
    detail::reap(pid);
    return outcome;
  };

  bool eof = false;
  while (!eof) {
    if (stop.stop_requested()) return abort_child(TrialOutcome::stopped(last));
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline)
      return abort_child(TrialOutcome::failed(Errc::Timeout, "trial exceeded " + std::to_string(spec.timeout_seconds) + " s"));
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd pfd{out_pipe[0], POLLIN, 0};
    int ready = ::poll(&pfd, 1, static_cast<int>(std::clamp<long long>(left, 1, 50)));
    if (ready < 0 && errno != EINTR) return abort_child(TrialOutcome::failed(Errc::SpawnFailure, "poll failed"));
    if (ready <= 0) continue;

    char chunk[4096];
    ssize_t n = ::read(out_pipe[0], chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return abort_child(TrialOutcome::failed(Errc::SpawnFailure, "read failed"));
    }
    if (n == 0) {
      eof = true;
      if (!buffer.empty()) buffer.push_back('\n');
    } else {
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
    for (std::size_t nl; (nl = buffer.find('\n')) != std::string::npos;) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      std::optional<MetricLine> metric;
      try {
        metric = parse_metric_line(line);
      } catch (const Error& e) {
        return abort_child(TrialOutcome::failed(Errc::ProtocolViolation, e.what()));
      }
      if (!metric || metric->name != objective) continue;
      if (metric->iteration <= last_iteration)
        return abort_child(TrialOutcome::failed(Errc::ProtocolViolation, "iterations must increase"));
      last_iteration = metric->iteration;
      last = metric->value;
      if (!sink(metric->iteration, metric->value)) return abort_child(TrialOutcome::stopped(last));
    }
  }
  ::close(out_pipe[0]);

  // stdout is closed; wait for exit without outliving the deadline.
  int status = 0;
  for (;;) {
    pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) break;
    if (stop.stop_requested()) {
      detail::kill_group(pid);
      detail::reap(pid);
      return TrialOutcome::stopped(last);
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      detail::kill_group(pid);
      detail::reap(pid);
      return TrialOutcome::failed(Errc::Timeout, "trial exceeded timeout");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    std::string why = WIFEXITED(status) ? "exit code " + std::to_string(WEXITSTATUS(status))
                                        : "killed by signal " + std::to_string(WTERMSIG(status));
    return TrialOutcome::failed(Errc::TrialFailed, "trial process failed: " + why);
  }
  if (!last) return TrialOutcome::failed(Errc::ProtocolViolation, "no report of metric '" + objective + "'");
  return TrialOutcome::completed(*last);
}

class Executor {
 public:
  virtual ~Executor() = default;
  /// Runs one trial attempt to an outcome. Called concurrently from several
  /// threads, one per running trial.
  virtual TrialOutcome run(const TrialTask& task, const MetricSink& sink) = 0;
};

class BuiltinExecutor : public Executor {
 public:
  explicit BuiltinExecutor(BuiltinSpec spec) : spec_(std::move(spec)) {}
  TrialOutcome run(const TrialTask& task, const MetricSink& sink) override {
    return evaluate_builtin(spec_, task.config, task.seed, sink, task.stop);
  }
  const BuiltinSpec& spec() const noexcept { return spec_; }

 private:
  BuiltinSpec spec_;
};

class ExternalExecutor : public Executor {
 public:
  explicit ExternalExecutor(ExternalSpec spec) : spec_(std::move(spec)) {}
  TrialOutcome run(const TrialTask& task, const MetricSink& sink) override {
    return evaluate_external(spec_, task.trial_id, task.config, task.objective, sink, task.stop);
  }

 private:
  ExternalSpec spec_;
};

inline std::unique_ptr<Executor> make_executor(const ExecutorSpec& spec) {
  spec.validate();
  if (spec.kind == ExecutorKind::Builtin) return std::make_unique<BuiltinExecutor>(spec.builtin);
  return std::make_unique<ExternalExecutor>(spec.external);
}

}  // namespace tuner

#endif  // TUNER_RUNNER_HPP
