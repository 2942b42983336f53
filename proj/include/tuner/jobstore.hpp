// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// File-backed job persistence.
//
//   <root>/<job_id>/job.json            config + status, replaced atomically
//   <root>/<job_id>/events.log          append-only, one JSON record per line
//   <root>/<job_id>/trials/<id>.json    per-trial snapshot
//
// events.log is the source of truth for trial state; trial files are
// convenience snapshots. One coordinator writes a job at a time; readers may
// run concurrently and see the last flushed state.

#ifndef TUNER_JOBSTORE_HPP
#define TUNER_JOBSTORE_HPP

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "tuner/error.hpp"
#include "tuner/job.hpp"

namespace tuner {

struct LoadedJob {
  TuningJobConfig config;
  /// Status as recorded in job.json; may say "stopping" while the replayed
  /// state still says "running".
  JobStatus stored_status = JobStatus::Created;
  TuningJobState state;
  /// Trials found running at load time are turned into failed attempts; these
  /// are the events that do so, already applied to `state`.
  std::vector<JobEvent> recovery_events;
  std::vector<std::string> warnings;
};

struct JobListing {
  std::string job_id;
  JobStatus status;
};

struct JobDescription {
  std::string job_id;
  JobStatus status = JobStatus::Created;
  Strategy strategy = Strategy::Bayesian;
  std::size_t max_trials = 0;
  std::size_t completed = 0;
  std::size_t early_stopped = 0;
  std::size_t failed = 0;
  std::size_t in_flight = 0;
  std::optional<Incumbent> incumbent;
};

namespace detail {

inline void write_all(int fd, const std::string& data, const std::filesystem::path& path) {
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::IoError, "write to " + path.string() + " failed: " + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

/// Write-temp-then-rename so readers never observe a partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content, bool sync = true) {
  static std::atomic<unsigned> counter{0};
  const auto tmp = path.parent_path() /
                   (path.filename().string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++));
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(Errc::IoError, "cannot create " + tmp.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, content, tmp);
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  if (sync) ::fsync(fd);
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw Error(Errc::IoError, "cannot rename onto " + path.string() + ": " + std::strerror(errno));
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

class JobStore {
 public:
  explicit JobStore(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path job_dir(const std::string& job_id) const { return root_ / job_id; }

  bool exists(const std::string& job_id) const {
    return std::filesystem::exists(job_dir(job_id) / "job.json");
  }

  /// Validates the config before touching the filesystem.
  std::string create_job(const TuningJobConfig& config) {
    config.validate();
    namespace fs = std::filesystem;
    const fs::path dir = job_dir(config.job_id);
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(Errc::IoError, "cannot create store root " + root_.string() + ": " + ec.message());
    if (!fs::create_directory(dir, ec)) {
      if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
      throw Error(Errc::AlreadyExists, "job '" + config.job_id + "' already exists");
    }
    fs::create_directories(dir / "trials", ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + (dir / "trials").string() + ": " + ec.message());
    detail::atomic_write(dir / "events.log", "");
    detail::atomic_write(dir / "job.json", job_config_to_json(config, JobStatus::Created).dump(2) + "\n");
    return config.job_id;
  }

  /// Appends one line and hands it to the kernel before returning.
  void append_event(const std::string& job_id, const JobEvent& event) {
    const auto path = job_dir(job_id) / "events.log";
    if (!exists(job_id)) throw Error(Errc::NotFound, "job '" + job_id + "' does not exist");
    int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(Errc::IoError, "cannot open " + path.string() + ": " + std::strerror(errno));
    try {
      detail::write_all(fd, event_to_json(event).dump() + "\n", path);
    } catch (...) {
      ::close(fd);
      throw;
    }
    ::close(fd);
    ++appended_;
    if (append_hook_) append_hook_(appended_);
  }

  void write_trial(const std::string& job_id, const TrialRecord& trial) {
    detail::atomic_write(job_dir(job_id) / "trials" / (trial.id + ".json"), trial_to_json(trial).dump(2) + "\n",
                         /*sync=*/false);
  }

  TuningJobConfig read_config(const std::string& job_id) const { return read_job_json(job_id).first; }
  JobStatus read_status(const std::string& job_id) const { return read_job_json(job_id).second; }

  void write_status(const std::string& job_id, JobStatus status) {
    TuningJobConfig config = read_config(job_id);
    detail::atomic_write(job_dir(job_id) / "job.json", job_config_to_json(config, status).dump(2) + "\n");
  }

  /// Rebuilds the job by replaying events.log. A torn final line is dropped
  /// with a warning; any other unreadable line is corruption.
  LoadedJob load_job(const std::string& job_id) const {
    auto [config, status] = read_job_json(job_id);
    LoadedJob out{config, status, {}, {}, {}};
    const auto path = job_dir(job_id) / "events.log";
    std::string text = std::filesystem::exists(path) ? detail::read_file(path) : std::string();

    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t nl = text.find('\n', start);
      if (nl == std::string::npos) {
        lines.push_back(text.substr(start));
        break;
      }
      lines.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
    const bool unterminated = !text.empty() && text.back() != '\n';

    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const bool last = i + 1 == lines.size();
      JobEvent ev;
      try {
        ev = event_from_json(nlohmann::json::parse(lines[i]), out.config.space);
      } catch (const std::exception& e) {
        if (last) {
          std::string msg = "job '" + job_id + "': discarding torn final event line" +
                            std::string(unterminated ? "" : " (terminated but unparsable)");
          spdlog::warn(msg);
          out.warnings.push_back(msg);
          break;
        }
        throw Error(Errc::CorruptStore, "job '" + job_id + "': events.log line " + std::to_string(i + 1) +
                                            " unreadable: " + e.what());
      }
      try {
        out.state.apply(ev, out.config.space);
      } catch (const std::exception& e) {
        throw Error(Errc::CorruptStore, "job '" + job_id + "': events.log line " + std::to_string(i + 1) +
                                            " inconsistent: " + e.what());
      }
    }

    for (const auto& trial : out.state.trials) {
      if (trial.status != TrialStatus::Running) continue;
      JobEvent ev;
      ev.type = EventType::TrialFailed;
      ev.timestamp = utc_timestamp();
      ev.trial_id = trial.id;
      ev.will_retry = trial.attempts < config.retry_limit + 1;
      ev.reason = "interrupted: coordinator stopped while the trial was running";
      out.recovery_events.push_back(ev);
    }
    for (const auto& ev : out.recovery_events) out.state.apply(ev, out.config.space);
    return out;
  }

  std::vector<JobListing> list_jobs() const {
    std::vector<JobListing> out;
    std::error_code ec;
    if (!std::filesystem::is_directory(root_, ec)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(root_, ec)) {
      if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "job.json")) continue;
      const std::string id = entry.path().filename().string();
      try {
        out.push_back({id, read_status(id)});
      } catch (const Error& e) {
        spdlog::warn("skipping unreadable job '{}': {}", id, e.what());
      }
    }
    std::sort(out.begin(), out.end(), [](const JobListing& a, const JobListing& b) { return a.job_id < b.job_id; });
    return out;
  }

  JobDescription describe(const std::string& job_id) const {
    LoadedJob job = load_job(job_id);
    JobDescription d;
    d.job_id = job_id;
    d.status = job.stored_status;
    d.strategy = job.config.strategy;
    d.max_trials = job.config.max_trials;
    d.completed = job.state.count(TrialStatus::Completed);
    d.early_stopped = job.state.count(TrialStatus::EarlyStopped);
    d.failed = job.state.count(TrialStatus::Failed);
    d.in_flight = job.state.count(TrialStatus::Running) + job.state.count(TrialStatus::Pending);
    d.incumbent = job.state.incumbent(job.config.objective);
    return d;
  }

  /// Test seam: called after every successful append with the running count
  /// of events appended through this store object.
  void set_append_hook(std::function<void(std::size_t)> hook) { append_hook_ = std::move(hook); }

 private:
  std::pair<TuningJobConfig, JobStatus> read_job_json(const std::string& job_id) const {
    const auto path = job_dir(job_id) / "job.json";
    if (!std::filesystem::exists(path)) throw Error(Errc::NotFound, "job '" + job_id + "' does not exist");
    try {
      auto j = nlohmann::json::parse(detail::read_file(path));
      JobStatus status = job_status_from_string(j.value("status", "created"));
      return {job_config_from_json(j), status};
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::CorruptStore, "job '" + job_id + "': job.json unreadable: " + e.what());
    } catch (const Error& e) {
      if (e.code() == Errc::IoError) throw;
      throw Error(Errc::CorruptStore, "job '" + job_id + "': job.json invalid: " + e.what());
    }
  }

  std::filesystem::path root_;
  std::size_t appended_ = 0;
  std::function<void(std::size_t)> append_hook_;
};

}  // namespace tuner

#endif  // TUNER_JOBSTORE_HPP
