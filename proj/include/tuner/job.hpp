// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// Tuning-job configuration, trial ledger and the event records that drive
// it. A job's state is defined as the fold of its events: the coordinator
// persists each event and then applies it, and recovery replays the same
// events, so the two paths cannot diverge.

#ifndef TUNER_JOB_HPP
#define TUNER_JOB_HPP

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tuner/config_json.hpp"
#include "tuner/error.hpp"
#include "tuner/inference.hpp"
#include "tuner/runner.hpp"
#include "tuner/space.hpp"
#include "tuner/stopping.hpp"

namespace tuner {

enum class Strategy { Bayesian, Random };
enum class EarlyStopping { Off, Median };
enum class JobStatus { Created, Running, Stopping, Completed, Failed };
enum class TrialStatus { Pending, Running, Completed, Failed, EarlyStopped };

struct Objective {
  std::string name = "objective";
  Goal goal = Goal::Minimize;

  /// Maps a raw metric to minimization form.
  double minimize_form(double raw) const { return goal == Goal::Minimize ? raw : -raw; }
};

struct TuningJobConfig {
  std::string job_id;
  SearchSpace space;
  Strategy strategy = Strategy::Bayesian;
  Objective objective;
  std::size_t max_trials = 1;
  std::size_t max_parallel = 1;
  EarlyStopping early_stopping = EarlyStopping::Off;
  std::vector<std::string> warm_start_parents;
  InferenceOptions inference;
  std::uint64_t seed = 0;
  int retry_limit = 2;
  ExecutorSpec executor;

  void validate() const {
    static const std::regex id_pattern("[a-z0-9-]{1,64}");
    if (!std::regex_match(job_id, id_pattern))
      throw Error(Errc::InvalidConfig, "job_id '" + job_id + "' must match [a-z0-9-]{1,64}");
    (void)validate_space(space);
    if (space.size() == 0) throw Error(Errc::InvalidConfig, "space must declare at least one dimension");
    if (max_trials < 1) throw Error(Errc::InvalidConfig, "max_trials must be >= 1");
    if (max_parallel < 1) throw Error(Errc::InvalidConfig, "max_parallel must be >= 1");
    if (max_parallel > max_trials) throw Error(Errc::InvalidConfig, "max_parallel must not exceed max_trials");
    if (retry_limit < 0) throw Error(Errc::InvalidConfig, "retry_limit must be >= 0");
    if (objective.name.empty()) throw Error(Errc::InvalidConfig, "objective.name must be non-empty");
    for (const auto& p : warm_start_parents)
      if (p == job_id) throw Error(Errc::InvalidConfig, "a job cannot warm start from itself");
    inference.mcmc.validate();
    executor.validate();
  }
};

struct TrialRecord {
  std::string id;
  Configuration config;
  Eigen::VectorXd encoded;
  TrialStatus status = TrialStatus::Pending;
  MetricCurve curve;
  std::optional<double> final_value;
  int attempts = 0;
  std::string started;
  std::string finished;
  std::string last_error;

  bool terminal() const {
    return status == TrialStatus::Completed || status == TrialStatus::Failed ||
           status == TrialStatus::EarlyStopped;
  }
  bool has_observation() const {
    return (status == TrialStatus::Completed || status == TrialStatus::EarlyStopped) && final_value.has_value();
  }
};

enum class EventType { TrialLaunched, MetricReported, TrialCompleted, TrialFailed, TrialStopped, JobStatusChanged };

struct JobEvent {
  EventType type = EventType::JobStatusChanged;
  std::string timestamp;
  std::string trial_id;
  int attempt = 0;
  std::optional<Configuration> config;
  std::int64_t iteration = 0;
  double value = 0.0;
  std::optional<double> final_value;
  bool will_retry = false;
  std::string reason;
  JobStatus status = JobStatus::Created;
};

/// An observation fed to the surrogate, in minimization form.
struct Observation {
  Eigen::VectorXd encoded;
  double value = 0.0;
  bool warm_start = false;
};

struct Incumbent {
  std::string trial_id;
  Configuration config;
  double value = 0.0;  // raw metric
};

inline std::string trial_id_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial-%04zu", index + 1);
  return buf;
}

inline std::string utc_timestamp() {
  using namespace std::chrono;
  auto now = system_clock::now();
  std::time_t t = system_clock::to_time_t(now);
  auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

class TuningJobState {
 public:
  JobStatus status = JobStatus::Created;
  std::vector<TrialRecord> trials;
  /// Observations merged from parent jobs. Derived from the parents at load
  /// time, never persisted with this job.
  std::vector<Observation> warm_start;

  const TrialRecord* find(const std::string& id) const {
    auto it = std::find_if(trials.begin(), trials.end(), [&](const TrialRecord& t) { return t.id == id; });
    return it == trials.end() ? nullptr : &*it;
  }
  TrialRecord* find(const std::string& id) {
    return const_cast<TrialRecord*>(std::as_const(*this).find(id));
  }

  std::size_t count(TrialStatus s) const {
    return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(), [s](const TrialRecord& t) { return t.status == s; }));
  }
  std::size_t terminal_count() const {
    return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(), [](const TrialRecord& t) { return t.terminal(); }));
  }
  std::vector<std::string> pending_ids() const {
    std::vector<std::string> ids;
    for (const auto& t : trials)
      if (t.status == TrialStatus::Pending || t.status == TrialStatus::Running) ids.push_back(t.id);
    return ids;
  }

  /// Best finished trial (completed or early-stopped) under the goal.
  std::optional<Incumbent> incumbent(const Objective& objective) const {
    std::optional<Incumbent> best;
    for (const auto& t : trials) {
      if (!t.has_observation()) continue;
      if (!best || objective.minimize_form(*t.final_value) < objective.minimize_form(best->value))
        best = Incumbent{t.id, t.config, *t.final_value};
    }
    return best;
  }

  /// Native observations in minimization form, ledger order.
  std::vector<Observation> observations(const Objective& objective) const {
    std::vector<Observation> out;
    for (const auto& t : trials)
      if (t.has_observation()) out.push_back({t.encoded, objective.minimize_form(*t.final_value), false});
    return out;
  }

  void apply(const JobEvent& ev, const SearchSpace& space) {
    if (ev.type == EventType::JobStatusChanged) {
      status = ev.status;
      return;
    }
    TrialRecord* trial = find(ev.trial_id);
    if (ev.type == EventType::TrialLaunched) {
      if (!trial) {
        if (!ev.config) throw Error(Errc::CorruptStore, "launch of " + ev.trial_id + " lacks a configuration");
        TrialRecord rec;
        rec.id = ev.trial_id;
        rec.config = *ev.config;
        rec.encoded = encode(rec.config, space);
        rec.curve.trial_id = ev.trial_id;
        rec.started = ev.timestamp;
        trials.push_back(std::move(rec));
        trial = &trials.back();
      }
      trial->attempts = ev.attempt;
      trial->status = TrialStatus::Running;
      trial->curve.points.clear();
      return;
    }
    if (!trial) throw Error(Errc::UnknownTrial, "event for unknown trial '" + ev.trial_id + "'");
    switch (ev.type) {
      case EventType::MetricReported:
        trial->curve.append(ev.iteration, ev.value);
        break;
      case EventType::TrialCompleted:
        trial->status = TrialStatus::Completed;
        trial->final_value = ev.final_value;
        trial->finished = ev.timestamp;
        break;
      case EventType::TrialStopped:
        trial->status = TrialStatus::EarlyStopped;
        trial->final_value = ev.final_value;
        trial->finished = ev.timestamp;
        break;
      case EventType::TrialFailed:
        trial->last_error = ev.reason;
        if (ev.will_retry) {
          trial->status = TrialStatus::Pending;
        } else {
          trial->status = TrialStatus::Failed;
          trial->finished = ev.timestamp;
        }
        break;
      default:
        break;
    }
  }
};

// ---------------------------------------------------------------------------
// JSON forms

inline std::string to_string(Strategy s) { return s == Strategy::Bayesian ? "bayesian" : "random"; }
inline std::string to_string(Goal g) { return g == Goal::Minimize ? "minimize" : "maximize"; }
inline std::string to_string(EarlyStopping e) { return e == EarlyStopping::Off ? "off" : "median"; }
inline std::string to_string(InferenceMode m) {
  return m == InferenceMode::SliceSampling ? "slice_sampling" : "empirical_bayes";
}

inline std::string to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Created: return "created";
    case JobStatus::Running: return "running";
    case JobStatus::Stopping: return "stopping";
    case JobStatus::Completed: return "completed";
    case JobStatus::Failed: return "failed";
  }
  return "created";
}

inline std::string to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::Pending: return "pending";
    case TrialStatus::Running: return "running";
    case TrialStatus::Completed: return "completed";
    case TrialStatus::Failed: return "failed";
    case TrialStatus::EarlyStopped: return "early_stopped";
  }
  return "pending";
}

inline std::string to_string(EventType t) {
  switch (t) {
    case EventType::TrialLaunched: return "trial_launched";
    case EventType::MetricReported: return "metric_reported";
    case EventType::TrialCompleted: return "trial_completed";
    case EventType::TrialFailed: return "trial_failed";
    case EventType::TrialStopped: return "trial_stopped";
    case EventType::JobStatusChanged: return "job_status_changed";
  }
  return "";
}

namespace detail {

template <class Enum, std::size_t N>
Enum parse_enum(const std::string& text, const std::array<Enum, N>& options, const std::string& what) {
  for (Enum e : options)
    if (to_string(e) == text) return e;
  throw Error(Errc::InvalidConfig, what + ": unknown value '" + text + "'");
}

inline const nlohmann::json& require(const nlohmann::json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw Error(Errc::InvalidConfig, path + ": missing key '" + key + "'");
  return j.at(key);
}

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                                const std::string& path) {
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw Error(Errc::InvalidConfig, path + ": unknown key '" + key + "'");
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::InvalidConfig, path + ": wrong type");
  }
}

inline std::size_t get_count(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
    throw Error(Errc::InvalidConfig, path + ": expected a non-negative integer");
  return j.get<std::size_t>();
}

inline double get_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw Error(Errc::InvalidConfig, path + ": expected a number");
  return j.get<double>();
}

}  // namespace detail

inline nlohmann::json dimension_to_json(const Dimension& d) {
  nlohmann::json j;
  j["name"] = d.name;
  switch (d.kind) {
    case DimensionKind::Continuous:
      j["type"] = "continuous";
      j["min"] = d.lower;
      j["max"] = d.upper;
      break;
    case DimensionKind::Integer:
      j["type"] = "integer";
      j["min"] = static_cast<std::int64_t>(d.lower);
      j["max"] = static_cast<std::int64_t>(d.upper);
      break;
    case DimensionKind::Categorical:
      j["type"] = "categorical";
      j["values"] = d.categories;
      return j;
  }
  j["scaling"] = d.scaling == Scaling::Log ? "log" : "linear";
  return j;
}

inline Dimension dimension_from_json(const nlohmann::json& j, const std::string& path) {
  using detail::require;
  if (!j.is_object()) throw Error(Errc::InvalidConfig, path + ": expected an object");
  for (const char* key : {"condition", "conditions", "parent", "depends_on", "active_if"})
    if (j.contains(key))
      throw Error(Errc::ConditionalUnsupported, path + ": conditional hyperparameters are not supported");
  detail::reject_unknown_keys(j, {"name", "type", "min", "max", "scaling", "values"}, path);
  Dimension d;
  d.name = detail::get_as<std::string>(require(j, "name", path), path + ".name");
  const std::string type = detail::get_as<std::string>(require(j, "type", path), path + ".type");
  if (type == "categorical") {
    if (j.contains("min") || j.contains("max") || j.contains("scaling"))
      throw Error(Errc::InvalidConfig, path + ": categorical dimensions take no bounds or scaling");
    return Dimension::categorical(std::move(d.name), detail::get_as<std::vector<std::string>>(
                                                         require(j, "values", path), path + ".values"));
  }
  if (type == "continuous")
    d.kind = DimensionKind::Continuous;
  else if (type == "integer")
    d.kind = DimensionKind::Integer;
  else
    throw Error(Errc::InvalidConfig, path + ".type: unknown type '" + type + "'");
  if (j.contains("values")) throw Error(Errc::InvalidConfig, path + ": numeric dimensions take no values");
  const auto& lo = require(j, "min", path);
  const auto& hi = require(j, "max", path);
  d.lower = detail::get_number(lo, path + ".min");
  d.upper = detail::get_number(hi, path + ".max");
  if (d.kind == DimensionKind::Integer && (!lo.is_number_integer() || !hi.is_number_integer()))
    throw Error(Errc::InvalidBounds, path + ": integer bounds must be integers");
  const std::string scaling = j.contains("scaling") ? detail::get_as<std::string>(j["scaling"], path + ".scaling") : "linear";
  if (scaling == "log")
    d.scaling = Scaling::Log;
  else if (scaling != "linear")
    throw Error(Errc::InvalidConfig, path + ".scaling: expected 'linear' or 'log'");
  return d;
}

inline nlohmann::json executor_to_json(const ExecutorSpec& e) {
  if (e.kind == ExecutorKind::Builtin)
    return {{"kind", "builtin"},
            {"benchmark", e.builtin.benchmark},
            {"noise_std", e.builtin.noise_std},
            {"iterations", e.builtin.iterations},
            {"delay_ms", e.builtin.delay.count()}};
  return {{"kind", "external"},
          {"command", e.external.command},
          {"workdir", e.external.workdir.string()},
          {"timeout_seconds", e.external.timeout_seconds}};
}

inline ExecutorSpec executor_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, path + ": expected an object");
  ExecutorSpec e;
  const std::string kind = j.contains("kind") ? detail::get_as<std::string>(j["kind"], path + ".kind") : "builtin";
  if (kind == "builtin") {
    detail::reject_unknown_keys(j, {"kind", "benchmark", "noise_std", "iterations", "delay_ms"}, path);
    e.kind = ExecutorKind::Builtin;
    if (j.contains("benchmark")) e.builtin.benchmark = detail::get_as<std::string>(j["benchmark"], path + ".benchmark");
    if (j.contains("noise_std")) e.builtin.noise_std = detail::get_number(j["noise_std"], path + ".noise_std");
    if (j.contains("iterations"))
      e.builtin.iterations = static_cast<std::int64_t>(detail::get_count(j["iterations"], path + ".iterations"));
    if (j.contains("delay_ms"))
      e.builtin.delay = std::chrono::milliseconds(detail::get_count(j["delay_ms"], path + ".delay_ms"));
  } else if (kind == "external") {
    detail::reject_unknown_keys(j, {"kind", "command", "workdir", "timeout_seconds"}, path);
    e.kind = ExecutorKind::External;
    e.external.command = detail::get_as<std::vector<std::string>>(detail::require(j, "command", path), path + ".command");
    if (j.contains("workdir")) e.external.workdir = detail::get_as<std::string>(j["workdir"], path + ".workdir");
    if (j.contains("timeout_seconds"))
      e.external.timeout_seconds = detail::get_number(j["timeout_seconds"], path + ".timeout_seconds");
  } else {
    throw Error(Errc::InvalidConfig, path + ".kind: expected 'builtin' or 'external'");
  }
  return e;
}

/// The job.json schema; `status` is included when given.
inline nlohmann::json job_config_to_json(const TuningJobConfig& c, std::optional<JobStatus> status = std::nullopt) {
  nlohmann::json space = nlohmann::json::array();
  for (const auto& d : c.space.dimensions()) space.push_back(dimension_to_json(d));
  nlohmann::json j{
      {"job_id", c.job_id},
      {"strategy", to_string(c.strategy)},
      {"objective", {{"name", c.objective.name}, {"goal", to_string(c.objective.goal)}}},
      {"space", space},
      {"max_trials", c.max_trials},
      {"max_parallel", c.max_parallel},
      {"early_stopping", to_string(c.early_stopping)},
      {"warm_start_parents", c.warm_start_parents},
      {"seed", c.seed},
      {"retry_limit", c.retry_limit},
      {"inference",
       {{"mode", to_string(c.inference.mode)},
        {"chain_length", c.inference.mcmc.chain_length},
        {"burn_in", c.inference.mcmc.burn_in},
        {"thinning", c.inference.mcmc.thinning},
        {"learn_warping", c.inference.learn_warping}}},
      {"executor", executor_to_json(c.executor)},
  };
  if (status) j["status"] = to_string(*status);
  return j;
}

/// Parses and validates a job config. Errors name the offending key path.
inline TuningJobConfig job_config_from_json(const nlohmann::json& j) {
  using detail::require;
  if (!j.is_object()) throw Error(Errc::InvalidConfig, "config must be a JSON object");
  detail::reject_unknown_keys(j,
                              {"job_id", "strategy", "objective", "space", "max_trials", "max_parallel",
                               "early_stopping", "warm_start_parents", "seed", "retry_limit", "inference",
                               "executor", "status"},
                              "config");
  TuningJobConfig c;
  c.job_id = detail::get_as<std::string>(require(j, "job_id", "config"), "job_id");

  const auto& space = require(j, "space", "config");
  if (!space.is_array()) throw Error(Errc::InvalidConfig, "space: expected a list of dimensions");
  std::vector<Dimension> dims;
  for (std::size_t i = 0; i < space.size(); ++i)
    dims.push_back(dimension_from_json(space[i], "space[" + std::to_string(i) + "]"));
  c.space = validate_space(std::move(dims));

  if (j.contains("strategy"))
    c.strategy = detail::parse_enum(detail::get_as<std::string>(j["strategy"], "strategy"),
                                    std::array{Strategy::Bayesian, Strategy::Random}, "strategy");
  if (j.contains("objective")) {
    const auto& o = j["objective"];
    if (!o.is_object()) throw Error(Errc::InvalidConfig, "objective: expected an object");
    detail::reject_unknown_keys(o, {"name", "goal"}, "objective");
    if (o.contains("name")) c.objective.name = detail::get_as<std::string>(o["name"], "objective.name");
    if (o.contains("goal"))
      c.objective.goal = detail::parse_enum(detail::get_as<std::string>(o["goal"], "objective.goal"),
                                            std::array{Goal::Minimize, Goal::Maximize}, "objective.goal");
  }
  c.max_trials = detail::get_count(require(j, "max_trials", "config"), "max_trials");
  if (j.contains("max_parallel")) c.max_parallel = detail::get_count(j["max_parallel"], "max_parallel");
  if (j.contains("early_stopping"))
    c.early_stopping = detail::parse_enum(detail::get_as<std::string>(j["early_stopping"], "early_stopping"),
                                          std::array{EarlyStopping::Off, EarlyStopping::Median}, "early_stopping");
  if (j.contains("warm_start_parents"))
    c.warm_start_parents = detail::get_as<std::vector<std::string>>(j["warm_start_parents"], "warm_start_parents");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0))
      throw Error(Errc::InvalidConfig, "seed: expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("retry_limit")) c.retry_limit = static_cast<int>(detail::get_count(j["retry_limit"], "retry_limit"));
  if (j.contains("inference")) {
    const auto& inf = j["inference"];
    if (!inf.is_object()) throw Error(Errc::InvalidConfig, "inference: expected an object");
    detail::reject_unknown_keys(inf, {"mode", "chain_length", "burn_in", "thinning", "learn_warping"}, "inference");
    if (inf.contains("mode"))
      c.inference.mode = detail::parse_enum(detail::get_as<std::string>(inf["mode"], "inference.mode"),
                                            std::array{InferenceMode::SliceSampling, InferenceMode::EmpiricalBayes},
                                            "inference.mode");
    if (inf.contains("chain_length")) c.inference.mcmc.chain_length = detail::get_count(inf["chain_length"], "inference.chain_length");
    if (inf.contains("burn_in")) c.inference.mcmc.burn_in = detail::get_count(inf["burn_in"], "inference.burn_in");
    if (inf.contains("thinning")) c.inference.mcmc.thinning = detail::get_count(inf["thinning"], "inference.thinning");
    if (inf.contains("learn_warping")) c.inference.learn_warping = detail::get_as<bool>(inf["learn_warping"], "inference.learn_warping");
  }
  if (j.contains("executor")) c.executor = executor_from_json(j["executor"], "executor");
  c.validate();
  return c;
}

/// Parses job.json text; syntax errors are reported with line and column.
inline TuningJobConfig job_config_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(Errc::InvalidConfig, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                                         "invalid JSON (" + std::string(e.what()) + ")");
  }
  return job_config_from_json(j);
}

inline JobStatus job_status_from_string(const std::string& s) {
  return detail::parse_enum(s,
                            std::array{JobStatus::Created, JobStatus::Running, JobStatus::Stopping,
                                       JobStatus::Completed, JobStatus::Failed},
                            "status");
}

inline TrialStatus trial_status_from_string(const std::string& s) {
  return detail::parse_enum(s,
                            std::array{TrialStatus::Pending, TrialStatus::Running, TrialStatus::Completed,
                                       TrialStatus::Failed, TrialStatus::EarlyStopped},
                            "trial status");
}

inline nlohmann::json event_to_json(const JobEvent& ev) {
  nlohmann::json j{{"type", to_string(ev.type)}, {"ts", ev.timestamp}};
  switch (ev.type) {
    case EventType::TrialLaunched:
      j["trial_id"] = ev.trial_id;
      j["attempt"] = ev.attempt;
      if (ev.config) j["config"] = config_to_json(*ev.config);
      break;
    case EventType::MetricReported:
      j["trial_id"] = ev.trial_id;
      j["iteration"] = ev.iteration;
      j["value"] = ev.value;
      break;
    case EventType::TrialCompleted:
    case EventType::TrialStopped:
      j["trial_id"] = ev.trial_id;
      j["final_value"] = ev.final_value ? nlohmann::json(*ev.final_value) : nlohmann::json(nullptr);
      break;
    case EventType::TrialFailed:
      j["trial_id"] = ev.trial_id;
      j["will_retry"] = ev.will_retry;
      j["reason"] = ev.reason;
      break;
    case EventType::JobStatusChanged:
      j["status"] = to_string(ev.status);
      break;
  }
  return j;
}

inline JobEvent event_from_json(const nlohmann::json& j, const SearchSpace& space) {
  JobEvent ev;
  ev.type = detail::parse_enum(j.at("type").get<std::string>(),
                               std::array{EventType::TrialLaunched, EventType::MetricReported, EventType::TrialCompleted,
                                          EventType::TrialFailed, EventType::TrialStopped, EventType::JobStatusChanged},
                               "event type");
  ev.timestamp = j.value("ts", "");
  ev.trial_id = j.value("trial_id", "");
  switch (ev.type) {
    case EventType::TrialLaunched:
      ev.attempt = j.at("attempt").get<int>();
      if (j.contains("config")) ev.config = conform_to_space(config_from_json(j.at("config")), space);
      break;
    case EventType::MetricReported:
      ev.iteration = j.at("iteration").get<std::int64_t>();
      ev.value = j.at("value").get<double>();
      break;
    case EventType::TrialCompleted:
    case EventType::TrialStopped:
      if (!j.at("final_value").is_null()) ev.final_value = j.at("final_value").get<double>();
      break;
    case EventType::TrialFailed:
      ev.will_retry = j.at("will_retry").get<bool>();
      ev.reason = j.value("reason", "");
      break;
    case EventType::JobStatusChanged:
      ev.status = job_status_from_string(j.at("status").get<std::string>());
      break;
  }
  return ev;
}

inline nlohmann::json trial_to_json(const TrialRecord& t) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : t.curve.points) curve.push_back({p.iteration, p.value});
  return {{"trial_id", t.id},
          {"config", config_to_json(t.config)},
          {"status", to_string(t.status)},
          {"attempts", t.attempts},
          {"final_value", t.final_value ? nlohmann::json(*t.final_value) : nlohmann::json(nullptr)},
          {"started", t.started},
          {"finished", t.finished},
          {"last_error", t.last_error},
          {"curve", curve}};
}

}  // namespace tuner

#endif  // TUNER_JOB_HPP
