// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// The asynchronous tuning loop. One coordinator thread owns the job state
// and the store; each running trial gets its own worker thread, which talks
// to the coordinator only through an ordered message channel.

#ifndef TUNER_SCHEDULER_HPP
#define TUNER_SCHEDULER_HPP

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "tuner/acquisition.hpp"
#include "tuner/error.hpp"
#include "tuner/inference.hpp"
#include "tuner/job.hpp"
#include "tuner/jobstore.hpp"
#include "tuner/runner.hpp"
#include "tuner/sobol.hpp"
#include "tuner/space.hpp"
#include "tuner/stopping.hpp"
#include "tuner/surrogate.hpp"

namespace tuner {

enum class SeedStream : std::uint64_t { Initial = 1, Proposal = 2, Executor = 3, Inference = 4, Acquisition = 5 };

/// SplitMix64 finalizer over (base, stream, index): independent-looking
/// seeds for every random decision of a job from one user seed.
inline std::uint64_t derive_seed(std::uint64_t base, SeedStream stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

inline std::size_t initial_design_size(const TuningJobConfig& config) {
  const std::size_t w = config.space.encoded_width();
  return std::max(config.max_parallel + 1, std::min<std::size_t>(2 * w, 10));
}

namespace detail {

/// Point `index` of the job's scrambled Sobol' initial design, snapped to a
/// valid configuration.
inline Configuration initial_design_point(const TuningJobConfig& config, std::size_t index) {
  const std::size_t w = config.space.encoded_width();
  const std::uint64_t seed = derive_seed(config.seed, SeedStream::Initial, 0);
  if (w > kSobolMaxDim)
    return sample_random(config.space, derive_seed(seed, SeedStream::Initial, index), 1).front();
  Eigen::MatrixXd pts = scrambled_sobol_points(w, index + 1, seed);
  return decode(pts.row(static_cast<Eigen::Index>(index)).transpose(), config.space);
}

}  // namespace detail

/// Chooses the configuration for the next new trial. Random search samples
/// uniformly in encoded space. Bayesian search walks the initial design
/// until enough observations exist (warm-start ones count), then refits the
/// GP hyperparameters on every observation and maximizes averaged EI away
/// from pending and already-evaluated points.
inline Configuration next_candidate(const TuningJobState& state, const TuningJobConfig& config, std::uint64_t seed) {
  const SearchSpace& space = config.space;
  if (config.strategy == Strategy::Random) return sample_random(space, seed, 1).front();

  std::vector<Observation> obs = state.warm_start;
  for (auto& o : state.observations(config.objective)) obs.push_back(std::move(o));

  std::vector<Eigen::VectorXd> pending;
  for (const auto& t : state.trials)
    if (t.status == TrialStatus::Pending || t.status == TrialStatus::Running) pending.push_back(t.encoded);

  if (obs.size() + pending.size() < initial_design_size(config) || obs.empty())
    return detail::initial_design_point(config, state.trials.size());

  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd design(n, static_cast<Eigen::Index>(space.encoded_width()));
  Eigen::VectorXd y(n);
  std::vector<Eigen::VectorXd> completed;
  for (Eigen::Index i = 0; i < n; ++i) {
    design.row(i) = obs[static_cast<std::size_t>(i)].encoded.transpose();
    y[i] = obs[static_cast<std::size_t>(i)].value;
    completed.push_back(obs[static_cast<std::size_t>(i)].encoded);
  }

  try {
    ThetaEnsemble thetas = infer_thetas(design, y, config.inference, derive_seed(seed, SeedStream::Inference, 0));
    AcquisitionContext ctx{{}, y.minCoeff(), std::move(pending), std::move(completed), space};
    for (const auto& theta : thetas.samples) {
      try {
        ctx.posteriors.push_back(fit_posterior(design, y, theta));
      } catch (const Error& e) {
        if (e.code() != Errc::CholeskyFailure) throw;
      }
    }
    if (!ctx.posteriors.empty()) return propose(ctx, derive_seed(seed, SeedStream::Acquisition, 0));
    spdlog::warn("no usable GP fit for {}; falling back to a random proposal", config.job_id);
  } catch (const Error& e) {
    if (e.code() != Errc::CholeskyFailure && e.code() != Errc::StepOutFailure) throw;
    spdlog::warn("surrogate refit failed ({}); falling back to a random proposal", e.what());
  }
  return sample_random(space, seed, 1).front();
}

struct StopCommand {
  std::string trial_id;
  double final_value = 0.0;
  std::optional<double> median;
};

/// Persists-then-applies one event. The default just applies to the state.
using EventRecorder = std::function<void(const JobEvent&)>;

/// Handles an intermediate objective report from a running trial. Records
/// the metric; with early stopping on, consults the median rule against
/// completed trials and, on a stop verdict, records the trial as
/// early-stopped with the best value of its curve as final value.
inline std::optional<StopCommand> on_metric_report(TuningJobState& state, const TuningJobConfig& config,
                                                   const std::string& trial_id, std::int64_t iteration,
                                                   double value, const EventRecorder& recorder = {}) {
  auto record = [&](const JobEvent& ev) {
    if (recorder)
      recorder(ev);
    else
      state.apply(ev, config.space);
  };
  TrialRecord* trial = state.find(trial_id);
  if (!trial) throw Error(Errc::UnknownTrial, "metric for unknown trial '" + trial_id + "'");
  if (trial->status != TrialStatus::Running) return std::nullopt;

  JobEvent ev;
  ev.type = EventType::MetricReported;
  ev.timestamp = utc_timestamp();
  ev.trial_id = trial_id;
  ev.iteration = iteration;
  ev.value = value;
  record(ev);
  if (config.early_stopping == EarlyStopping::Off) return std::nullopt;

  trial = state.find(trial_id);
  std::vector<MetricCurve> completed;
  for (const auto& t : state.trials)
    if (t.status == TrialStatus::Completed) completed.push_back(t.curve);
  StopDecision decision = median_rule(trial->curve, completed, iteration, config.objective.goal);
  if (decision.verdict != Verdict::Stop) return std::nullopt;

  double best = trial->curve.points.front().value;
  for (const auto& p : trial->curve.points)
    if (config.objective.minimize_form(p.value) < config.objective.minimize_form(best)) best = p.value;
  JobEvent stop;
  stop.type = EventType::TrialStopped;
  stop.timestamp = utc_timestamp();
  stop.trial_id = trial_id;
  stop.final_value = best;
  stop.reason = "median rule";
  record(stop);
  return StopCommand{trial_id, best, decision.median};
}

struct ParentLedger {
  TuningJobConfig config;
  std::vector<TrialRecord> trials;
};

/// Re-validates every finished parent trial against the child space and
/// re-encodes the survivors. Parent values missing a child dimension, out
/// of the child's range, or of an unknown category are dropped; parent
/// dimensions the child lacks are ignored.
inline std::vector<Observation> merge_warm_start(const std::vector<ParentLedger>& parents,
                                                 const SearchSpace& child_space, const Objective& objective) {
  std::vector<Observation> out;
  for (const auto& parent : parents) {
    for (const auto& trial : parent.trials) {
      if (!trial.has_observation()) continue;
      Configuration child;
      bool ok = true;
      for (const auto& dim : child_space.dimensions()) {
        auto it = trial.config.values.find(dim.name);
        if (it == trial.config.values.end() || !in_domain(dim, it->second)) {
          ok = false;
          break;
        }
        child.values.emplace(dim.name, it->second);
      }
      if (!ok) continue;
      child = conform_to_space(std::move(child), child_space);
      out.push_back({encode(child, child_space), objective.minimize_form(*trial.final_value), true});
    }
  }
  return out;
}

inline std::vector<Observation> load_warm_start(const JobStore& store, const TuningJobConfig& config) {
  std::vector<ParentLedger> parents;
  for (const auto& id : config.warm_start_parents) {
    if (!store.exists(id)) throw Error(Errc::ParentNotFound, "warm-start parent '" + id + "' not found");
    LoadedJob job = store.load_job(id);
    parents.push_back({std::move(job.config), std::move(job.state.trials)});
  }
  return merge_warm_start(parents, config.space, config.objective);
}

struct RunOptions {
  /// Polled at every event boundary; true makes the coordinator cancel the
  /// running trials and return with the job still marked running.
  std::function<bool()> interrupt_requested;
  /// Observer called after each event has been persisted and applied.
  std::function<void(const JobEvent&, const TuningJobState&)> on_event;
  /// How often job.json is checked for an external stop request while
  /// waiting on trials.
  std::chrono::milliseconds stop_poll{200};
};

struct RunResult {
  TuningJobConfig config;
  TuningJobState state;
  bool interrupted = false;
};

namespace detail {

struct WorkerMessage {
  enum class Kind { Metric, Done } kind = Kind::Done;
  std::string trial_id;
  std::int64_t iteration = 0;
  double value = 0.0;
  std::shared_ptr<std::promise<bool>> reply;
  TrialOutcome outcome;
};

class Channel {
 public:
  void push(WorkerMessage m) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(std::move(m));
    }
    cv_.notify_one();
  }

  std::optional<WorkerMessage> pop_for(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
    WorkerMessage m = std::move(queue_.front());
    queue_.pop_front();
    return m;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<WorkerMessage> queue_;
};

class Coordinator {
 public:
  Coordinator(TuningJobConfig config, JobStore& store, Executor& executor, RunOptions options)
      : config_(std::move(config)), store_(store), executor_(executor), options_(std::move(options)) {}

  RunResult run() {
    bool stopping = false;
    if (store_.exists(config_.job_id)) {
      LoadedJob loaded = store_.load_job(config_.job_id);
      config_ = loaded.config;
      state_ = std::move(loaded.state);
      stopping = loaded.stored_status == JobStatus::Stopping;
      if (loaded.stored_status == JobStatus::Completed || loaded.stored_status == JobStatus::Failed) {
        state_.status = loaded.stored_status;
        return {config_, state_, false};
      }
      for (const auto& ev : loaded.recovery_events) persist(ev);
      state_.warm_start = load_warm_start(store_, config_);
    } else {
      // Parents are checked before the job directory exists.
      state_.warm_start = load_warm_start(store_, config_);
      store_.create_job(config_);
    }

    if (!stopping) set_status(JobStatus::Running);

    try {
      loop(stopping);
    } catch (...) {
      shutdown();
      throw;
    }
    if (interrupted_) {
      shutdown();
      return {config_, state_, true};
    }
    const bool any = std::any_of(state_.trials.begin(), state_.trials.end(),
                                 [](const TrialRecord& t) { return t.has_observation(); });
    set_status(any ? JobStatus::Completed : JobStatus::Failed);
    return {config_, state_, false};
  }

 private:
  // Store failures past this point are unrecoverable for the run.
  template <class F>
  void guarded(F&& f) {
    try {
      f();
    } catch (const Error& e) {
      throw Error(Errc::JobAborted, std::string("store failure: ") + e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::JobAborted, std::string("store failure: ") + e.what());
    }
  }

  void persist(const JobEvent& ev) {
    guarded([&] { store_.append_event(config_.job_id, ev); });
    after_persist(ev);
  }

  void record(const JobEvent& ev) {
    guarded([&] { store_.append_event(config_.job_id, ev); });
    state_.apply(ev, config_.space);
    after_persist(ev);
  }

  void after_persist(const JobEvent& ev) {
    if (ev.type != EventType::MetricReported && ev.type != EventType::JobStatusChanged) {
      if (const TrialRecord* t = state_.find(ev.trial_id)) guarded([&] { store_.write_trial(config_.job_id, *t); });
    }
    if (options_.on_event) options_.on_event(ev, state_);
  }

  void set_status(JobStatus status) {
    JobEvent ev;
    ev.type = EventType::JobStatusChanged;
    ev.timestamp = utc_timestamp();
    ev.status = status;
    record(ev);
    guarded([&] { store_.write_status(config_.job_id, status); });
  }

  bool interrupt_requested() const { return options_.interrupt_requested && options_.interrupt_requested(); }

  bool stop_requested() const {
    try {
      return store_.read_status(config_.job_id) == JobStatus::Stopping;
    } catch (const Error&) {
      return false;
    }
  }

  void launch(const std::string& trial_id, std::optional<Configuration> config) {
    const TrialRecord* existing = state_.find(trial_id);
    JobEvent ev;
    ev.type = EventType::TrialLaunched;
    ev.timestamp = utc_timestamp();
    ev.trial_id = trial_id;
    ev.attempt = existing ? existing->attempts + 1 : 1;
    ev.config = existing ? existing->config : *config;
    record(ev);

    const TrialRecord* trial = state_.find(trial_id);
    const std::size_t index = static_cast<std::size_t>(trial - state_.trials.data());
    TrialTask task;
    task.trial_id = trial_id;
    task.config = trial->config;
    task.attempt = trial->attempts;
    task.seed = derive_seed(config_.seed, SeedStream::Executor, index * 64 + static_cast<std::size_t>(task.attempt));
    task.objective = config_.objective.name;

    Channel& channel = channel_;
    Executor& executor = executor_;
    workers_[trial_id] = std::jthread([&channel, &executor, task](std::stop_token stop) mutable {
      task.stop = stop;
      MetricSink sink = [&channel, &task](std::int64_t iteration, double value) {
        auto reply = std::make_shared<std::promise<bool>>();
        auto answer = reply->get_future();
        channel.push({WorkerMessage::Kind::Metric, task.trial_id, iteration, value, reply, {}});
        return answer.get();
      };
      TrialOutcome outcome;
      try {
        outcome = executor.run(task, sink);
      } catch (const Error& e) {
        outcome = TrialOutcome::failed(e.code(), e.what());
      } catch (const std::exception& e) {
        outcome = TrialOutcome::failed(Errc::TrialFailed, e.what());
      }
      channel.push({WorkerMessage::Kind::Done, task.trial_id, 0, 0.0, nullptr, std::move(outcome)});
    });
  }

  void fill_slots() {
    while (workers_.size() < config_.max_parallel) {
      auto waiting = std::find_if(state_.trials.begin(), state_.trials.end(), [&](const TrialRecord& t) {
        return t.status == TrialStatus::Pending && !workers_.count(t.id);
      });
      if (waiting != state_.trials.end()) {
        launch(waiting->id, std::nullopt);
        continue;
      }
      if (state_.trials.size() >= config_.max_trials) return;
      const std::size_t index = state_.trials.size();
      Configuration next = next_candidate(state_, config_, derive_seed(config_.seed, SeedStream::Proposal, index));
      launch(trial_id_for(index), std::move(next));
    }
  }

  void abandon_waiting() {
    for (std::size_t i = 0; i < state_.trials.size(); ++i) {
      const TrialRecord& t = state_.trials[i];
      if (t.status != TrialStatus::Pending || workers_.count(t.id)) continue;
      JobEvent ev;
      ev.type = EventType::TrialFailed;
      ev.timestamp = utc_timestamp();
      ev.trial_id = t.id;
      ev.will_retry = false;
      ev.reason = "job stopped before retry";
      record(ev);
    }
  }

  void handle(WorkerMessage& msg) {
    if (msg.kind == WorkerMessage::Kind::Metric) {
      bool keep_going = true;
      try {
        keep_going = !on_metric_report(state_, config_, msg.trial_id, msg.iteration, msg.value,
                                       [this](const JobEvent& ev) { record(ev); });
        const TrialRecord* t = state_.find(msg.trial_id);
        if (t && t->status != TrialStatus::Running) keep_going = false;
      } catch (...) {
        msg.reply->set_value(false);
        throw;
      }
      msg.reply->set_value(keep_going);
      return;
    }

    auto it = workers_.find(msg.trial_id);
    if (it != workers_.end()) {
      it->second.join();
      workers_.erase(it);
    }
    const TrialRecord* trial = state_.find(msg.trial_id);
    if (!trial || trial->status != TrialStatus::Running) return;  // already early-stopped

    JobEvent ev;
    ev.timestamp = utc_timestamp();
    ev.trial_id = msg.trial_id;
    const TrialOutcome& out = msg.outcome;
    if (out.kind == OutcomeKind::Completed) {
      ev.type = EventType::TrialCompleted;
      ev.final_value = out.final_value;
    } else {
      ev.type = EventType::TrialFailed;
      ev.will_retry = trial->attempts < config_.retry_limit + 1;
      ev.reason = out.kind == OutcomeKind::Stopped ? "stopped without a verdict" : out.message;
    }
    record(ev);
  }

  void loop(bool stopping) {
    auto last_poll = std::chrono::steady_clock::now();
    for (;;) {
      if (interrupt_requested()) {
        interrupted_ = true;
        return;
      }
      if (!stopping && std::chrono::steady_clock::now() - last_poll >= options_.stop_poll) {
        stopping = stop_requested();
        last_poll = std::chrono::steady_clock::now();
      }
      if (stopping)
        abandon_waiting();
      else
        fill_slots();
      if (workers_.empty()) return;

      auto msg = channel_.pop_for(options_.stop_poll);
      if (!msg) {
        stopping = stopping || stop_requested();
        last_poll = std::chrono::steady_clock::now();
        continue;
      }
      handle(*msg);
    }
  }

  // Cancels every worker and drains the channel until all have reported
  // back; outcomes are not recorded, so resumption retries these trials.
  void shutdown() {
    for (auto& [id, w] : workers_) w.request_stop();
    while (!workers_.empty()) {
      auto msg = channel_.pop_for(std::chrono::milliseconds(100));
      if (!msg) continue;
      if (msg->kind == WorkerMessage::Kind::Metric) {
        msg->reply->set_value(false);
        continue;
      }
      auto it = workers_.find(msg->trial_id);
      if (it != workers_.end()) {
        it->second.join();
        workers_.erase(it);
      }
    }
  }

  TuningJobConfig config_;
  JobStore& store_;
  Executor& executor_;
  RunOptions options_;
  TuningJobState state_;
  Channel channel_;
  std::map<std::string, std::jthread> workers_;
  bool interrupted_ = false;
};

}  // namespace detail

/// Runs (or resumes) a job to completion. An existing job in the store is
/// resumed with its stored configuration; `config` then only names it.
/// Throws JobAborted when the store fails mid-run.
inline RunResult run_job(const TuningJobConfig& config, JobStore& store, Executor& executor,
                         RunOptions options = {}) {
  config.validate();
  detail::Coordinator coordinator(config, store, executor, std::move(options));
  return coordinator.run();
}

}  // namespace tuner

#endif  // TUNER_SCHEDULER_HPP
