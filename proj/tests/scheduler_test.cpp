// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <set>

#include "oracles.hpp"
#include "temp_dir.hpp"
#include "tuner/scheduler.hpp"

using namespace tuner;

namespace {

TuningJobConfig branin_job(const std::string& id, std::size_t trials, std::size_t parallel) {
  TuningJobConfig c;
  c.job_id = id;
  c.space = bench::make_benchmark("branin").space;
  c.max_trials = trials;
  c.max_parallel = parallel;
  c.seed = 5;
  c.inference.mode = InferenceMode::EmpiricalBayes;
  return c;
}

// Evaluates Branin after a short sleep, counting overlap and optionally
// failing chosen attempts.
class ProbeExecutor : public Executor {
 public:
  std::chrono::milliseconds delay{0};
  std::function<bool(const TrialTask&)> fail_when;

  TrialOutcome run(const TrialTask& task, const MetricSink& sink) override {
    const int now = ++active_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(delay);
    --active_;
    {
      std::lock_guard lock(mu_);
      attempts_.push_back(task.trial_id + "#" + std::to_string(task.attempt));
    }
    if (fail_when && fail_when(task)) return TrialOutcome::failed(Errc::TrialFailed, "probe failure");
    const double v = bench::make_benchmark("branin").objective(task.config);
    sink(1, v);
    return TrialOutcome::completed(v);
  }

  int peak() const { return peak_.load(); }
  std::vector<std::string> attempts() {
    std::lock_guard lock(mu_);
    return attempts_;
  }

 private:
  std::atomic<int> active_{0}, peak_{0};
  std::mutex mu_;
  std::vector<std::string> attempts_;
};

MetricCurve flat(std::int64_t last, double v) {
  MetricCurve c;
  for (std::int64_t r = 1; r <= last; ++r) c.append(r, v);
  return c;
}

TrialRecord finished_trial(const std::string& id, Configuration cfg, double value, const SearchSpace& space) {
  TrialRecord t;
  t.id = id;
  t.encoded = encode(cfg, space);
  t.config = std::move(cfg);
  t.status = TrialStatus::Completed;
  t.final_value = value;
  return t;
}

Configuration single(const std::string& name, ParamValue v) {
  Configuration c;
  c.values.emplace(name, std::move(v));
  return c;
}

}  // namespace

TEST(DeriveSeed, DistinctStreamsAndIndices) {
  std::set<std::uint64_t> seen;
  for (auto s : {SeedStream::Initial, SeedStream::Proposal, SeedStream::Executor})
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(1, s, i));
  EXPECT_EQ(seen.size(), 300u);
  EXPECT_EQ(derive_seed(9, SeedStream::Proposal, 3), derive_seed(9, SeedStream::Proposal, 3));
}

TEST(InitialDesign, SizeFollowsWidthAndParallelism) {
  TuningJobConfig c = branin_job("a", 20, 1);
  EXPECT_EQ(initial_design_size(c), 4u);
  c.max_parallel = 8;
  EXPECT_EQ(initial_design_size(c), 9u);
  c.space = bench::make_benchmark("sphere-8").space;
  c.max_parallel = 1;
  EXPECT_EQ(initial_design_size(c), 10u);
}

TEST(NextCandidate, StartsWithTheInitialDesign) {
  TuningJobConfig c = branin_job("a", 20, 1);
  TuningJobState empty;
  Configuration first = next_candidate(empty, c, 1);
  EXPECT_EQ(first, detail::initial_design_point(c, 0));
  for (const auto& d : c.space.dimensions()) EXPECT_TRUE(in_domain(d, first.at(d.name)));
}

TEST(NextCandidate, AvoidsPendingPoints) {
  TuningJobConfig c = branin_job("a", 20, 4);
  TuningJobState state;
  auto b = bench::make_benchmark("branin");
  for (std::size_t i = 0; i < 6; ++i) {
    Configuration cfg = detail::initial_design_point(c, i);
    state.trials.push_back(finished_trial(trial_id_for(i), cfg, b.objective(cfg), c.space));
  }
  for (std::size_t i = 6; i < 9; ++i) {
    Configuration cfg = next_candidate(state, c, 100 + i);
    TrialRecord t;
    t.id = trial_id_for(i);
    t.encoded = encode(cfg, c.space);
    t.config = cfg;
    t.status = TrialStatus::Running;
    for (const auto& other : state.trials) EXPECT_GT((other.encoded - t.encoded).norm(), 1e-6);
    state.trials.push_back(t);
  }
}

TEST(NextCandidate, RandomStrategyIsUniform) {
  TuningJobConfig c = branin_job("a", 2000, 1);
  c.strategy = Strategy::Random;
  TuningJobState empty;
  std::vector<double> x1, x2;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    Configuration cfg = next_candidate(empty, c, derive_seed(c.seed, SeedStream::Proposal, i));
    x1.push_back(numeric_value(cfg.at("x1")));
    x2.push_back(numeric_value(cfg.at("x2")));
  }
  const double crit = oracle::kKsCritical01 / std::sqrt(2000.0);
  EXPECT_LT(oracle::ks_statistic(x1, [](double v) { return (v + 5.0) / 15.0; }), crit);
  EXPECT_LT(oracle::ks_statistic(x2, [](double v) { return v / 15.0; }), crit);
}

TEST(OnMetricReport, StopsExactlyOnce) {
  TuningJobConfig c = branin_job("a", 10, 1);
  c.early_stopping = EarlyStopping::Median;
  TuningJobState state;
  for (int i = 0; i < 4; ++i) {
    TrialRecord t = finished_trial(trial_id_for(i), detail::initial_design_point(c, i), 0.3 + 0.2 * i, c.space);
    t.curve = flat(10, 0.3 + 0.2 * i);
    state.trials.push_back(t);
  }
  JobEvent launch;
  launch.type = EventType::TrialLaunched;
  launch.trial_id = "trial-0005";
  launch.attempt = 1;
  launch.config = detail::initial_design_point(c, 4);
  state.apply(launch, c.space);

  std::vector<JobEvent> recorded;
  auto rec = [&](const JobEvent& e) {
    recorded.push_back(e);
    state.apply(e, c.space);
  };
  EXPECT_FALSE(on_metric_report(state, c, "trial-0005", 1, 0.7, rec));
  auto cmd = on_metric_report(state, c, "trial-0005", 3, 0.8, rec);
  ASSERT_TRUE(cmd);
  EXPECT_EQ(cmd->final_value, 0.7);
  EXPECT_EQ(state.find("trial-0005")->status, TrialStatus::EarlyStopped);
  EXPECT_FALSE(on_metric_report(state, c, "trial-0005", 4, 0.9, rec));
  EXPECT_EQ(std::count_if(recorded.begin(), recorded.end(),
                          [](const JobEvent& e) { return e.type == EventType::TrialStopped; }),
            1);
  EXPECT_THROW(on_metric_report(state, c, "trial-9999", 1, 0.0, rec), Error);
}

TEST(OnMetricReport, OffRecordsOnly) {
  TuningJobConfig c = branin_job("a", 10, 1);
  TuningJobState state;
  for (int i = 0; i < 4; ++i) {
    TrialRecord t = finished_trial(trial_id_for(i), detail::initial_design_point(c, i), 0.0, c.space);
    t.curve = flat(10, 0.0);
    state.trials.push_back(t);
  }
  JobEvent launch;
  launch.type = EventType::TrialLaunched;
  launch.trial_id = "trial-0005";
  launch.attempt = 1;
  launch.config = detail::initial_design_point(c, 4);
  state.apply(launch, c.space);
  EXPECT_FALSE(on_metric_report(state, c, "trial-0005", 5, 100.0));
  EXPECT_EQ(state.find("trial-0005")->curve.points.size(), 1u);
}

TEST(WarmStart, FiltersParentTrialsAgainstTheChildSpace) {
  SearchSpace parent_space({Dimension::continuous("lr", 0.0, 1.0), Dimension::integer("depth", 1, 10)});
  SearchSpace child_space({Dimension::continuous("lr", 1e-4, 1.0, Scaling::Log)});
  ParentLedger p;
  auto cfg = [](double lr, std::int64_t depth) {
    Configuration c;
    c.values.emplace("lr", lr);
    c.values.emplace("depth", depth);
    return c;
  };
  p.trials.push_back(finished_trial("trial-0001", cfg(0.0, 3), 1.0, parent_space));   // log domain excludes 0
  p.trials.push_back(finished_trial("trial-0002", cfg(0.01, 3), 2.0, parent_space));  // kept, depth ignored
  p.trials.push_back(finished_trial("trial-0003", cfg(0.5, 9), 3.0, parent_space));   // kept
  TrialRecord failed = finished_trial("trial-0004", cfg(0.2, 1), 0.0, parent_space);
  failed.status = TrialStatus::Failed;
  p.trials.push_back(failed);

  auto obs = merge_warm_start({p}, child_space, Objective{});
  ASSERT_EQ(obs.size(), 2u);
  EXPECT_EQ(obs[0].value, 2.0);
  EXPECT_TRUE(obs[0].warm_start);
  EXPECT_NEAR(obs[0].encoded[0], 0.5, 1e-12);

  auto maxed = merge_warm_start({p}, child_space, Objective{"objective", Goal::Maximize});
  EXPECT_EQ(maxed[1].value, -3.0);
}

TEST(WarmStart, MissingDimensionOrCategoryDropped) {
  SearchSpace parent_space({Dimension::categorical("opt", {"sgd", "adam", "rmsprop"})});
  SearchSpace child_space({Dimension::categorical("opt", {"sgd", "adam"}), Dimension::integer("n", 1, 4)});
  ParentLedger a, b;
  a.trials.push_back(finished_trial("trial-0001", single("opt", std::string("adam")), 1.0, parent_space));
  SearchSpace full({Dimension::categorical("opt", {"sgd", "adam", "rmsprop"}), Dimension::integer("n", 1, 4)});
  Configuration ok = single("opt", std::string("sgd"));
  ok.values.emplace("n", std::int64_t{2});
  Configuration bad = single("opt", std::string("rmsprop"));
  bad.values.emplace("n", std::int64_t{2});
  b.trials.push_back(finished_trial("trial-0001", ok, 4.0, full));
  b.trials.push_back(finished_trial("trial-0002", bad, 5.0, full));
  auto obs = merge_warm_start({a, b}, child_space, Objective{});
  ASSERT_EQ(obs.size(), 1u);
  EXPECT_EQ(obs[0].value, 4.0);
}

TEST(WarmStart, UnknownParentIsReported) {
  TempDir dir;
  JobStore store(dir.path());
  TuningJobConfig c = branin_job("child", 4, 1);
  c.warm_start_parents = {"ghost"};
  try {
    load_warm_start(store, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParentNotFound);
  }
}

TEST(RunJob, SerialBudgetIsExact) {
  TempDir dir;
  JobStore store(dir.path());
  ProbeExecutor exec;
  std::vector<double> incumbents;
  RunOptions opts;
  opts.on_event = [&](const JobEvent& e, const TuningJobState& s) {
    if (e.type == EventType::TrialCompleted) incumbents.push_back(s.incumbent(Objective{})->value);
  };
  RunResult r = run_job(branin_job("serial", 8, 1), store, exec, opts);
  EXPECT_EQ(exec.peak(), 1);
  EXPECT_EQ(r.state.trials.size(), 8u);
  EXPECT_EQ(r.state.count(TrialStatus::Completed), 8u);
  EXPECT_EQ(store.read_status("serial"), JobStatus::Completed);
  ASSERT_EQ(incumbents.size(), 8u);
  for (std::size_t i = 1; i < incumbents.size(); ++i) EXPECT_LE(incumbents[i], incumbents[i - 1]);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_TRUE(std::filesystem::exists(dir / ("serial/trials/" + trial_id_for(i) + ".json")));
}

TEST(RunJob, ParallelismIsBoundedAndReached) {
  TempDir dir;
  JobStore store(dir.path());
  ProbeExecutor exec;
  exec.delay = std::chrono::milliseconds(60);
  TuningJobConfig c = branin_job("parallel", 8, 4);
  c.strategy = Strategy::Random;
  RunResult r = run_job(c, store, exec);
  EXPECT_EQ(exec.peak(), 4);
  EXPECT_EQ(r.state.terminal_count(), 8u);
}

TEST(RunJob, FailedAttemptIsRetried) {
  TempDir dir;
  JobStore store(dir.path());
  ProbeExecutor exec;
  exec.fail_when = [](const TrialTask& t) { return t.trial_id == "trial-0002" && t.attempt == 1; };
  RunResult r = run_job(branin_job("retry", 4, 1), store, exec);
  EXPECT_EQ(r.state.find("trial-0002")->attempts, 2);
  EXPECT_EQ(r.state.find("trial-0002")->status, TrialStatus::Completed);
  EXPECT_EQ(r.state.trials.size(), 4u);
}

TEST(RunJob, RetriesExhaustedMarksFailed) {
  TempDir dir;
  JobStore store(dir.path());
  ProbeExecutor exec;
  exec.fail_when = [](const TrialTask& t) { return t.trial_id == "trial-0001"; };
  RunResult r = run_job(branin_job("exhaust", 3, 1), store, exec);
  EXPECT_EQ(r.state.find("trial-0001")->attempts, 3);
  EXPECT_EQ(r.state.find("trial-0001")->status, TrialStatus::Failed);
  EXPECT_EQ(r.state.count(TrialStatus::Completed), 2u);
  EXPECT_EQ(store.read_status("exhaust"), JobStatus::Completed);
}

TEST(RunJob, AllTrialsFailingFailsTheJob) {
  TempDir dir;
  JobStore store(dir.path());
  ProbeExecutor exec;
  exec.fail_when = [](const TrialTask&) { return true; };
  TuningJobConfig c = branin_job("doomed", 2, 1);
  c.retry_limit = 0;
  run_job(c, store, exec);
  EXPECT_EQ(store.read_status("doomed"), JobStatus::Failed);
}

TEST(RunJob, SameSeedSameTrajectory) {
  auto trajectory = [] {
    TempDir dir;
    JobStore store(dir.path());
    ProbeExecutor exec;
    RunResult r = run_job(branin_job("det", 7, 1), store, exec);
    std::vector<Configuration> out;
    for (const auto& t : r.state.trials) out.push_back(t.config);
    return out;
  };
  EXPECT_EQ(trajectory(), trajectory());
}

TEST(RunJob, StopRequestEndsTheJobEarly) {
  TempDir dir;
  JobStore store(dir.path());
  ProbeExecutor exec;
  exec.delay = std::chrono::milliseconds(30);
  RunOptions opts;
  opts.stop_poll = std::chrono::milliseconds(5);
  bool requested = false;
  opts.on_event = [&](const JobEvent& e, const TuningJobState&) {
    if (e.type == EventType::TrialCompleted && !requested) {
      requested = true;
      store.write_status("stoppable", JobStatus::Stopping);
    }
  };
  TuningJobConfig c = branin_job("stoppable", 50, 1);
  c.strategy = Strategy::Random;
  RunResult r = run_job(c, store, exec, opts);
  EXPECT_LT(r.state.trials.size(), 5u);
  EXPECT_EQ(store.read_status("stoppable"), JobStatus::Completed);
}

TEST(RunJob, ResumeOfFinishedJobIsANoOp) {
  TempDir dir;
  JobStore store(dir.path());
  ProbeExecutor exec;
  TuningJobConfig c = branin_job("again", 3, 1);
  run_job(c, store, exec);
  RunResult again = run_job(c, store, exec);
  EXPECT_EQ(exec.attempts().size(), 3u);
  EXPECT_EQ(again.state.trials.size(), 3u);
}

TEST(RunJob, WarmStartedChildReadsParent) {
  TempDir dir;
  JobStore store(dir.path());
  ProbeExecutor exec;
  run_job(branin_job("parent", 6, 1), store, exec);
  TuningJobConfig child = branin_job("child", 3, 1);
  child.warm_start_parents = {"parent"};
  RunResult r = run_job(child, store, exec);
  EXPECT_EQ(r.state.warm_start.size(), 6u);
  EXPECT_EQ(r.state.trials.size(), 3u);
}
