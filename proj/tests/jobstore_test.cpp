// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "temp_dir.hpp"
#include "tuner/jobstore.hpp"

using namespace tuner;

namespace {

TuningJobConfig small_config(const std::string& id = "demo") {
  TuningJobConfig c;
  c.job_id = id;
  c.space = SearchSpace({Dimension::continuous("x1", -5, 10), Dimension::continuous("x2", 0, 15)});
  c.max_trials = 5;
  c.max_parallel = 2;
  c.seed = 11;
  return c;
}

Configuration point(double a, double b) {
  Configuration c;
  c.values.emplace("x1", a);
  c.values.emplace("x2", b);
  return c;
}

JobEvent launched(const std::string& id, Configuration cfg, int attempt = 1) {
  JobEvent e;
  e.type = EventType::TrialLaunched;
  e.timestamp = utc_timestamp();
  e.trial_id = id;
  e.attempt = attempt;
  e.config = std::move(cfg);
  return e;
}

JobEvent completed(const std::string& id, double v) {
  JobEvent e;
  e.type = EventType::TrialCompleted;
  e.timestamp = utc_timestamp();
  e.trial_id = id;
  e.final_value = v;
  return e;
}

JobEvent metric(const std::string& id, std::int64_t r, double v) {
  JobEvent e;
  e.type = EventType::MetricReported;
  e.trial_id = id;
  e.iteration = r;
  e.value = v;
  return e;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::IoError;
}

}  // namespace

TEST(JobConfigJson, RoundTripsThroughText) {
  TuningJobConfig c = small_config();
  c.space = SearchSpace({Dimension::continuous("lr", 1e-5, 1e-1, Scaling::Log), Dimension::integer("layers", 1, 8),
                         Dimension::categorical("opt", {"sgd", "adam"})});
  c.early_stopping = EarlyStopping::Median;
  c.objective = {"val_loss", Goal::Maximize};
  c.executor.kind = ExecutorKind::External;
  c.executor.external.command = {"python3", "train.py", "{hparams_file}"};
  TuningJobConfig back = job_config_from_text(job_config_to_json(c).dump());
  EXPECT_EQ(back.space, c.space);
  EXPECT_EQ(back.early_stopping, EarlyStopping::Median);
  EXPECT_EQ(back.objective.goal, Goal::Maximize);
  EXPECT_EQ(back.executor.external.command, c.executor.external.command);
  EXPECT_EQ(back.seed, 11u);
}

TEST(JobConfigJson, RejectsBadInput) {
  EXPECT_EQ(code_of([] { job_config_from_text("{ \"job_id\": "); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([] { job_config_from_text(R"({"job_id":"a","space":[],"max_trials":1})"); }), Errc::InvalidConfig);
  EXPECT_EQ(code_of([] {
              job_config_from_text(
                  R"({"job_id":"a","space":[{"name":"x","type":"continuous","min":0,"max":1}],"max_trials":1,"bogus":1})");
            }),
            Errc::InvalidConfig);
  EXPECT_EQ(code_of([] {
              job_config_from_text(
                  R"({"job_id":"a","space":[{"name":"x","type":"continuous","min":1,"max":1}],"max_trials":1})");
            }),
            Errc::InvalidBounds);
  EXPECT_EQ(code_of([] {
              job_config_from_text(
                  R"({"job_id":"a","space":[{"name":"x","type":"continuous","min":0,"max":1,"condition":{"y":"a"}}],"max_trials":1})");
            }),
            Errc::ConditionalUnsupported);
  EXPECT_EQ(code_of([] {
              job_config_from_text(
                  R"({"job_id":"a","space":[{"name":"x","type":"continuous","min":0,"max":1}],"max_trials":2,"max_parallel":3})");
            }),
            Errc::InvalidConfig);
}

TEST(JobStore, CreateThenReadBack) {
  TempDir dir;
  JobStore store(dir.path());
  store.create_job(small_config());
  EXPECT_TRUE(store.exists("demo"));
  EXPECT_EQ(store.read_status("demo"), JobStatus::Created);
  EXPECT_EQ(store.read_config("demo").space, small_config().space);
  EXPECT_TRUE(std::filesystem::is_directory(dir / "demo/trials"));
  EXPECT_EQ(code_of([&] { store.create_job(small_config()); }), Errc::AlreadyExists);
}

TEST(JobStore, ValidatesBeforeCreatingAnything) {
  TempDir dir;
  JobStore store(dir / "root");
  TuningJobConfig bad = small_config("Bad_ID");
  EXPECT_EQ(code_of([&] { store.create_job(bad); }), Errc::InvalidConfig);
  EXPECT_FALSE(std::filesystem::exists(dir / "root"));
}

TEST(JobStore, ReplayRebuildsState) {
  TempDir dir;
  JobStore store(dir.path());
  store.create_job(small_config());
  TuningJobState live;
  auto add = [&](const JobEvent& e) {
    store.append_event("demo", e);
    live.apply(e, small_config().space);
  };
  add(launched("trial-0001", point(1.5, 2.25)));
  add(metric("trial-0001", 1, 3.0));
  add(completed("trial-0001", 0.1 + 0.2));
  EXPECT_EQ(std::count(std::istreambuf_iterator<char>(std::ifstream(dir / "demo/events.log").rdbuf()), {}, '\n'), 3);

  LoadedJob loaded = store.load_job("demo");
  ASSERT_EQ(loaded.state.trials.size(), 1u);
  const TrialRecord& t = loaded.state.trials[0];
  EXPECT_EQ(t.status, TrialStatus::Completed);
  EXPECT_EQ(*t.final_value, 0.1 + 0.2);
  EXPECT_EQ(t.curve, live.trials[0].curve);
  EXPECT_EQ(t.config, live.trials[0].config);
  EXPECT_TRUE(loaded.recovery_events.empty());
  EXPECT_TRUE(loaded.warnings.empty());
}

TEST(JobStore, TornFinalLineIsDiscarded) {
  TempDir dir;
  JobStore store(dir.path());
  store.create_job(small_config());
  store.append_event("demo", launched("trial-0001", point(1, 1)));
  store.append_event("demo", completed("trial-0001", 4.0));
  {
    std::ofstream out(dir / "demo/events.log", std::ios::app);
    out << R"({"type":"trial_launched","trial_id":"trial-00)";
  }
  LoadedJob loaded = store.load_job("demo");
  EXPECT_EQ(loaded.state.trials.size(), 1u);
  EXPECT_EQ(loaded.warnings.size(), 1u);
}

TEST(JobStore, CorruptMiddleLineIsAnError) {
  TempDir dir;
  JobStore store(dir.path());
  store.create_job(small_config());
  {
    std::ofstream out(dir / "demo/events.log", std::ios::app);
    out << "garbage\n";
  }
  store.append_event("demo", launched("trial-0001", point(1, 1)));
  EXPECT_EQ(code_of([&] { store.load_job("demo"); }), Errc::CorruptStore);
}

TEST(JobStore, RunningTrialsRecoverAsFailedAttempts) {
  TempDir dir;
  JobStore store(dir.path());
  store.create_job(small_config());
  store.append_event("demo", launched("trial-0001", point(1, 1)));
  store.append_event("demo", launched("trial-0002", point(2, 2), 3));
  LoadedJob loaded = store.load_job("demo");
  ASSERT_EQ(loaded.recovery_events.size(), 2u);
  EXPECT_TRUE(loaded.recovery_events[0].will_retry);
  EXPECT_FALSE(loaded.recovery_events[1].will_retry);
  EXPECT_EQ(loaded.state.find("trial-0001")->status, TrialStatus::Pending);
  EXPECT_EQ(loaded.state.find("trial-0002")->status, TrialStatus::Failed);
}

TEST(JobStore, MissingJobIsNotFound) {
  TempDir dir;
  JobStore store(dir.path());
  EXPECT_EQ(code_of([&] { store.load_job("ghost"); }), Errc::NotFound);
  EXPECT_EQ(code_of([&] { store.append_event("ghost", completed("t", 1)); }), Errc::NotFound);
  EXPECT_TRUE(JobStore(dir / "absent").list_jobs().empty());
}

TEST(JobStore, ListAndDescribe) {
  TempDir dir;
  JobStore store(dir.path());
  store.create_job(small_config("zeta"));
  store.create_job(small_config("alpha"));
  store.write_status("zeta", JobStatus::Completed);
  auto jobs = store.list_jobs();
  ASSERT_EQ(jobs.size(), 2u);
  EXPECT_EQ(jobs[0].job_id, "alpha");
  EXPECT_EQ(jobs[1].status, JobStatus::Completed);

  store.append_event("alpha", launched("trial-0001", point(1, 1)));
  store.append_event("alpha", completed("trial-0001", 2.0));
  store.append_event("alpha", launched("trial-0002", point(2, 1)));
  store.append_event("alpha", completed("trial-0002", -1.0));
  JobDescription d = store.describe("alpha");
  EXPECT_EQ(d.completed, 2u);
  EXPECT_EQ(d.max_trials, 5u);
  ASSERT_TRUE(d.incumbent);
  EXPECT_EQ(d.incumbent->trial_id, "trial-0002");
  EXPECT_EQ(d.incumbent->value, -1.0);
}

TEST(JobStore, TrialSnapshotIsWrittenAtomically) {
  TempDir dir;
  JobStore store(dir.path());
  store.create_job(small_config());
  TrialRecord t;
  t.id = "trial-0001";
  t.config = point(1, 2);
  t.status = TrialStatus::Completed;
  t.final_value = 0.5;
  store.write_trial("demo", t);
  auto j = nlohmann::json::parse(detail::read_file(dir / "demo/trials/trial-0001.json"));
  EXPECT_EQ(j["status"], "completed");
  EXPECT_EQ(j["final_value"], 0.5);
  for (const auto& e : std::filesystem::directory_iterator(dir / "demo/trials"))
    EXPECT_EQ(e.path().extension(), ".json");
}
