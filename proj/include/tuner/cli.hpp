// Copyright 2026 The Tuner Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Needs CLI11 on the include path.
//
//   tuner run <config.json> [--store DIR] [--seed N]
//   tuner list | describe <job> | stop <job> | export <job> [--format csv]
//
// TUNER_STORE, when set, overrides --store.

#ifndef TUNER_CLI_HPP
#define TUNER_CLI_HPP

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tuner/config_json.hpp"
#include "tuner/error.hpp"
#include "tuner/job.hpp"
#include "tuner/jobstore.hpp"
#include "tuner/runner.hpp"
#include "tuner/scheduler.hpp"

namespace tuner::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitJobFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInterrupted = 130;

namespace detail {

inline std::atomic<bool> g_interrupted{false};

extern "C" inline void on_sigint(int) { g_interrupted.store(true); }

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string value_text(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

inline std::filesystem::path store_root(const std::string& flag) {
  if (const char* env = std::getenv("TUNER_STORE"); env && *env) return env;
  return flag;
}

}  // namespace detail

/// Ledger as CSV: trial_id, status, final_value, started, finished, then
/// one column per hyperparameter in space order.
inline std::string export_csv(const TuningJobConfig& config, const TuningJobState& state) {
  std::ostringstream out;
  out << "trial_id,status,final_value,started,finished";
  for (const auto& d : config.space.dimensions()) out << ',' << detail::csv_field(d.name);
  out << '\n';
  for (const auto& t : state.trials) {
    out << t.id << ',' << to_string(t.status) << ',' << (t.final_value ? detail::format_double(*t.final_value) : "")
        << ',' << t.started << ',' << t.finished;
    for (const auto& d : config.space.dimensions()) out << ',' << detail::csv_field(detail::value_text(t.config.at(d.name)));
    out << '\n';
  }
  return out.str();
}

inline void print_incumbent(std::ostream& out, const std::optional<Incumbent>& inc) {
  if (!inc) {
    out << "incumbent: none\n";
    return;
  }
  out << "incumbent: " << inc->trial_id << " value=" << detail::format_double(inc->value)
      << " config=" << config_to_json(inc->config).dump() << '\n';
}

inline int cmd_run(const std::string& config_path, const std::filesystem::path& root, std::optional<std::uint64_t> seed,
                   std::ostream& out, std::ostream& err) {
  TuningJobConfig config;
  try {
    std::ifstream in(config_path);
    if (!in) throw Error(Errc::InvalidConfig, "cannot read " + config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    config = job_config_from_text(ss.str());
    if (seed) config.seed = *seed;
    config.validate();
  } catch (const Error& e) {
    err << config_path << ": " << e.what() << '\n';
    return kExitConfigError;
  }

  JobStore store(root);
  detail::g_interrupted.store(false);
  auto previous = std::signal(SIGINT, detail::on_sigint);
  RunOptions options;
  options.interrupt_requested = [] { return detail::g_interrupted.load(); };
  int code = kExitOk;
  try {
    auto executor = make_executor(store.exists(config.job_id) ? store.read_config(config.job_id).executor
                                                              : config.executor);
    RunResult result = run_job(config, store, *executor, options);
    if (result.interrupted) {
      err << "interrupted; job '" << config.job_id << "' left resumable\n";
      code = kExitInterrupted;
    } else {
      out << "job " << config.job_id << ": " << to_string(result.state.status) << '\n';
      print_incumbent(out, result.state.incumbent(result.config.objective));
      code = result.state.status == JobStatus::Completed ? kExitOk : kExitJobFailed;
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    code = (e.code() == Errc::ParentNotFound || e.code() == Errc::InvalidConfig) ? kExitConfigError : kExitJobFailed;
  }
  std::signal(SIGINT, previous);
  return code;
}

inline int cmd_list(const std::filesystem::path& root, std::ostream& out) {
  for (const auto& job : JobStore(root).list_jobs()) out << job.job_id << '\t' << to_string(job.status) << '\n';
  return kExitOk;
}

inline int cmd_describe(const std::filesystem::path& root, const std::string& job_id, std::ostream& out) {
  JobDescription d = JobStore(root).describe(job_id);
  out << "job: " << d.job_id << '\n'
      << "status: " << to_string(d.status) << '\n'
      << "strategy: " << to_string(d.strategy) << '\n'
      << "trials: " << d.completed << " completed, " << d.early_stopped << " early_stopped, " << d.failed
      << " failed, " << d.in_flight << " in flight, of " << d.max_trials << '\n';
  print_incumbent(out, d.incumbent);
  return kExitOk;
}

/// Terminal jobs are left alone.
inline int cmd_stop(const std::filesystem::path& root, const std::string& job_id, std::ostream& out) {
  JobStore store(root);
  JobStatus status = store.read_status(job_id);
  if (status == JobStatus::Completed || status == JobStatus::Failed) {
    out << "job " << job_id << " already " << to_string(status) << '\n';
    return kExitOk;
  }
  store.write_status(job_id, JobStatus::Stopping);
  out << "job " << job_id << ": stopping\n";
  return kExitOk;
}

inline int cmd_export(const std::filesystem::path& root, const std::string& job_id, const std::string& format,
                      std::ostream& out) {
  if (format != "csv") throw Error(Errc::InvalidConfig, "unsupported export format '" + format + "'");
  LoadedJob job = JobStore(root).load_job(job_id);
  out << export_csv(job.config, job.state);
  return kExitOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bayesian hyperparameter tuning"};
  app.require_subcommand(1);
  std::string store_flag = "tuner-store";
  app.add_option("--store", store_flag, "job store directory (TUNER_STORE overrides)");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "create or resume a job and run it to completion");
  run->add_option("config", config_path, "job config (job.json schema)")->required();
  run->add_option("--store", store_flag, "job store directory");
  run->add_option("--seed", seed, "override the config seed");

  auto* list = app.add_subcommand("list", "list jobs in the store");
  list->add_option("--store", store_flag, "job store directory");

  std::string job_id;
  auto* describe = app.add_subcommand("describe", "summarize a job");
  describe->add_option("job_id", job_id)->required();
  describe->add_option("--store", store_flag, "job store directory");

  auto* stop = app.add_subcommand("stop", "ask a running job to finish its trials and launch no more");
  stop->add_option("job_id", job_id)->required();
  stop->add_option("--store", store_flag, "job store directory");

  std::string format = "csv";
  auto* exp = app.add_subcommand("export", "write the trial ledger");
  exp->add_option("job_id", job_id)->required();
  exp->add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));
  exp->add_option("--store", store_flag, "job store directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << e.what() << '\n';
    return kExitConfigError;
  }

  const auto root = detail::store_root(store_flag);
  try {
    if (*run) return cmd_run(config_path, root, seed, out, err);
    if (*list) return cmd_list(root, out);
    if (*describe) return cmd_describe(root, job_id, out);
    if (*stop) return cmd_stop(root, job_id, out);
    if (*exp) return cmd_export(root, job_id, format, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitJobFailed;
  }
  return kExitConfigError;
}

}  // namespace tuner::cli

#endif  // TUNER_CLI_HPP
