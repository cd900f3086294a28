// Copyright 2026 The pmmh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pmmh/diagnostics.hpp"
#include "pmmh/harness/config.hpp"
#include "pmmh/harness/io.hpp"
#include "pmmh/kernels.hpp"
#include "pmmh/targets/glm.hpp"
#include "pmmh/targets/toy.hpp"

namespace pmmh {

struct RunSummary {
  std::string experiment;
  std::string kernel;
  std::uint64_t seed = 0;
  std::uint64_t sweeps = 0;
  std::size_t n = 0;
  std::map<int, double> model_probability;
  double acceptance = 0.0;
  std::uint64_t block_draws = 0;
  HoldingTimeStats holding;
  std::uint64_t refresh_attempts = 0;
  std::uint64_t refresh_accepts = 0;
  std::uint64_t rw_attempts = 0;
  std::uint64_t rw_accepts = 0;
  double wall_clock_seconds = 0.0;
  std::string config_fingerprint;
  std::optional<std::uint64_t> burn_in;
  std::map<int, double> burned_model_probability;
  double burned_acceptance = 0.0;
};

/// Every statistic is a pure function of the trace (and the burn-in
/// choice), so a summary can be reproduced from a persisted trace alone.
inline RunSummary summarize(const ChainTrace& trace,
                            const ExperimentConfig& config) {
  RunSummary summary;
  summary.experiment = config.experiment;
  summary.kernel = config.kernel;
  summary.seed = trace.seed;
  summary.sweeps = trace.records.size();
  summary.n = config.kernel == "marginal" ? 0 : config.n;
  summary.model_probability = model_probability_table(trace);
  summary.acceptance = acceptance_rate(trace);
  summary.block_draws = trace.block_draws;
  summary.holding = holding_time_stats(trace);
  summary.refresh_attempts = trace.refresh_attempts;
  summary.refresh_accepts = trace.refresh_accepts;
  summary.rw_attempts = trace.rw_attempts;
  summary.rw_accepts = trace.rw_accepts;
  summary.config_fingerprint = trace.config_fingerprint;
  if (config.burn_in && *config.burn_in > 0) {
    const auto burn = *config.burn_in;
    if (burn >= trace.records.size()) {
      throw ConfigError("burn_in must be smaller than sweeps");
    }
    summary.burn_in = burn;
    summary.burned_model_probability =
        model_probability_table(trace, static_cast<std::size_t>(burn));
    std::size_t accepted = 0;
    for (std::size_t i = static_cast<std::size_t>(burn);
         i < trace.records.size(); ++i) {
      accepted += trace.records[i].accepted ? 1 : 0;
    }
    summary.burned_acceptance =
        static_cast<double>(accepted) /
        static_cast<double>(trace.records.size() - burn);
  }
  return summary;
}

inline void write_summary(const std::string& path, const RunSummary& s) {
  std::vector<std::pair<std::string, std::string>> entries;
  entries.emplace_back("experiment", s.experiment);
  entries.emplace_back("kernel", s.kernel);
  entries.emplace_back("seed", std::to_string(s.seed));
  entries.emplace_back("sweeps", std::to_string(s.sweeps));
  entries.emplace_back("n", std::to_string(s.n));
  entries.emplace_back("acceptance_rate", format_double(s.acceptance));
  entries.emplace_back("block_draws", std::to_string(s.block_draws));
  entries.emplace_back("holding_max", std::to_string(s.holding.max));
  entries.emplace_back("holding_mean", format_double(s.holding.mean));
  entries.emplace_back("holding_q999", std::to_string(s.holding.quantile_999));
  entries.emplace_back("refresh_attempts", std::to_string(s.refresh_attempts));
  entries.emplace_back("refresh_accepts", std::to_string(s.refresh_accepts));
  entries.emplace_back("rw_attempts", std::to_string(s.rw_attempts));
  entries.emplace_back("rw_accepts", std::to_string(s.rw_accepts));
  entries.emplace_back("wall_clock_seconds",
                       format_double(s.wall_clock_seconds));
  entries.emplace_back("config_fingerprint", s.config_fingerprint);
  for (const auto& [id, p] : s.model_probability) {
    entries.emplace_back("model_prob_" + std::to_string(id),
                         format_double(p));
  }
  if (s.burn_in) {
    entries.emplace_back("burn_in", std::to_string(*s.burn_in));
    entries.emplace_back("burned_acceptance_rate",
                         format_double(s.burned_acceptance));
    for (const auto& [id, p] : s.burned_model_probability) {
      entries.emplace_back("burned_model_prob_" + std::to_string(id),
                           format_double(p));
    }
  }
  write_key_value_file(path, "pmmh run summary", entries);
}

inline RunSummary read_summary(const std::string& path) {
  const KeyValueMap kv = read_key_value_file(path);
  RunSummary s;
  s.experiment = kv.at("experiment");
  s.kernel = kv.at("kernel");
  s.seed = std::stoull(kv.at("seed"));
  s.sweeps = std::stoull(kv.at("sweeps"));
  s.n = static_cast<std::size_t>(std::stoull(kv.at("n")));
  s.acceptance = parse_trace_double(kv.at("acceptance_rate"));
  s.block_draws = std::stoull(kv.at("block_draws"));
  s.holding.max = std::stoull(kv.at("holding_max"));
  s.holding.mean = parse_trace_double(kv.at("holding_mean"));
  s.holding.quantile_999 = std::stoull(kv.at("holding_q999"));
  s.refresh_attempts = std::stoull(kv.at("refresh_attempts"));
  s.refresh_accepts = std::stoull(kv.at("refresh_accepts"));
  s.rw_attempts = std::stoull(kv.at("rw_attempts"));
  s.rw_accepts = std::stoull(kv.at("rw_accepts"));
  s.wall_clock_seconds = parse_trace_double(kv.at("wall_clock_seconds"));
  s.config_fingerprint = kv.at("config_fingerprint");
  for (const auto& [key, value] : kv) {
    if (key.rfind("model_prob_", 0) == 0) {
      s.model_probability[std::stoi(key.substr(11))] =
          parse_trace_double(value);
    } else if (key.rfind("burned_model_prob_", 0) == 0) {
      s.burned_model_probability[std::stoi(key.substr(18))] =
          parse_trace_double(value);
    }
  }
  if (kv.count("burn_in")) {
    s.burn_in = std::stoull(kv.at("burn_in"));
    s.burned_acceptance = parse_trace_double(kv.at("burned_acceptance_rate"));
  }
  return s;
}

struct RunResult {
  ChainTrace trace;
  RunSummary summary;
};

namespace detail {

inline GlmDataset resolve_glm_dataset(const ExperimentConfig& config) {
  if (config.dataset_seed) {
    return generate_glm_dataset(*config.dataset_seed, 50, 4,
                                glm_paper_truth());
  }
  return read_glm_dataset_csv(config.dataset_path);
}

inline ChainTrace run_configured_chain(const ExperimentConfig& config) {
  ChainRng rng(config.seed);
  const ParameterPoint init = make_model_point(config.init_model);

  if (config.experiment == "toy") {
    ToyTarget target;
    ToyFlipProposal proposal;
    if (config.kernel == "marginal") {
      return run_marginal_chain(target, proposal, init, config.sweeps, rng);
    }
    ToyLangevinParams params{config.n, config.step_variance,
                             config.truncation_radius, config.init_mean,
                             config.init_sd};
    const auto scheme = make_toy_langevin_scheme(target, params);
    if (config.kernel == "gimh") {
      SweepSchedule schedule{config.refresh_moves, 0, 0.0};
      return run_gimh_chain(target, proposal, scheme, init, config.sweeps,
                            schedule, rng);
    }
    return run_mcwm_chain(target, proposal, scheme, init, config.sweeps, rng);
  }

  const GlmDataset dataset = resolve_glm_dataset(config);
  GlmTarget::Options options;
  options.lambda = config.lambda;
  options.scale_precision = config.scale_precision;
  GlmTarget target(dataset, options);
  if (config.init_model < 1 || config.init_model > target.model_count()) {
    throw ConfigError("glm init_model must be a nonempty inclusion vector id");
  }
  RjBirthDeathProposal proposal(target.k());
  const auto scheme = make_glm_scheme(target, config.n, config.step_variance,
                                      config.truncation_radius,
                                      config.init_spread);
  if (config.kernel == "gimh") {
    SweepSchedule schedule{config.refresh_moves, config.rw_updates,
                           config.rw_step_sd};
    return run_gimh_chain(target, proposal, scheme, init, config.sweeps,
                          schedule, rng);
  }
  return run_mcwm_chain(target, proposal, scheme, init, config.sweeps, rng);
}

}  // namespace detail

/// Runs one configured chain, persists trace.csv and summary.txt under the
/// output directory, and returns both. Deterministic given (seed, config)
/// apart from the recorded wall-clock time.
inline RunResult run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "weight-diagnostic") {
    throw ConfigError("run_experiment: weight-diagnostic configs are run by "
                      "run_weight_diagnostic");
  }
  const auto start = std::chrono::steady_clock::now();
  ChainTrace trace = detail::run_configured_chain(config);
  trace.seed = config.seed;
  trace.config_fingerprint = config.fingerprint;

  RunResult result;
  result.summary = summarize(trace, config);
  result.summary.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  result.trace = std::move(trace);

  ensure_output_dir(config.output_dir);
  write_trace_csv(config.output_dir + "/trace.csv", result.trace);
  write_summary(config.output_dir + "/summary.txt", result.summary);
  return result;
}

// ---------------------------------------------------------------------------
// Weight-tail diagnostic runs (the assumption-decay curves).

struct WeightDiagnosticResult {
  std::vector<WeightTailReport> reports;  // one per requested block size
};

/// One tail report per entry of n_list, each on its own derived seed.
inline WeightDiagnosticResult run_weight_diagnostic(
    const ExperimentConfig& config) {
  if (config.experiment != "weight-diagnostic") {
    throw ConfigError("run_weight_diagnostic: wrong experiment type");
  }
  if (config.theta_model != 1 && config.theta_model != 2) {
    throw ConfigError("theta_model must be 1 or 2");
  }
  ToyTarget target;
  const ParameterPoint theta = make_model_point(config.theta_model);
  WeightDiagnosticResult result;
  for (std::size_t i = 0; i < config.n_list.size(); ++i) {
    ToyLangevinParams params{config.n_list[i], config.step_variance,
                             config.truncation_radius, config.init_mean,
                             config.init_sd};
    const auto scheme = make_toy_langevin_scheme(target, params);
    RngStream rng(derive_seed(config.seed, i), kBlockStream);
    result.reports.push_back(weight_tail_report(
        target, scheme, theta, config.epsilon, config.n_samples, rng));
  }

  ensure_output_dir(config.output_dir);
  std::ofstream out(config.output_dir + "/tail_curve.csv");
  if (!out) throw ConfigError("cannot write tail_curve.csv");
  out << "# pmmh weight-tail diagnostic\n";
  out << "# config_fingerprint = " << config.fingerprint << "\n";
  out << "n,epsilon,estimate,std_error,max_log_gamma\n";
  for (const auto& report : result.reports) {
    out << report.n << "," << format_double(report.epsilon) << ","
        << format_double(report.estimate) << ","
        << format_double(report.std_error) << ","
        << format_double(report.max_log_gamma) << "\n";
  }
  return result;
}

// ---------------------------------------------------------------------------
// Comparison suites (grid runs).

struct ComparisonRow {
  std::size_t n = 0;
  std::uint64_t sweeps = 0;
  RunSummary summary;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;          // sorted by (n, sweeps)
  std::vector<std::vector<double>> tv;      // pairwise TV between model tables
};

/// Runs every grid entry (in parallel up to config.workers), each with a
/// seed derived from the master seed and the entry index, then tabulates
/// acceptance, model probabilities and pairwise TV distances.
inline ComparisonResult run_comparison_suite(const ExperimentConfig& config) {
  if (config.grid_n.empty()) {
    throw ConfigError("run_comparison_suite: config has no grid");
  }
  const std::size_t entries = config.grid_n.size();
  std::vector<ExperimentConfig> configs(entries);
  for (std::size_t i = 0; i < entries; ++i) {
    KeyValueMap kv = config.raw;
    kv.erase("grid_n");
    kv.erase("grid_sweeps");
    kv.erase("workers");
    if (config.grid_n[i] != 1) {
      // Single-coordinate updates only exist for n = 1 runs.
      kv.erase("rw_updates");
      kv.erase("rw_step_sd");
    }
    kv["n"] = std::to_string(config.grid_n[i]);
    kv["sweeps"] = std::to_string(config.grid_sweeps[i]);
    kv["seed"] = std::to_string(derive_seed(config.seed, i));
    kv["output_dir"] =
        config.output_dir + "/run_n" + std::to_string(config.grid_n[i]);
    configs[i] = parse_experiment_config(kv);
  }

  std::vector<RunResult> results(entries);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= entries) return;
      try {
        results[i] = run_experiment(configs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const std::size_t pool = std::min(config.workers, entries);
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();
  }
  if (failure) std::rethrow_exception(failure);

  ComparisonResult comparison;
  for (std::size_t i = 0; i < entries; ++i) {
    comparison.rows.push_back(
        {configs[i].n, configs[i].sweeps, results[i].summary});
  }
  std::sort(comparison.rows.begin(), comparison.rows.end(),
            [](const ComparisonRow& a, const ComparisonRow& b) {
              return a.n != b.n ? a.n < b.n : a.sweeps < b.sweeps;
            });
  comparison.tv.assign(entries, std::vector<double>(entries, 0.0));
  for (std::size_t i = 0; i < entries; ++i) {
    for (std::size_t j = 0; j < entries; ++j) {
      if (i == j) continue;
      // Both tables are empirical; normalize the second as reference.
      const auto& a = comparison.rows[i].summary.model_probability;
      const auto& b = comparison.rows[j].summary.model_probability;
      comparison.tv[i][j] = tv_distance_discrete(a, b);
    }
  }

  ensure_output_dir(config.output_dir);
  std::ofstream out(config.output_dir + "/comparison.csv");
  if (!out) throw ConfigError("cannot write comparison.csv");
  std::set<int> model_ids;
  for (const auto& row : comparison.rows) {
    for (const auto& [id, p] : row.summary.model_probability) {
      model_ids.insert(id);
    }
  }
  out << "# pmmh comparison v1\n";
  out << "# config_fingerprint = " << config.fingerprint << "\n";
  out << "n,sweeps,acceptance_rate,block_draws";
  for (int id : model_ids) out << ",model_prob_" << id;
  out << "\n";
  for (const auto& row : comparison.rows) {
    out << row.n << "," << row.sweeps << ","
        << format_double(row.summary.acceptance) << ","
        << row.summary.block_draws;
    for (int id : model_ids) {
      const auto it = row.summary.model_probability.find(id);
      out << ","
          << format_double(it == row.summary.model_probability.end()
                               ? 0.0
                               : it->second);
    }
    out << "\n";
  }
  out << "# pairwise TV (row n, column n, value)\n";
  for (std::size_t i = 0; i < entries; ++i) {
    for (std::size_t j = i + 1; j < entries; ++j) {
      out << "tv," << comparison.rows[i].n << "," << comparison.rows[j].n
          << "," << format_double(comparison.tv[i][j]) << "\n";
    }
  }
  return comparison;
}

}  // namespace pmmh
