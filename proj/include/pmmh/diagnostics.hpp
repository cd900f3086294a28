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
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "pmmh/core.hpp"
#include "pmmh/estimators.hpp"
#include "pmmh/trace.hpp"

namespace pmmh {

inline void require_nonempty(const ChainTrace& trace, const char* what) {
  if (trace.records.empty()) {
    throw ContractViolation(std::string(what) + ": empty trace");
  }
}

/// k-th entry: fraction of the first k sweeps whose state matches
/// model_id. The running estimate the convergence plots are built from.
inline std::vector<double> running_model_probability(const ChainTrace& trace,
                                                     int model_id) {
  require_nonempty(trace, "running_model_probability");
  std::vector<double> running;
  running.reserve(trace.records.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    hits += trace.records[i].theta.model_id == model_id ? 1 : 0;
    running.push_back(static_cast<double>(hits) / static_cast<double>(i + 1));
  }
  return running;
}

inline double acceptance_rate(const ChainTrace& trace) {
  require_nonempty(trace, "acceptance_rate");
  std::size_t accepted = 0;
  for (const auto& record : trace.records) {
    accepted += record.accepted ? 1 : 0;
  }
  return static_cast<double>(accepted) /
         static_cast<double>(trace.records.size());
}

/// Occupation frequency per model over all sweeps (from sweep 1).
inline std::map<int, double> model_probability_table(const ChainTrace& trace,
                                                     std::size_t burn_in = 0) {
  require_nonempty(trace, "model_probability_table");
  if (burn_in >= trace.records.size()) {
    throw ContractViolation("model_probability_table: burn-in swallows trace");
  }
  std::map<int, double> table;
  for (std::size_t i = burn_in; i < trace.records.size(); ++i) {
    table[trace.records[i].theta.model_id] += 1.0;
  }
  const auto count = static_cast<double>(trace.records.size() - burn_in);
  for (auto& [id, value] : table) value /= count;
  return table;
}

/// Half the L1 distance between two distributions on a discrete support;
/// missing keys read as 0. The reference must be normalized.
inline double tv_distance_discrete(const std::map<int, double>& empirical,
                                   const std::map<int, double>& reference) {
  double total = 0.0;
  for (const auto& [id, p] : reference) total += p;
  if (std::abs(total - 1.0) > 1e-9) {
    throw ContractViolation("tv_distance_discrete: reference not normalized");
  }
  std::set<int> keys;
  for (const auto& [id, p] : empirical) keys.insert(id);
  for (const auto& [id, p] : reference) keys.insert(id);
  double distance = 0.0;
  for (int id : keys) {
    const auto e = empirical.find(id);
    const auto r = reference.find(id);
    distance += std::abs((e == empirical.end() ? 0.0 : e->second) -
                         (r == reference.end() ? 0.0 : r->second));
  }
  return 0.5 * distance;
}

/// Empirical tail behavior of the log weight error
/// lambda = |log_gamma - log_marginal(theta)| over fresh blocks.
struct WeightTailReport {
  double epsilon = 0.0;
  std::size_t n = 0;           // block size
  double estimate = 0.0;       // fraction with lambda > epsilon
  double std_error = 0.0;      // binomial
  double max_log_gamma = kNegInf;
};

/// Samples n_samples fresh blocks at theta and reports the fraction whose
/// log weight error exceeds epsilon. Blocks with zero estimated mass have
/// infinite error and always count. Requires the exact marginal.
template <MarginalTarget Target, BlockScheme Scheme>
WeightTailReport weight_tail_report(const Target& target,
                                    const Scheme& scheme,
                                    const ParameterPoint& theta,
                                    double epsilon, std::size_t n_samples,
                                    RngStream& rng) {
  if (epsilon <= 0.0) {
    throw ContractViolation("weight_tail_report: epsilon must be positive");
  }
  if (n_samples < 100) {
    throw ContractViolation("weight_tail_report: need at least 100 samples");
  }
  const double log_marginal = target.log_marginal(theta);
  require_log_value(log_marginal, "weight_tail_report: marginal");

  WeightTailReport report;
  report.epsilon = epsilon;
  report.n = scheme.block_size();
  std::size_t exceed = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const AuxBlock block = scheme.sample_block(theta, rng);
    const double lg = scheme.log_gamma(theta, block).log_gamma;
    report.max_log_gamma = std::max(report.max_log_gamma, lg);
    const double lambda =
        lg == kNegInf ? kPosInf : std::abs(lg - log_marginal);
    exceed += lambda > epsilon ? 1 : 0;
  }
  const auto count = static_cast<double>(n_samples);
  report.estimate = static_cast<double>(exceed) / count;
  report.std_error =
      std::sqrt(report.estimate * (1.0 - report.estimate) / count);
  return report;
}

/// Lengths of maximal consecutive-rejection runs.
struct HoldingTimeStats {
  std::uint64_t max = 0;
  double mean = 0.0;
  std::uint64_t quantile_999 = 0;  // nearest-rank 0.999 quantile
};

inline HoldingTimeStats holding_time_stats(const ChainTrace& trace) {
  require_nonempty(trace, "holding_time_stats");
  std::vector<std::uint64_t> runs;
  std::uint64_t current = 0;
  for (const auto& record : trace.records) {
    if (record.accepted) {
      if (current > 0) runs.push_back(current);
      current = 0;
    } else {
      ++current;
    }
  }
  if (current > 0) runs.push_back(current);

  HoldingTimeStats stats;
  if (runs.empty()) return stats;
  std::sort(runs.begin(), runs.end());
  stats.max = runs.back();
  double sum = 0.0;
  for (auto r : runs) sum += static_cast<double>(r);
  stats.mean = sum / static_cast<double>(runs.size());
  const auto rank = static_cast<std::size_t>(
      std::ceil(0.999 * static_cast<double>(runs.size())));
  stats.quantile_999 = runs[std::max<std::size_t>(rank, 1) - 1];
  return stats;
}

}  // namespace pmmh
