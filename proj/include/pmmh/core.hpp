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

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pmmh/common.hpp"
#include "pmmh/rng.hpp"

namespace pmmh {

/// A point in the (possibly transdimensional) parameter space: a discrete
/// model id plus continuous coordinates whose dimension may depend on the
/// model. Targets with a purely discrete parameter leave coords empty.
struct ParameterPoint {
  int model_id = 0;
  Vector coords{Vector(0)};

  friend bool operator==(const ParameterPoint& a, const ParameterPoint& b) {
    return a.model_id == b.model_id && a.coords.size() == b.coords.size() &&
           a.coords == b.coords;
  }
};

inline ParameterPoint make_model_point(int model_id) {
  return ParameterPoint{model_id, Vector(0)};
}

/// A block of auxiliary draws together with the estimated log marginal mass
/// computed from it. log_gamma is NaN until an estimator weighs the block;
/// a weighed block may carry -inf (zero estimated mass) but never NaN.
struct AuxBlock {
  std::vector<Vector> draws;
  double log_gamma = kNaN;

  std::size_t n() const { return draws.size(); }
  bool weighed() const { return !std::isnan(log_gamma); }
};

/// How the proposal density of each draw in a block is conditioned.
enum class Conditioning {
  kIid,     // every draw from the same fixed proposal
  kMarkov,  // draw k conditions on draw k-1 (draw 1 on an initializer)
  kCustom,  // caller-supplied conditioning-index sets, interface only
};

inline const char* to_string(Conditioning c) {
  switch (c) {
    case Conditioning::kIid: return "iid";
    case Conditioning::kMarkov: return "markov";
    case Conditioning::kCustom: return "custom";
  }
  return "?";
}

/// Mixture weights over the draws of a block plus the conditioning
/// structure under which their proposal densities are evaluated.
/// For kCustom, conditioning_indices[k] lists the draws that draw k's
/// proposal density conditions on (strictly earlier indices).
struct WeightScheme {
  std::size_t n = 0;
  std::vector<double> weights;
  Conditioning conditioning = Conditioning::kIid;
  std::vector<std::vector<std::size_t>> conditioning_indices;

  static WeightScheme uniform(std::size_t n, Conditioning c) {
    WeightScheme s;
    s.n = n;
    s.weights.assign(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
    s.conditioning = c;
    return s;
  }
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;

  void fail(std::string what) {
    ok = false;
    violations.push_back(std::move(what));
  }
};

/// Checks the structural invariants of a weight scheme: n >= 1, weights of
/// length n, nonnegative, summing to 1 within 1e-12, and for kCustom a
/// conditioning-index list of the right shape referencing only strictly
/// earlier draws. Reports every violation rather than stopping at the
/// first.
inline ValidationReport validate_weight_scheme(const WeightScheme& s) {
  ValidationReport report;
  if (s.n == 0) report.fail("n must be >= 1");
  if (s.weights.size() != s.n) {
    report.fail("weights must have length n = " + std::to_string(s.n) +
                ", got " + std::to_string(s.weights.size()));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < s.weights.size(); ++k) {
    const double w = s.weights[k];
    if (std::isnan(w) || w < 0.0) {
      report.fail("weight " + std::to_string(k) + " is negative or NaN");
    } else {
      sum += w;
    }
  }
  if (!s.weights.empty() && std::abs(sum - 1.0) > 1e-12) {
    report.fail("weights sum to " + std::to_string(sum) + ", expected 1");
  }
  if (s.conditioning == Conditioning::kCustom) {
    if (s.conditioning_indices.size() != s.n) {
      report.fail("custom conditioning needs one index set per draw");
    } else {
      for (std::size_t k = 0; k < s.n; ++k) {
        for (std::size_t j : s.conditioning_indices[k]) {
          if (j >= k) {
            report.fail("draw " + std::to_string(k) +
                        " conditions on non-earlier draw " +
                        std::to_string(j));
          }
        }
      }
    }
  } else if (!s.conditioning_indices.empty()) {
    report.fail("conditioning_indices only valid with custom conditioning");
  }
  return report;
}

/// log sum_k w_k exp(t_k), max-shifted for stability.
///
/// Conventions: a pair with w_k = 0 contributes nothing regardless of t_k;
/// a pair with t_k = -inf contributes nothing; the result is -inf exactly
/// when no pair contributes. NaN or +inf terms, NaN or negative weights are
/// contract violations.
inline double log_sum_exp_weighted(std::span<const double> log_terms,
                                   std::span<const double> weights) {
  if (log_terms.size() != weights.size()) {
    throw ContractViolation("log_sum_exp_weighted: length mismatch");
  }
  double max_term = kNegInf;
  for (std::size_t k = 0; k < log_terms.size(); ++k) {
    const double t = log_terms[k];
    const double w = weights[k];
    if (std::isnan(t) || t == kPosInf) {
      throw ContractViolation("log_sum_exp_weighted: term " +
                              std::to_string(k) + " is NaN or +inf");
    }
    if (std::isnan(w) || w < 0.0) {
      throw ContractViolation("log_sum_exp_weighted: weight " +
                              std::to_string(k) + " is negative or NaN");
    }
    if (w > 0.0 && t > max_term) max_term = t;
  }
  if (max_term == kNegInf) return kNegInf;
  double sum = 0.0;
  for (std::size_t k = 0; k < log_terms.size(); ++k) {
    if (weights[k] > 0.0 && log_terms[k] > kNegInf) {
      sum += weights[k] * std::exp(log_terms[k] - max_term);
    }
  }
  return max_term + std::log(sum);
}

/// A target with a model-indexed joint density over (theta, z). log_joint
/// returns the log of the unnormalized joint, -inf allowed for zero mass;
/// aux_dim gives the auxiliary dimension of a model.
template <class T>
concept TargetModel = requires(const T t, const ParameterPoint& theta,
                               const Vector& z, int model_id) {
  { t.log_joint(theta, z) } -> std::convertible_to<double>;
  { t.aux_dim(model_id) } -> std::convertible_to<Eigen::Index>;
};

/// A target that can also evaluate its unnormalized theta-marginal exactly.
template <class T>
concept MarginalTarget =
    TargetModel<T> && requires(const T t, const ParameterPoint& theta) {
      { t.log_marginal(theta) } -> std::convertible_to<double>;
    };

/// Proposal over parameter points: sample a candidate given the current
/// point, and evaluate the log proposal density of a candidate given a
/// point (-inf for unreachable candidates).
template <class P>
concept ThetaProposal = requires(const P p, const ParameterPoint& theta,
                                 RngStream& rng) {
  { p.sample(theta, rng) } -> std::same_as<ParameterPoint>;
  { p.log_density(theta, theta) } -> std::convertible_to<double>;
};

/// Fixed (per-theta) proposal for individual auxiliary draws.
template <class P>
concept AuxProposal = requires(const P p, const ParameterPoint& theta,
                               const Vector& z, RngStream& rng) {
  { p.sample(theta, rng) } -> std::same_as<Vector>;
  { p.log_density(theta, z) } -> std::convertible_to<double>;
};

}  // namespace pmmh
