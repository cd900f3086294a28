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
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pmmh/core.hpp"
#include "pmmh/math.hpp"

namespace pmmh {

/// Non-fatal estimator condition tied to one term of a block.
struct EstimatorWarning {
  std::size_t term_index = 0;
  std::string what;
};

/// A weighed block value plus any per-term warnings raised while weighing.
struct EstimatorResult {
  double log_gamma = kNegInf;
  std::vector<EstimatorWarning> warnings;
};

// ---------------------------------------------------------------------------
// Truncated isotropic Gaussian helpers shared by the fixed truncated
// proposal and the Langevin transition. Support is the ball
// |z - mean| <= radius_sds * sqrt(var); the density divides out the
// truncated mass, which for an isotropic Gaussian is the chi-square CDF of
// the squared radius in sd units.

inline double truncated_normal_log_mass(Eigen::Index dim, double radius_sds) {
  const double mass = chi_square_cdf(static_cast<int>(dim),
                                     radius_sds * radius_sds);
  if (mass <= 0.0) {
    throw EstimatorError("truncated normal: zero mass inside radius " +
                         std::to_string(radius_sds));
  }
  return std::log(mass);
}

inline double log_truncated_isotropic_normal_pdf(const Vector& z,
                                                 const Vector& mean,
                                                 double var,
                                                 double radius_sds) {
  if (z.size() == 0) return 0.0;
  if ((z - mean).squaredNorm() > radius_sds * radius_sds * var) {
    return kNegInf;
  }
  return log_isotropic_normal_pdf(z, mean, var) -
         truncated_normal_log_mass(z.size(), radius_sds);
}

inline Vector sample_truncated_isotropic_normal(const Vector& mean,
                                                double var, double radius_sds,
                                                RngStream& rng) {
  if (mean.size() == 0) return Vector(0);
  const double sd = std::sqrt(var);
  const double r2 = radius_sds * radius_sds * var;
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    Vector z = mean + sd * rng.normal_vector(mean.size());
    if ((z - mean).squaredNorm() <= r2) return z;
  }
  throw EstimatorError("truncated normal sampler: rejection budget exhausted,"
                       " radius too small");
}

// ---------------------------------------------------------------------------
// Fixed auxiliary proposals.

/// N(mean, sd^2 I), independent of theta.
struct IsotropicGaussianProposal {
  Vector mean;
  double sd = 1.0;

  Vector sample(const ParameterPoint&, RngStream& rng) const {
    return mean + sd * rng.normal_vector(mean.size());
  }
  double log_density(const ParameterPoint&, const Vector& z) const {
    return log_isotropic_normal_pdf(z, mean, sd * sd);
  }
};

/// N(mean, sd^2 I) truncated to |z - mean| <= radius_sds * sd.
struct TruncatedGaussianProposal {
  Vector mean;
  double sd = 1.0;
  double radius_sds = 1.0;

  Vector sample(const ParameterPoint&, RngStream& rng) const {
    return sample_truncated_isotropic_normal(mean, sd * sd, radius_sds, rng);
  }
  double log_density(const ParameterPoint&, const Vector& z) const {
    return log_truncated_isotropic_normal_pdf(z, mean, sd * sd, radius_sds);
  }
};

// ---------------------------------------------------------------------------
// Langevin transition.

/// One-step Langevin proposal truncated to a Mahalanobis ball:
///   to ~ N(from + (step_variance / 2) grad(from), step_variance I)
/// restricted to |to - mean| <= truncation_radius * sqrt(step_variance).
/// The first draw of a block comes from the Init proposal instead.
template <AuxProposal Init, class Grad>
struct LangevinProposal {
  Init init;
  Grad grad_log_joint;  // (theta, z) -> Vector, the conditional score
  double step_variance = 0.1;
  double truncation_radius = 4.0;

  Vector step_mean(const ParameterPoint& theta, const Vector& from) const {
    Vector g = grad_log_joint(theta, from);
    if (!g.allFinite()) {
      throw EstimatorError("langevin: non-finite gradient");
    }
    return from + 0.5 * step_variance * g;
  }

  double log_step_density(const ParameterPoint& theta, const Vector& from,
                          const Vector& to) const {
    if (from.size() == 0) return 0.0;
    return log_truncated_isotropic_normal_pdf(
        to, step_mean(theta, from), step_variance, truncation_radius);
  }

  Vector sample_step(const ParameterPoint& theta, const Vector& from,
                     RngStream& rng) const {
    if (from.size() == 0) return Vector(0);
    return sample_truncated_isotropic_normal(
        step_mean(theta, from), step_variance, truncation_radius, rng);
  }
};

template <AuxProposal Init, class Grad>
LangevinProposal(Init, Grad, double, double) -> LangevinProposal<Init, Grad>;

// ---------------------------------------------------------------------------
// Block samplers. Both return unweighed blocks (log_gamma NaN); weighing is
// a separate step so externally supplied blocks can be weighed the same way.

template <AuxProposal Prop>
AuxBlock sample_aux_iid(const Prop& proposal, const ParameterPoint& theta,
                        std::size_t n, RngStream& rng) {
  AuxBlock block;
  block.draws.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    block.draws.push_back(proposal.sample(theta, rng));
  }
  return block;
}

template <AuxProposal Init, class Grad>
AuxBlock sample_aux_langevin(const LangevinProposal<Init, Grad>& proposal,
                             const ParameterPoint& theta, std::size_t n,
                             RngStream& rng) {
  AuxBlock block;
  block.draws.reserve(n);
  if (n == 0) return block;
  block.draws.push_back(proposal.init.sample(theta, rng));
  for (std::size_t k = 1; k < n; ++k) {
    block.draws.push_back(
        proposal.sample_step(theta, block.draws.back(), rng));
  }
  return block;
}

// ---------------------------------------------------------------------------
// Block weighers.

namespace detail {

inline void require_numerator(double log_joint, std::size_t k) {
  if (std::isnan(log_joint) || log_joint == kPosInf) {
    throw ContractViolation("log_gamma: joint density of draw " +
                            std::to_string(k) + " is NaN or +inf");
  }
}

inline void require_block_shape(const AuxBlock& block, const WeightScheme& ws,
                                Conditioning expected) {
  if (ws.conditioning != expected) {
    throw ContractViolation(std::string("log_gamma: weight scheme is ") +
                            to_string(ws.conditioning) + ", estimator needs " +
                            to_string(expected));
  }
  if (block.n() != ws.n || ws.n == 0) {
    throw ContractViolation("log_gamma: block has " +
                            std::to_string(block.n()) + " draws, scheme has n = " +
                            std::to_string(ws.n));
  }
}

}  // namespace detail

/// Weighs a block of independent draws:
///   log sum_k w_k exp(log_joint(theta, z_k) - log q(theta, z_k)).
/// A zero proposal density under a positive weight breaks absolute
/// continuity and is an error; a zero joint density merely zeroes the term.
template <TargetModel Target, AuxProposal Prop>
EstimatorResult log_gamma_iid(const Target& target, const Prop& proposal,
                              const ParameterPoint& theta,
                              const AuxBlock& block, const WeightScheme& ws) {
  detail::require_block_shape(block, ws, Conditioning::kIid);
  std::vector<double> terms(ws.n);
  for (std::size_t k = 0; k < ws.n; ++k) {
    const double lj = target.log_joint(theta, block.draws[k]);
    detail::require_numerator(lj, k);
    const double lq = proposal.log_density(theta, block.draws[k]);
    if (std::isnan(lq)) {
      throw ContractViolation("log_gamma_iid: proposal density is NaN");
    }
    if (lq == kNegInf) {
      if (ws.weights[k] > 0.0) {
        throw EstimatorError(
            "log_gamma_iid: draw " + std::to_string(k) +
            " has zero proposal density (absolute continuity violated)");
      }
      terms[k] = kNegInf;
      continue;
    }
    terms[k] = lj == kNegInf ? kNegInf : lj - lq;
  }
  return EstimatorResult{log_sum_exp_weighted(terms, ws.weights), {}};
}

/// Weighs a sequentially proposed block: draw 1 against the initializer's
/// density, draw k > 1 against the (truncated) transition density from draw
/// k-1. A draw outside the support of its own transition, which can happen
/// for externally supplied blocks, contributes -inf and raises a warning
/// rather than an error.
template <TargetModel Target, AuxProposal Init, class Grad>
EstimatorResult log_gamma_markov(const Target& target,
                                 const LangevinProposal<Init, Grad>& proposal,
                                 const ParameterPoint& theta,
                                 const AuxBlock& block,
                                 const WeightScheme& ws) {
  detail::require_block_shape(block, ws, Conditioning::kMarkov);
  EstimatorResult result;
  std::vector<double> terms(ws.n);
  for (std::size_t k = 0; k < ws.n; ++k) {
    const double lj = target.log_joint(theta, block.draws[k]);
    detail::require_numerator(lj, k);
    const double lq =
        k == 0 ? proposal.init.log_density(theta, block.draws[0])
               : proposal.log_step_density(theta, block.draws[k - 1],
                                           block.draws[k]);
    if (std::isnan(lq)) {
      throw ContractViolation("log_gamma_markov: proposal density is NaN");
    }
    if (lq == kNegInf) {
      terms[k] = kNegInf;
      result.warnings.push_back(
          {k, k == 0 ? "draw outside the initializer's support"
                     : "draw outside its transition's truncation support"});
      continue;
    }
    terms[k] = lj == kNegInf ? kNegInf : lj - lq;
  }
  result.log_gamma = log_sum_exp_weighted(terms, ws.weights);
  return result;
}

// ---------------------------------------------------------------------------
// Block schemes: one object bundling "how blocks are drawn" with "how they
// are weighed", the unit the kernels consume.

template <class S>
concept BlockScheme = requires(const S s, const ParameterPoint& theta,
                               const AuxBlock& block, RngStream& rng) {
  { s.block_size() } -> std::convertible_to<std::size_t>;
  { s.sample_block(theta, rng) } -> std::same_as<AuxBlock>;
  { s.log_gamma(theta, block) } -> std::same_as<EstimatorResult>;
};

template <TargetModel Target, AuxProposal Prop>
class IidScheme {
 public:
  IidScheme(const Target& target, Prop proposal, WeightScheme ws)
      : target_(&target), proposal_(std::move(proposal)), ws_(std::move(ws)) {
    const auto report = validate_weight_scheme(ws_);
    if (!report.ok || ws_.conditioning != Conditioning::kIid) {
      throw ContractViolation("IidScheme: invalid weight scheme");
    }
  }
  IidScheme(const Target& target, Prop proposal, std::size_t n)
      : IidScheme(target, std::move(proposal),
                  WeightScheme::uniform(n, Conditioning::kIid)) {}

  std::size_t block_size() const { return ws_.n; }
  const Prop& proposal() const { return proposal_; }

  AuxBlock sample_block(const ParameterPoint& theta, RngStream& rng) const {
    return sample_aux_iid(proposal_, theta, ws_.n, rng);
  }
  EstimatorResult log_gamma(const ParameterPoint& theta,
                            const AuxBlock& block) const {
    return log_gamma_iid(*target_, proposal_, theta, block, ws_);
  }

 private:
  const Target* target_;
  Prop proposal_;
  WeightScheme ws_;
};

template <TargetModel Target, AuxProposal Init, class Grad>
class MarkovScheme {
 public:
  MarkovScheme(const Target& target, LangevinProposal<Init, Grad> proposal,
               WeightScheme ws)
      : target_(&target), proposal_(std::move(proposal)), ws_(std::move(ws)) {
    const auto report = validate_weight_scheme(ws_);
    if (!report.ok || ws_.conditioning != Conditioning::kMarkov) {
      throw ContractViolation("MarkovScheme: invalid weight scheme");
    }
  }
  MarkovScheme(const Target& target, LangevinProposal<Init, Grad> proposal,
               std::size_t n)
      : MarkovScheme(target, std::move(proposal),
                     WeightScheme::uniform(n, Conditioning::kMarkov)) {}

  std::size_t block_size() const { return ws_.n; }
  const LangevinProposal<Init, Grad>& proposal() const { return proposal_; }

  AuxBlock sample_block(const ParameterPoint& theta, RngStream& rng) const {
    return sample_aux_langevin(proposal_, theta, ws_.n, rng);
  }
  EstimatorResult log_gamma(const ParameterPoint& theta,
                            const AuxBlock& block) const {
    return log_gamma_markov(*target_, proposal_, theta, block, ws_);
  }

 private:
  const Target* target_;
  LangevinProposal<Init, Grad> proposal_;
  WeightScheme ws_;
};

/// Dispatches between two schemes by model id, for targets whose models
/// need different estimators.
template <BlockScheme A, BlockScheme B>
class TwoModelScheme {
 public:
  TwoModelScheme(int model_a, A scheme_a, int model_b, B scheme_b)
      : model_a_(model_a),
        model_b_(model_b),
        a_(std::move(scheme_a)),
        b_(std::move(scheme_b)) {
    if (a_.block_size() != b_.block_size()) {
      throw ContractViolation("TwoModelScheme: block sizes differ");
    }
  }

  std::size_t block_size() const { return a_.block_size(); }

  AuxBlock sample_block(const ParameterPoint& theta, RngStream& rng) const {
    if (theta.model_id == model_a_) return a_.sample_block(theta, rng);
    if (theta.model_id == model_b_) return b_.sample_block(theta, rng);
    throw ContractViolation("TwoModelScheme: unknown model id " +
                            std::to_string(theta.model_id));
  }
  EstimatorResult log_gamma(const ParameterPoint& theta,
                            const AuxBlock& block) const {
    if (theta.model_id == model_a_) return a_.log_gamma(theta, block);
    if (theta.model_id == model_b_) return b_.log_gamma(theta, block);
    throw ContractViolation("TwoModelScheme: unknown model id " +
                            std::to_string(theta.model_id));
  }

 private:
  int model_a_;
  int model_b_;
  A a_;
  B b_;
};

}  // namespace pmmh
