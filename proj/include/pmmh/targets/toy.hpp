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

#include "pmmh/core.hpp"
#include "pmmh/estimators.hpp"
#include "pmmh/math.hpp"

namespace pmmh {

/// Two-model mixture with a discrete model index and model-dependent
/// auxiliary dimension:
///   model 1 (weight 1/4): z in R^1, standard normal
///   model 2 (weight 3/4): z in R^2, zero-mean normal,
///                         covariance [[1, -0.9], [-0.9, 1]]
/// Both component densities are normalized, so log_marginal is exact and
/// the target doubles as the reference for exactness and bias tests.
class ToyTarget {
 public:
  ToyTarget() {
    // det = 1 - 0.81 = 0.19; inverse = [[1, 0.9], [0.9, 1]] / 0.19.
    sigma_inverse_ << 1.0 / 0.19, 0.9 / 0.19, 0.9 / 0.19, 1.0 / 0.19;
    log_det_sigma_ = std::log(0.19);
  }

  static constexpr int kModelOne = 1;
  static constexpr int kModelTwo = 2;

  Eigen::Index aux_dim(int model_id) const {
    check_model(model_id);
    return model_id == kModelOne ? 1 : 2;
  }

  double log_marginal(const ParameterPoint& theta) const {
    check_model(theta.model_id);
    return theta.model_id == kModelOne ? std::log(0.25) : std::log(0.75);
  }

  double log_conditional(const ParameterPoint& theta, const Vector& z) const {
    check_dims(theta, z);
    if (theta.model_id == kModelOne) {
      return -0.5 * kLogTwoPi - 0.5 * z[0] * z[0];
    }
    return -kLogTwoPi - 0.5 * log_det_sigma_ -
           0.5 * z.dot(sigma_inverse_ * z);
  }

  double log_joint(const ParameterPoint& theta, const Vector& z) const {
    return log_marginal(theta) + log_conditional(theta, z);
  }

  Vector grad_log_conditional(const ParameterPoint& theta,
                              const Vector& z) const {
    check_dims(theta, z);
    if (theta.model_id == kModelOne) return -z;
    return -(sigma_inverse_ * z);
  }

 private:
  void check_model(int model_id) const {
    if (model_id != kModelOne && model_id != kModelTwo) {
      throw ContractViolation("ToyTarget: model id must be 1 or 2");
    }
  }
  void check_dims(const ParameterPoint& theta, const Vector& z) const {
    if (z.size() != aux_dim(theta.model_id)) {
      throw ContractViolation("ToyTarget: auxiliary dimension mismatch");
    }
  }

  Eigen::Matrix2d sigma_inverse_;
  double log_det_sigma_ = 0.0;
};

/// Deterministic swap between the two models; symmetric, never null.
struct ToyFlipProposal {
  ParameterPoint sample(const ParameterPoint& theta, RngStream&) const {
    return make_model_point(theta.model_id == ToyTarget::kModelOne
                                ? ToyTarget::kModelTwo
                                : ToyTarget::kModelOne);
  }
  double log_density(const ParameterPoint& from,
                     const ParameterPoint& to) const {
    return to.model_id != from.model_id ? 0.0 : kNegInf;
  }
};

/// Conditional score of the toy target, usable as a Langevin drift.
struct ToyGrad {
  const ToyTarget* target;
  Vector operator()(const ParameterPoint& theta, const Vector& z) const {
    return target->grad_log_conditional(theta, z);
  }
};

struct ToyLangevinParams {
  std::size_t n = 1;
  double step_variance = 0.2;
  double truncation_radius = 8.0;
  Vector init_mean = (Vector(2) << 3.0, 3.0).finished();
  double init_sd = 1.0;
};

using ToyModelOneScheme = IidScheme<ToyTarget, IsotropicGaussianProposal>;
using ToyLangevinProposal =
    LangevinProposal<IsotropicGaussianProposal, ToyGrad>;
using ToyModelTwoLangevinScheme =
    MarkovScheme<ToyTarget, IsotropicGaussianProposal, ToyGrad>;
using ToyLangevinScheme =
    TwoModelScheme<ToyModelOneScheme, ToyModelTwoLangevinScheme>;

/// Model 1 uses its exact conditional as the proposal (every importance
/// ratio equals the model weight); model 2 runs the truncated Langevin
/// chain started from an offset Gaussian initializer.
inline ToyLangevinScheme make_toy_langevin_scheme(
    const ToyTarget& target, const ToyLangevinParams& params) {
  IsotropicGaussianProposal exact_conditional{Vector::Zero(1), 1.0};
  IsotropicGaussianProposal init{params.init_mean, params.init_sd};
  ToyLangevinProposal langevin{init, ToyGrad{&target}, params.step_variance,
                               params.truncation_radius};
  return ToyLangevinScheme(
      ToyTarget::kModelOne,
      ToyModelOneScheme(target, exact_conditional, params.n),
      ToyTarget::kModelTwo,
      ToyModelTwoLangevinScheme(target, langevin, params.n));
}

/// Variant with an i.i.d. model-2 proposal instead of the Langevin chain;
/// the q2 tail behavior controls whether the importance weights are
/// bounded, which is what the holding-time comparison exercises.
template <AuxProposal Q2>
TwoModelScheme<ToyModelOneScheme, IidScheme<ToyTarget, Q2>>
make_toy_iid_scheme(const ToyTarget& target, std::size_t n, Q2 q2) {
  IsotropicGaussianProposal exact_conditional{Vector::Zero(1), 1.0};
  return TwoModelScheme<ToyModelOneScheme, IidScheme<ToyTarget, Q2>>(
      ToyTarget::kModelOne,
      ToyModelOneScheme(target, exact_conditional, n),
      ToyTarget::kModelTwo, IidScheme<ToyTarget, Q2>(target, std::move(q2), n));
}

}  // namespace pmmh
