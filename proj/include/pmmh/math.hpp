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
#include <functional>

#include "pmmh/common.hpp"
#include "pmmh/rng.hpp"

namespace pmmh {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

/// Chi-square CDF with d degrees of freedom in closed form.
///
/// Even d uses the finite Poisson tail sum
///   P(d, x) = 1 - exp(-x/2) sum_{j=0}^{d/2-1} (x/2)^j / j!
/// Odd d = 2m+1 uses
///   P(d, x) = erf(sqrt(x/2)) - exp(-x/2) sum_{j=1}^{m} (x/2)^{j-1/2}
///             / Gamma(j+1/2)
/// Both are exact for integer d; d = 0 degenerates to a point mass at 0.
inline double chi_square_cdf(int d, double x) {
  if (d < 0) throw ContractViolation("chi_square_cdf: negative dof");
  if (std::isnan(x)) throw ContractViolation("chi_square_cdf: NaN argument");
  if (d == 0) return x >= 0.0 ? 1.0 : 0.0;
  if (x <= 0.0) return 0.0;
  const double h = 0.5 * x;
  if (d % 2 == 0) {
    double term = 1.0;  // (x/2)^j / j! at j = 0
    double sum = 1.0;
    for (int j = 1; j < d / 2; ++j) {
      term *= h / j;
      sum += term;
    }
    return 1.0 - std::exp(-h) * sum;
  }
  const int m = (d - 1) / 2;
  // term j = (x/2)^{j-1/2} / Gamma(j+1/2); at j = 1, Gamma(3/2) = sqrt(pi)/2.
  double sum = 0.0;
  double term = std::sqrt(h) / (0.5 * std::sqrt(3.14159265358979323846));
  for (int j = 1; j <= m; ++j) {
    sum += term;
    term *= h / (j + 0.5);
  }
  double cdf = std::erf(std::sqrt(h)) - std::exp(-h) * sum;
  if (cdf < 0.0) cdf = 0.0;
  if (cdf > 1.0) cdf = 1.0;
  return cdf;
}

/// log N(x; mean, sd^2) for a scalar.
inline double log_normal_pdf(double x, double mean, double sd) {
  const double u = (x - mean) / sd;
  return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * u * u;
}

/// log N(z; mean, var * I) for an isotropic Gaussian; dimension 0 gives 0
/// (empty product), the convention used by zero-dimensional models.
inline double log_isotropic_normal_pdf(const Vector& z, const Vector& mean,
                                       double var) {
  if (z.size() != mean.size()) {
    throw ContractViolation("log_isotropic_normal_pdf: dimension mismatch");
  }
  const auto d = z.size();
  if (d == 0) return 0.0;
  return -0.5 * d * (kLogTwoPi + std::log(var)) -
         0.5 * (z - mean).squaredNorm() / var;
}

/// Multivariate normal backed by a Cholesky factor of the covariance.
/// Supports log-density and sampling; throws on non-SPD covariance.
class MvNormal {
 public:
  MvNormal() = default;

  MvNormal(Vector mean, const Matrix& covariance) : mean_(std::move(mean)) {
    if (covariance.rows() != covariance.cols() ||
        covariance.rows() != mean_.size()) {
      throw ContractViolation("MvNormal: shape mismatch");
    }
    if (mean_.size() == 0) return;
    Eigen::LLT<Matrix> llt(covariance);
    if (llt.info() != Eigen::Success) {
      throw ContractViolation("MvNormal: covariance not positive definite");
    }
    chol_ = llt.matrixL();
    log_det_cov_ = 2.0 * chol_.diagonal().array().log().sum();
  }

  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }

  double log_pdf(const Vector& z) const {
    if (z.size() != mean_.size()) {
      throw ContractViolation("MvNormal::log_pdf: dimension mismatch");
    }
    if (mean_.size() == 0) return 0.0;
    const Vector u =
        chol_.triangularView<Eigen::Lower>().solve(z - mean_);
    return -0.5 * mean_.size() * kLogTwoPi - 0.5 * log_det_cov_ -
           0.5 * u.squaredNorm();
  }

  Vector sample(RngStream& rng) const {
    if (mean_.size() == 0) return Vector(0);
    return mean_ + chol_ * rng.normal_vector(mean_.size());
  }

 private:
  Vector mean_{Vector(0)};
  Matrix chol_;
  double log_det_cov_ = 0.0;
};

/// Central finite-difference gradient of f at z with per-coordinate step
/// h * (1 + |z_i|). Used by the gradient checks.
inline Vector finite_difference_gradient(
    const std::function<double(const Vector&)>& f, const Vector& z,
    double h) {
  Vector g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double step = h * (1.0 + std::abs(z[i]));
    Vector zp = z, zm = z;
    zp[i] += step;
    zm[i] -= step;
    g[i] = (f(zp) - f(zm)) / (2.0 * step);
  }
  return g;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson_1d(const std::function<double(double)>& f, double a,
                         double b, int n) {
  if (n < 2 || n % 2 != 0) {
    throw ContractViolation("simpson_1d: panel count must be even and >= 2");
  }
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) {
    sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

/// Tensor-product Simpson rule on [a, b]^2.
inline double simpson_2d(const std::function<double(double, double)>& f,
                         double a, double b, int n) {
  return simpson_1d(
      [&](double x) {
        return simpson_1d([&](double y) { return f(x, y); }, a, b, n);
      },
      a, b, n);
}

}  // namespace pmmh
