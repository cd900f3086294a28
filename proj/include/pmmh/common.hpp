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
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pmmh {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Thrown when a caller breaks a documented precondition. Indicates a bug in
/// the calling code, never a statistical event.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what)
      : std::logic_error(what) {}
};

/// Thrown by weight estimators on conditions that the weighting scheme
/// cannot represent as a -inf contribution (absolute-continuity breaks,
/// non-finite numerators).
class EstimatorError : public std::runtime_error {
 public:
  explicit EstimatorError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Thrown when a chain cannot be started (e.g. no initial block with
/// positive estimated mass within the retry budget).
class InitializationError : public std::runtime_error {
 public:
  explicit InitializationError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Thrown by the experiment harness on malformed configs or files.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Log-domain values are extended reals: finite or -inf. -inf means
/// "zero mass"; +inf and NaN are never legal values and always indicate a
/// bug upstream.
inline bool is_log_value(double x) { return !std::isnan(x) && x < kPosInf; }

inline void require_log_value(double x, const char* what) {
  if (!is_log_value(x)) {
    throw ContractViolation(std::string(what) +
                            ": expected a finite or -inf log value, got " +
                            std::to_string(x));
  }
}

/// a - b for extended reals where both are finite-or--inf. -inf minus a
/// finite value is -inf; a finite value minus -inf is +inf (certain accept
/// when used as a log ratio); -inf minus -inf has no meaning here and is a
/// contract violation, not NaN.
inline double log_sub_extended(double a, double b, const char* context) {
  require_log_value(a, context);
  require_log_value(b, context);
  if (a == kNegInf && b == kNegInf) {
    throw ContractViolation(std::string(context) +
                            ": -inf minus -inf is undefined");
  }
  if (a == kNegInf) return kNegInf;
  if (b == kNegInf) return kPosInf;
  return a - b;
}

/// |a - b| <= tol * max(1, |a|, |b|), the relative comparison used by the
/// exactness tests. The floor of 1 keeps the test meaningful near zero.
inline bool rel_close(double a, double b, double tol) {
  if (a == b) return true;  // covers equal infinities
  return std::abs(a - b) <=
         tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace pmmh
