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
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pmmh/core.hpp"
#include "pmmh/estimators.hpp"
#include "pmmh/math.hpp"

namespace pmmh {

class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// Binary responses with an M x k covariate matrix.
struct GlmDataset {
  Matrix covariates;
  Vector responses;  // entries 0 or 1

  Eigen::Index m() const { return covariates.rows(); }
  Eigen::Index k() const { return covariates.cols(); }
};

/// Numerically stable log(1 + exp(t)).
inline double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline double logistic(double t) {
  return t > 0.0 ? 1.0 / (1.0 + std::exp(-t))
                 : std::exp(t) / (1.0 + std::exp(t));
}

// ---------------------------------------------------------------------------
// Model-id encoding: covariate inclusion read as a binary string with
// covariate 1 as the most significant bit, so e.g. "1011" (covariates
// 1, 3, 4) is model 11. Valid ids for k covariates are 1 .. 2^k - 1; id 0
// is the excluded empty model.

inline bool glm_includes(int model_id, int k, int covariate) {
  return (model_id >> (k - 1 - covariate)) & 1;  // covariate is 0-based
}

inline int glm_model_size(int model_id, int k) {
  int size = 0;
  for (int j = 0; j < k; ++j) size += glm_includes(model_id, k, j) ? 1 : 0;
  return size;
}

inline std::vector<int> glm_active_columns(int model_id, int k) {
  std::vector<int> cols;
  for (int j = 0; j < k; ++j) {
    if (glm_includes(model_id, k, j)) cols.push_back(j);
  }
  return cols;
}

inline std::string glm_model_label(int model_id, int k) {
  std::string label(k, '0');
  for (int j = 0; j < k; ++j) {
    if (glm_includes(model_id, k, j)) label[j] = '1';
  }
  return label;
}

// ---------------------------------------------------------------------------
// Data generation and persistence.

inline constexpr std::uint64_t kDatasetStream = 0xDA7A;

/// Covariates: Z1..Zk i.i.d. standard normal; column 2 is replaced by
/// 0.9 Z1 + 0.1 Z2 (when k >= 2), so columns 1 and 2 are strongly
/// collinear. Responses: y_i ~ Bernoulli(logistic(x_i . z_star)).
inline GlmDataset generate_glm_dataset(std::uint64_t seed, Eigen::Index m,
                                       Eigen::Index k,
                                       const Vector& z_star) {
  if (z_star.size() != k) {
    throw ContractViolation("generate_glm_dataset: z_star must have length k");
  }
  RngStream rng(seed, kDatasetStream);
  Matrix z(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) z(i, j) = rng.normal();
  }
  GlmDataset data;
  data.covariates = z;
  if (k >= 2) {
    data.covariates.col(1) = 0.9 * z.col(0) + 0.1 * z.col(1);
  }
  data.responses.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double p = logistic(data.covariates.row(i).dot(z_star));
    data.responses[i] = rng.uniform01() < p ? 1.0 : 0.0;
  }
  return data;
}

inline Vector glm_paper_truth() {
  return (Vector(4) << 1.0, 0.5, -2.0, 0.01).finished();
}

inline void write_glm_dataset_csv(const std::string& path,
                                  const GlmDataset& data) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open dataset file for writing: " + path);
  out << "y";
  for (Eigen::Index j = 0; j < data.k(); ++j) out << ",x" << (j + 1);
  out << "\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < data.m(); ++i) {
    out << static_cast<int>(data.responses[i]);
    for (Eigen::Index j = 0; j < data.k(); ++j) {
      out << "," << data.covariates(i, j);
    }
    out << "\n";
  }
}

inline GlmDataset read_glm_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty dataset file: " + path);
  Eigen::Index k = -1;  // from header y,x1,...,xk
  {
    std::stringstream header(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(header, tok, ',')) cols.push_back(tok);
    if (cols.empty() || cols[0] != "y") {
      throw ConfigError("dataset header must start with y: " + path);
    }
    k = static_cast<Eigen::Index>(cols.size()) - 1;
  }
  std::vector<double> ys;
  std::vector<double> xs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(row, tok, ',')) vals.push_back(std::stod(tok));
    if (static_cast<Eigen::Index>(vals.size()) != k + 1) {
      throw ConfigError("dataset row has wrong arity: " + line);
    }
    if (vals[0] != 0.0 && vals[0] != 1.0) {
      throw ConfigError("dataset responses must be 0 or 1");
    }
    ys.push_back(vals[0]);
    xs.insert(xs.end(), vals.begin() + 1, vals.end());
  }
  GlmDataset data;
  const auto m = static_cast<Eigen::Index>(ys.size());
  data.responses = Eigen::Map<Vector>(ys.data(), m);
  data.covariates.resize(m, k);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      data.covariates(i, j) = xs[static_cast<std::size_t>(i * k + j)];
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// Per-model maximum likelihood.

/// Ridge-stabilized Newton-Raphson (iteratively reweighted least squares)
/// for the logistic log-likelihood. Returns the mode and the inverse of
/// the negative Hessian of the penalized log-likelihood at the mode.
inline std::pair<Vector, Matrix> fit_glm_mle(const Matrix& c, const Vector& y,
                                             double ridge, int max_iter,
                                             double tol) {
  const Eigen::Index d = c.cols();
  Vector z = Vector::Zero(d);
  Matrix hess_inv = Matrix::Identity(d, d);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Vector t = c * z;
    Vector p(t.size());
    Vector w(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      p[i] = logistic(t[i]);
      w[i] = p[i] * (1.0 - p[i]);
    }
    const Vector grad = c.transpose() * (y - p) - ridge * z;
    const Matrix hess =
        c.transpose() * w.asDiagonal() * c + ridge * Matrix::Identity(d, d);
    Eigen::LLT<Matrix> llt(hess);
    if (llt.info() != Eigen::Success) {
      throw FitError("fit_glm_mle: Hessian not positive definite");
    }
    hess_inv = llt.solve(Matrix::Identity(d, d));
    if (grad.norm() < tol) return {z, hess_inv};
    z += llt.solve(grad);
  }
  throw FitError("fit_glm_mle: no convergence after " +
                 std::to_string(max_iter) + " iterations");
}

// ---------------------------------------------------------------------------
// The variable-selection posterior.

/// Logit regression posterior over (inclusion vector, included
/// coefficients). The model space is every nonempty inclusion vector; the
/// empty model (id 0) has zero posterior mass. Includes per model: the
/// covariate submatrix, the prior precision, and an MLE-centered Gaussian
/// used to initialize auxiliary chains. Coefficient prior:
/// z ~ N(0, 4M (C'C)^-1) by default (precision C'C / 4M), or the inverted
/// reading N(0, (4M C'C)^-1) when scale_precision is set. Model-size
/// prior: lambda^size / size!.
class GlmTarget {
 public:
  struct Options {
    double lambda = 1.0;
    bool scale_precision = false;  // alternative prior reading
    double ridge = 1e-6;
    int max_fit_iterations = 200;
    double fit_tolerance = 1e-8;
  };

  GlmTarget(GlmDataset dataset, const Options& options)
      : data_(std::move(dataset)), options_(options) {
    if (options_.lambda <= 0.0) {
      throw ContractViolation("GlmTarget: lambda must be positive");
    }
    const int k = static_cast<int>(data_.k());
    const int n_models = (1 << k);
    cache_.resize(n_models);
    for (int id = 1; id < n_models; ++id) {
      ModelCache& entry = cache_[id];
      const auto cols = glm_active_columns(id, k);
      entry.c.resize(data_.m(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) {
        entry.c.col(static_cast<Eigen::Index>(j)) =
            data_.covariates.col(cols[j]);
      }
      const Matrix ctc = entry.c.transpose() * entry.c;
      entry.prior_precision = options_.scale_precision
                                  ? Matrix(4.0 * data_.m() * ctc)
                                  : Matrix(ctc / (4.0 * data_.m()));
      Eigen::LLT<Matrix> llt(entry.prior_precision);
      if (llt.info() != Eigen::Success) {
        throw FitError("GlmTarget: prior precision for model " +
                       glm_model_label(id, k) + " is not positive definite");
      }
      entry.prior_log_det_precision =
          2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
      try {
        auto [mle, hess_inv] =
            fit_glm_mle(entry.c, data_.responses, options_.ridge,
                        options_.max_fit_iterations, options_.fit_tolerance);
        entry.mle = mle;
        entry.init = MvNormal(mle, hess_inv);
      } catch (const FitError& err) {
        throw FitError("model " + glm_model_label(id, k) + ": " + err.what());
      }
    }
  }

  const GlmDataset& dataset() const { return data_; }
  int k() const { return static_cast<int>(data_.k()); }
  int model_count() const { return (1 << k()) - 1; }

  std::vector<int> model_ids() const {
    std::vector<int> ids;
    for (int id = 1; id <= model_count(); ++id) ids.push_back(id);
    return ids;
  }

  Eigen::Index aux_dim(int model_id) const {
    check_model(model_id);
    return glm_model_size(model_id, k());
  }

  double log_likelihood(int model_id, const Vector& z) const {
    const ModelCache& entry = checked_cache(model_id, z);
    const Vector t = entry.c * z;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      ll += data_.responses[i] * t[i] - softplus(t[i]);
    }
    return ll;
  }

  double log_joint(const ParameterPoint& theta, const Vector& z) const {
    check_model(theta.model_id);
    if (theta.model_id == 0) {
      if (z.size() != 0) {
        throw ContractViolation("GlmTarget: empty model takes no coefficients");
      }
      return kNegInf;
    }
    const ModelCache& entry = checked_cache(theta.model_id, z);
    const double size = static_cast<double>(z.size());
    const double log_prior_z = -0.5 * size * kLogTwoPi +
                               0.5 * entry.prior_log_det_precision -
                               0.5 * z.dot(entry.prior_precision * z);
    const double log_prior_model =
        size * std::log(options_.lambda) - std::lgamma(size + 1.0);
    return log_likelihood(theta.model_id, z) + log_prior_z + log_prior_model;
  }

  Vector grad_log_joint(const ParameterPoint& theta, const Vector& z) const {
    check_model(theta.model_id);
    if (theta.model_id == 0) return Vector(0);
    const ModelCache& entry = checked_cache(theta.model_id, z);
    const Vector t = entry.c * z;
    Vector p(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) p[i] = logistic(t[i]);
    return entry.c.transpose() * (data_.responses - p) -
           entry.prior_precision * z;
  }

  const Vector& mle(int model_id) const {
    check_model(model_id);
    if (model_id == 0) throw ContractViolation("GlmTarget: empty model");
    return cache_[static_cast<std::size_t>(model_id)].mle;
  }

  /// MLE-centered Gaussian N(z_hat, H_hat^{-1}) for initializing auxiliary
  /// chains; the empty model gets the zero-dimensional point mass.
  const MvNormal& init_proposal(int model_id) const {
    check_model(model_id);
    return cache_[static_cast<std::size_t>(model_id)].init;
  }

  const Matrix& prior_precision(int model_id) const {
    check_model(model_id);
    if (model_id == 0) throw ContractViolation("GlmTarget: empty model");
    return cache_[static_cast<std::size_t>(model_id)].prior_precision;
  }

 private:
  struct ModelCache {
    Matrix c;
    Matrix prior_precision;
    double prior_log_det_precision = 0.0;
    Vector mle;
    MvNormal init;  // default-constructed = zero-dimensional for model 0
  };

  void check_model(int model_id) const {
    if (model_id < 0 || model_id > model_count()) {
      throw ContractViolation("GlmTarget: model id out of range: " +
                              std::to_string(model_id));
    }
  }
  const ModelCache& checked_cache(int model_id, const Vector& z) const {
    const ModelCache& entry = cache_[static_cast<std::size_t>(model_id)];
    if (z.size() != entry.c.cols()) {
      throw ContractViolation("GlmTarget: coefficient dimension mismatch");
    }
    return entry;
  }

  GlmDataset data_;
  Options options_;
  std::vector<ModelCache> cache_;
};

// ---------------------------------------------------------------------------
// Reversible-jump birth/death proposal over inclusion vectors.

struct RjProposalResult {
  ParameterPoint theta;
  double log_correction = 0.0;
  bool null_move = false;
};

/// Coin-flip birth/death. Birth at a saturated model is a null proposal;
/// death always picks an active covariate, so from a single-covariate
/// model it proposes the empty model, which the kernel then rejects with
/// certainty (the empty model has zero mass).
inline RjProposalResult rj_birth_death_proposal(const ParameterPoint& theta,
                                                int k, RngStream& rng) {
  if (theta.model_id <= 0 || theta.model_id >= (1 << k)) {
    throw ContractViolation("rj_birth_death_proposal: model must be nonempty");
  }
  const int size = glm_model_size(theta.model_id, k);
  const bool birth = rng.uniform01() < 0.5;
  if (birth) {
    if (size == k) return {theta, 0.0, true};
    std::vector<int> inactive;
    for (int j = 0; j < k; ++j) {
      if (!glm_includes(theta.model_id, k, j)) inactive.push_back(j);
    }
    const int j = inactive[rng.uniform_index(inactive.size())];
    ParameterPoint next = theta;
    next.model_id |= 1 << (k - 1 - j);
    const double correction =
        std::log(static_cast<double>(k - size) / (size + 1));
    return {next, correction, false};
  }
  const auto active = glm_active_columns(theta.model_id, k);
  const int j = active[rng.uniform_index(active.size())];
  ParameterPoint next = theta;
  next.model_id &= ~(1 << (k - 1 - j));
  const double correction =
      std::log(static_cast<double>(size) / (k - size + 1));
  return {next, correction, false};
}

/// ThetaProposal view of the birth/death move. log_density covers every
/// pair differing in exactly one inclusion bit; everything else, including
/// the null pair, is unreachable through the density (the kernels
/// short-circuit null proposals before evaluating it).
class RjBirthDeathProposal {
 public:
  explicit RjBirthDeathProposal(int k) : k_(k) {
    if (k <= 0) throw ContractViolation("RjBirthDeathProposal: k must be > 0");
  }

  ParameterPoint sample(const ParameterPoint& theta, RngStream& rng) const {
    return rj_birth_death_proposal(theta, k_, rng).theta;
  }

  double log_density(const ParameterPoint& from,
                     const ParameterPoint& to) const {
    const int diff = from.model_id ^ to.model_id;
    if (diff == 0 || (diff & (diff - 1)) != 0) return kNegInf;
    const int from_size = glm_model_size(from.model_id, k_);
    if ((to.model_id & diff) != 0) {
      return std::log(0.5) - std::log(static_cast<double>(k_ - from_size));
    }
    return std::log(0.5) - std::log(static_cast<double>(from_size));
  }

 private:
  int k_;
};

// ---------------------------------------------------------------------------
// Auxiliary scheme: truncated Langevin over the included coefficients,
// initialized at the per-model MLE Gaussian.

/// Block initializer N(ẑ_θ, spread² Ĥ_θ⁻¹). spread = 1 draws from the
/// cached per-model Laplace fit; spread > 1 widens it, which degrades the
/// one-draw mass estimate and restores the block-size dependence that a
/// near-perfect initializer hides.
struct GlmInitProposal {
  const GlmTarget* target;
  double spread = 1.0;
  Vector sample(const ParameterPoint& theta, RngStream& rng) const {
    const MvNormal& base = target->init_proposal(theta.model_id);
    if (spread == 1.0) return base.sample(rng);
    return base.mean() + spread * (base.sample(rng) - base.mean());
  }
  double log_density(const ParameterPoint& theta, const Vector& z) const {
    const MvNormal& base = target->init_proposal(theta.model_id);
    if (spread == 1.0) return base.log_pdf(z);
    const Vector pulled_back = base.mean() + (z - base.mean()) / spread;
    return base.log_pdf(pulled_back) -
           static_cast<double>(base.dim()) * std::log(spread);
  }
};

struct GlmGrad {
  const GlmTarget* target;
  Vector operator()(const ParameterPoint& theta, const Vector& z) const {
    return target->grad_log_joint(theta, z);
  }
};

using GlmLangevinProposal = LangevinProposal<GlmInitProposal, GlmGrad>;
using GlmScheme = MarkovScheme<GlmTarget, GlmInitProposal, GlmGrad>;

inline GlmScheme make_glm_scheme(const GlmTarget& target, std::size_t n,
                                 double step_variance,
                                 double truncation_radius,
                                 double init_spread = 1.0) {
  GlmLangevinProposal proposal{GlmInitProposal{&target, init_spread},
                               GlmGrad{&target}, step_variance,
                               truncation_radius};
  return GlmScheme(target, proposal, n);
}

}  // namespace pmmh
