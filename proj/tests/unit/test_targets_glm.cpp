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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "pmmh/math.hpp"
#include "pmmh/rng.hpp"
#include "pmmh/targets/glm.hpp"

namespace pmmh {
namespace {

GlmDataset pinned_dataset() {
  return generate_glm_dataset(17, 50, 4, glm_paper_truth());
}

GlmTarget pinned_target() {
  return GlmTarget(pinned_dataset(), GlmTarget::Options{});
}

Matrix submatrix(const GlmDataset& data, int model_id) {
  const auto cols = glm_active_columns(model_id, static_cast<int>(data.k()));
  Matrix c(data.m(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    c.col(static_cast<Eigen::Index>(j)) = data.covariates.col(cols[j]);
  }
  return c;
}

TEST_CASE("glm model id helpers read inclusion bits") {
  CHECK(glm_model_label(11, 4) == "1011");
  CHECK(glm_model_size(11, 4) == 3);
  CHECK(glm_active_columns(11, 4) == std::vector<int>{0, 2, 3});
  CHECK(glm_model_label(8, 4) == "1000");
  CHECK(glm_active_columns(8, 4) == std::vector<int>{0});
  CHECK(glm_model_label(15, 4) == "1111");
  CHECK(glm_model_size(15, 4) == 4);
  CHECK(glm_model_size(0, 4) == 0);
  CHECK(glm_includes(8, 4, 0));
  CHECK_FALSE(glm_includes(8, 4, 1));
}

TEST_CASE("glm dataset generation is reproducible and collinear") {
  const GlmDataset data = pinned_dataset();
  REQUIRE(data.m() == 50);
  REQUIRE(data.k() == 4);
  for (Eigen::Index i = 0; i < data.m(); ++i) {
    CHECK((data.responses[i] == 0.0 || data.responses[i] == 1.0));
  }

  // Column 2 is 0.9 Z1 + 0.1 Z2, so corr(C1, C2) = 0.9 / sqrt(0.82).
  const Vector c1 = data.covariates.col(0);
  const Vector c2 = data.covariates.col(1);
  const double m1 = c1.mean();
  const double m2 = c2.mean();
  const Vector d1 = c1.array() - m1;
  const Vector d2 = c2.array() - m2;
  const double corr = d1.dot(d2) / std::sqrt(d1.squaredNorm() * d2.squaredNorm());
  CHECK(corr > 0.97);
  CHECK(corr == Catch::Approx(0.99388373467361901).margin(0.03));

  const GlmDataset again = pinned_dataset();
  CHECK(again.covariates == data.covariates);
  CHECK(again.responses == data.responses);
  const GlmDataset other = generate_glm_dataset(18, 50, 4, glm_paper_truth());
  CHECK_FALSE(other.covariates == data.covariates);

  CHECK_THROWS_AS(generate_glm_dataset(17, 50, 4, Vector::Zero(3)),
                  ContractViolation);
}

TEST_CASE("glm dataset csv round trip is exact") {
  const GlmDataset data = pinned_dataset();
  const std::string path = "glm_roundtrip_test.csv";
  write_glm_dataset_csv(path, data);
  const GlmDataset back = read_glm_dataset_csv(path);
  REQUIRE(back.m() == data.m());
  REQUIRE(back.k() == data.k());
  CHECK(back.responses == data.responses);
  CHECK(back.covariates == data.covariates);
  std::remove(path.c_str());
}

TEST_CASE("glm dataset csv rejects malformed files") {
  const std::string path = "glm_bad_test.csv";
  {
    std::ofstream out(path);
    out << "x1,y\n1.0,0\n";
  }
  CHECK_THROWS_AS(read_glm_dataset_csv(path), ConfigError);
  {
    std::ofstream out(path);
    out << "y,x1,x2\n1,0.5\n";
  }
  CHECK_THROWS_AS(read_glm_dataset_csv(path), ConfigError);
  {
    std::ofstream out(path);
    out << "y,x1,x2\n2,0.5,0.1\n";
  }
  CHECK_THROWS_AS(read_glm_dataset_csv(path), ConfigError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_glm_dataset_csv("no_such_file_here.csv"), ConfigError);
}

TEST_CASE("glm mle satisfies the first order condition for every model") {
  const GlmDataset data = pinned_dataset();
  const double ridge = 1e-6;
  for (int id = 1; id <= 15; ++id) {
    const Matrix c = submatrix(data, id);
    const auto [mode, hess_inv] =
        fit_glm_mle(c, data.responses, ridge, 200, 1e-8);
    REQUIRE(mode.size() == c.cols());
    const Vector t = c * mode;
    Vector p(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) p[i] = logistic(t[i]);
    const Vector grad = c.transpose() * (data.responses - p) - ridge * mode;
    INFO("model " << glm_model_label(id, 4));
    CHECK(grad.norm() < 1e-6);
    // The returned curvature is symmetric positive definite.
    CHECK((hess_inv - hess_inv.transpose()).norm() < 1e-10);
    Eigen::LLT<Matrix> llt(hess_inv);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("glm target joint matches an independently assembled density") {
  const GlmDataset data = pinned_dataset();
  const double lambda = 1.0;
  const GlmTarget target(data, GlmTarget::Options{});
  RngStream rng(4201, 0);
  for (int id : {1, 5, 8, 11, 15}) {
    const int size = glm_model_size(id, 4);
    Vector z(size);
    for (int j = 0; j < size; ++j) z[j] = rng.normal();
    const Matrix c = submatrix(data, id);

    double ll = 0.0;
    for (Eigen::Index i = 0; i < data.m(); ++i) {
      const double t = c.row(i).dot(z);
      ll += data.responses[i] * t - std::log1p(std::exp(t));
    }
    const Matrix precision = c.transpose() * c / (4.0 * data.m());
    const MvNormal prior(Vector::Zero(size), precision.inverse());
    const double expected = ll + prior.log_pdf(z) +
                            size * std::log(lambda) - std::lgamma(size + 1.0);

    const ParameterPoint theta = make_model_point(id);
    INFO("model " << glm_model_label(id, 4));
    CHECK(target.log_joint(theta, z) ==
          Catch::Approx(expected).margin(1e-9 * (1.0 + std::abs(expected))));
    CHECK(target.log_likelihood(id, z) ==
          Catch::Approx(ll).margin(1e-9 * (1.0 + std::abs(ll))));
  }
}

TEST_CASE("glm empty model has zero mass and no coefficients") {
  const GlmTarget target = pinned_target();
  CHECK(target.aux_dim(0) == 0);
  CHECK(target.log_joint(make_model_point(0), Vector(0)) == kNegInf);
  CHECK_THROWS_AS(target.log_joint(make_model_point(0), Vector::Zero(1)),
                  ContractViolation);
  CHECK(target.grad_log_joint(make_model_point(0), Vector(0)).size() == 0);
  CHECK_THROWS_AS(target.mle(0), ContractViolation);
  CHECK_THROWS_AS(target.prior_precision(0), ContractViolation);
  CHECK_THROWS_AS(target.aux_dim(16), ContractViolation);
  CHECK_THROWS_AS(target.aux_dim(-1), ContractViolation);
}

TEST_CASE("glm prior precision follows the selected reading") {
  const GlmDataset data = pinned_dataset();
  const GlmTarget plain(data, GlmTarget::Options{});
  GlmTarget::Options scaled_options;
  scaled_options.scale_precision = true;
  const GlmTarget scaled(data, scaled_options);
  for (int id : {3, 8, 15}) {
    const Matrix ctc = submatrix(data, id).transpose() * submatrix(data, id);
    const double m = static_cast<double>(data.m());
    CHECK((plain.prior_precision(id) - ctc / (4.0 * m)).norm() < 1e-12);
    CHECK((scaled.prior_precision(id) - 4.0 * m * ctc).norm() < 1e-9);
  }

  GlmTarget::Options bad;
  bad.lambda = 0.0;
  CHECK_THROWS_AS(GlmTarget(data, bad), ContractViolation);
}

TEST_CASE("glm gradient matches finite differences") {
  const GlmTarget target = pinned_target();
  RngStream rng(4202, 0);
  for (int id : {2, 7, 15}) {
    const ParameterPoint theta = make_model_point(id);
    const Eigen::Index dim = target.aux_dim(id);
    for (int rep = 0; rep < 5; ++rep) {
      Vector z(dim);
      for (Eigen::Index j = 0; j < dim; ++j) z[j] = 0.8 * rng.normal();
      const Vector grad = target.grad_log_joint(theta, z);
      const Vector fd = finite_difference_gradient(
          [&](const Vector& point) { return target.log_joint(theta, point); },
          z, 1e-6);
      for (Eigen::Index j = 0; j < dim; ++j) {
        CHECK(grad[j] ==
              Catch::Approx(fd[j]).margin(1e-5 * (1.0 + std::abs(fd[j]))));
      }
    }
  }
}

TEST_CASE("birth death density normalizes over reachable models") {
  const RjBirthDeathProposal proposal(4);
  for (int from = 1; from <= 15; ++from) {
    double mass = 0.0;
    for (int to = 0; to <= 15; ++to) {
      const double ld =
          proposal.log_density(make_model_point(from), make_model_point(to));
      const int diff = from ^ to;
      if (diff != 0 && (diff & (diff - 1)) == 0) {
        CHECK(ld > kNegInf);
        mass += std::exp(ld);
      } else {
        CHECK(ld == kNegInf);
      }
    }
    // A saturated model only proposes deaths; everything else spends the
    // birth half of the coin as well.
    const double expected = glm_model_size(from, 4) == 4 ? 0.5 : 1.0;
    INFO("model " << glm_model_label(from, 4));
    CHECK(mass == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("birth death moves are reverse reachable") {
  const RjBirthDeathProposal proposal(4);
  for (int from = 1; from <= 15; ++from) {
    for (int to = 0; to <= 15; ++to) {
      const double fwd =
          proposal.log_density(make_model_point(from), make_model_point(to));
      if (fwd == kNegInf) continue;
      CHECK(proposal.log_density(make_model_point(to), make_model_point(from)) >
            kNegInf);
    }
  }
}

TEST_CASE("birth death corrections equal the density log ratio") {
  RngStream rng(4203, 0);
  for (int rep = 0; rep < 2000; ++rep) {
    const int from = 1 + static_cast<int>(rng.uniform_index(15));
    const ParameterPoint theta = make_model_point(from);
    const RjProposalResult move = rj_birth_death_proposal(theta, 4, rng);
    if (move.null_move) {
      CHECK(from == 15);
      CHECK(move.theta.model_id == from);
      CHECK(move.log_correction == 0.0);
      continue;
    }
    const RjBirthDeathProposal proposal(4);
    const double fwd = proposal.log_density(theta, move.theta);
    const double rev = proposal.log_density(move.theta, theta);
    REQUIRE(fwd > kNegInf);
    CHECK(move.log_correction == Catch::Approx(rev - fwd).margin(1e-13));
  }
}

TEST_CASE("birth death sampling frequencies match the density") {
  // From model 1000: three births at 0.5/3 each, one death to the empty
  // model at 0.5.
  RngStream rng(4204, 0);
  const ParameterPoint from = make_model_point(8);
  std::map<int, int> counts;
  const int reps = 20000;
  for (int rep = 0; rep < reps; ++rep) {
    counts[rj_birth_death_proposal(from, 4, rng).theta.model_id] += 1;
  }
  REQUIRE(counts.size() == 4);
  const double se_birth = std::sqrt(reps * (0.5 / 3) * (1 - 0.5 / 3));
  for (int to : {12, 10, 9}) {
    CHECK(std::abs(counts[to] - reps * 0.5 / 3) < 4.0 * se_birth);
  }
  const double se_death = std::sqrt(reps * 0.5 * 0.5);
  CHECK(std::abs(counts[0] - reps * 0.5) < 4.0 * se_death);
}

TEST_CASE("birth death rejects out of range models") {
  RngStream rng(4205, 0);
  CHECK_THROWS_AS(rj_birth_death_proposal(make_model_point(0), 4, rng),
                  ContractViolation);
  CHECK_THROWS_AS(rj_birth_death_proposal(make_model_point(16), 4, rng),
                  ContractViolation);
  CHECK_THROWS_AS(RjBirthDeathProposal(0), ContractViolation);
}

TEST_CASE("glm scheme draws correctly sized weighed blocks") {
  const GlmTarget target = pinned_target();
  const GlmScheme scheme = make_glm_scheme(target, 3, 0.1, 12.0);
  ChainRng rng(4206);
  for (int id : {1, 11, 15}) {
    const ParameterPoint theta = make_model_point(id);
    const AuxBlock block = scheme.sample_block(theta, rng.block);
    REQUIRE(block.draws.size() == 3);
    for (const Vector& z : block.draws) {
      CHECK(z.size() == target.aux_dim(id));
    }
    CHECK(std::isfinite(scheme.log_gamma(theta, block).log_gamma));
  }
}

TEST_CASE("glm init proposal wraps the mle gaussian") {
  const GlmTarget target = pinned_target();
  const GlmInitProposal init{&target};
  const ParameterPoint theta = make_model_point(11);
  RngStream rng(4207, 0);
  const Vector z = init.sample(theta, rng);
  CHECK(z.size() == target.aux_dim(11));
  CHECK(init.log_density(theta, z) ==
        target.init_proposal(11).log_pdf(z));
}

TEST_CASE("glm init spread widens a univariate proposal exactly") {
  // On a one-coefficient model the spread-s density has the closed normal
  // form with standard deviation s * sqrt(h); h is recovered from the base
  // density at its own mean.
  const GlmTarget target = pinned_target();
  const int model = 8;
  REQUIRE(glm_model_size(model, 4) == 1);
  const MvNormal& base = target.init_proposal(model);
  const double m = base.mean()(0);
  const double log_h = -2.0 * base.log_pdf(base.mean()) - kLogTwoPi;
  const double h = std::exp(log_h);
  const double spread = 3.0;
  const GlmInitProposal wide{&target, spread};
  const ParameterPoint theta = make_model_point(model);
  for (double z : {m - 2.0, m + 0.3, m + 5.0}) {
    const double expected =
        -0.5 * (kLogTwoPi + log_h) - std::log(spread) -
        (z - m) * (z - m) / (2.0 * spread * spread * h);
    const Vector zv = (Vector(1) << z).finished();
    CHECK(wide.log_density(theta, zv) ==
          Catch::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("glm init spread scales sample dispersion") {
  const GlmTarget target = pinned_target();
  const ParameterPoint theta = make_model_point(11);
  const Vector center = target.init_proposal(11).mean();
  auto mean_sq_dist = [&](double spread, std::uint64_t seed) {
    const GlmInitProposal init{&target, spread};
    RngStream rng(seed, 0);
    double total = 0.0;
    const int reps = 20000;
    for (int i = 0; i < reps; ++i) {
      total += (init.sample(theta, rng) - center).squaredNorm();
    }
    return total / reps;
  };
  const double narrow = mean_sq_dist(1.0, 4208);
  const double wide = mean_sq_dist(3.0, 4209);
  // Expected ratio 9; the trace estimates at 20k draws are a few percent.
  CHECK(wide / narrow > 8.0);
  CHECK(wide / narrow < 10.0);
}

}  // namespace
}  // namespace pmmh
