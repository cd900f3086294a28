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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pmmh/math.hpp"
#include "pmmh/rng.hpp"

using namespace pmmh;

TEST_CASE("chi square cdf closed forms") {
  // Reference values computed with an independent implementation of the
  // regularized incomplete gamma function.
  CHECK(chi_square_cdf(1, 1.0) ==
        Catch::Approx(0.68268949213708585).epsilon(1e-13));
  CHECK(chi_square_cdf(2, 4.0) ==
        Catch::Approx(0.8646647167633873).epsilon(1e-13));
  CHECK(chi_square_cdf(3, 2.5) ==
        Catch::Approx(0.5247089166569795).epsilon(1e-13));
  CHECK(chi_square_cdf(4, 16.0) ==
        Catch::Approx(0.99698083634887735).epsilon(1e-13));
  CHECK(chi_square_cdf(2, 0.25) ==
        Catch::Approx(0.1175030974154046).epsilon(1e-13));
  CHECK(chi_square_cdf(1, 0.09) ==
        Catch::Approx(0.23582284437790532).epsilon(1e-13));
  CHECK(chi_square_cdf(3, 7.81) ==
        Catch::Approx(0.94989394364999413).epsilon(1e-13));
  CHECK(chi_square_cdf(4, 0.5) ==
        Catch::Approx(0.026499021160743912).epsilon(1e-13));

  CHECK(chi_square_cdf(2, 0.0) == 0.0);
  CHECK(chi_square_cdf(0, 1.0) == 1.0);  // zero-dimensional mass steps at 0
  CHECK(chi_square_cdf(0, -1.0) == 0.0);
  CHECK_THROWS_AS(chi_square_cdf(-1, 1.0), ContractViolation);
}

TEST_CASE("normal log densities") {
  // N(0,1) at 0: -log sqrt(2 pi).
  CHECK(log_normal_pdf(0.0, 0.0, 1.0) ==
        Catch::Approx(-0.91893853320467274).epsilon(1e-14));
  CHECK(log_normal_pdf(1.3, -0.4, 2.0) ==
        Catch::Approx(-0.91893853320467274 - std::log(2.0) -
                      0.5 * 1.7 * 1.7 / 4.0)
            .epsilon(1e-13));

  // The isotropic form takes a variance, the scalar form a standard
  // deviation.
  const Vector z = (Vector(2) << 0.5, -0.5).finished();
  const Vector mean = Vector::Zero(2);
  CHECK(log_isotropic_normal_pdf(z, mean, 2.0) ==
        Catch::Approx(log_normal_pdf(0.5, 0.0, std::sqrt(2.0)) +
                      log_normal_pdf(-0.5, 0.0, std::sqrt(2.0)))
            .epsilon(1e-13));
  CHECK(log_isotropic_normal_pdf(Vector(0), Vector(0), 1.0) == 0.0);
}

TEST_CASE("multivariate normal density matches reference value") {
  Matrix cov(3, 3);
  cov << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5;
  const Vector mean = (Vector(3) << 0.5, -1.0, 2.0).finished();
  const MvNormal mvn(mean, cov);
  const Vector z = (Vector(3) << 1.0, 0.0, 1.5).finished();
  CHECK(mvn.log_pdf(z) == Catch::Approx(-3.3029070461588992).epsilon(1e-13));
}

TEST_CASE("multivariate normal sampling moments") {
  Matrix cov(2, 2);
  cov << 1.5, -0.6, -0.6, 0.8;
  const Vector mean = (Vector(2) << 2.0, -1.0).finished();
  const MvNormal mvn(mean, cov);
  RngStream rng(31, 0);
  const int n = 100000;
  Vector sum = Vector::Zero(2);
  Matrix outer = Matrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const Vector x = mvn.sample(rng) - mean;
    sum += x;
    outer += x * x.transpose();
  }
  CHECK((sum / n).cwiseAbs().maxCoeff() < 0.02);
  CHECK(((outer / n) - cov).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("multivariate normal rejects non spd matrices") {
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(MvNormal(Vector::Zero(2), bad), ContractViolation);
}

TEST_CASE("simpson quadrature") {
  const double integral =
      simpson_1d([](double x) { return std::sin(x); }, 0.0,
                 3.14159265358979323846, 200);
  CHECK(integral == Catch::Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(simpson_1d([](double) { return 1.0; }, 0.0, 1.0, 3),
                  ContractViolation);

  const double plane = simpson_2d(
      [](double x, double y) { return x + 2.0 * y; }, 0.0, 1.0, 8);
  CHECK(plane == Catch::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("finite difference gradient on a known function") {
  const auto f = [](const Vector& v) {
    return std::sin(v(0)) + v(0) * v(1) * v(1);
  };
  const Vector at = (Vector(2) << 0.7, -1.2).finished();
  const Vector grad = finite_difference_gradient(f, at, 1e-6);
  CHECK(grad(0) == Catch::Approx(std::cos(0.7) + 1.44).epsilon(1e-8));
  CHECK(grad(1) == Catch::Approx(2.0 * 0.7 * -1.2).epsilon(1e-8));
}
