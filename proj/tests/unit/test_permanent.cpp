// Copyright 2026 The order-infer Authors.
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

#include "doctest.h"
#include "order_infer/permanent.hpp"
#include "order_infer/rng.hpp"
#include "support/oracles.hpp"

using namespace order_infer;

namespace {

Matrix random_matrix(Eigen::Index n, Rng& rng, double scale = 1.0) {
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = scale * rng.normal();
  return m;
}

double log_factorial(int n) { return std::lgamma(n + 1.0); }

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-12, std::abs(b)); }

}  // namespace

TEST_CASE("exact permanent examples") {
  CHECK(exact_permanent(Matrix::Identity(6, 6)) == doctest::Approx(1.0));
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(exact_permanent(a) == doctest::Approx(10.0));
  CHECK(exact_permanent(Matrix::Ones(3, 3)) == doctest::Approx(6.0));
  CHECK_THROWS_AS(exact_permanent(Matrix::Ones(21, 21)), std::invalid_argument);
  CHECK_THROWS_AS(exact_permanent(-Matrix::Ones(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(exact_permanent(Matrix::Ones(2, 3)), std::invalid_argument);
}

TEST_CASE("Ryser agrees with the defining sum") {
  Rng rng(21);
  for (int n = 1; n <= 7; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix a = random_matrix(n, rng).array().abs().matrix();
      CHECK(rel_err(exact_permanent(a), oracle::brute_permanent(a)) < 1e-11);
      const Matrix x = random_matrix(n, rng, 3.0);
      CHECK(std::abs(log_permanent_exp(x) - oracle::brute_log_partition(x)) < 1e-10);
    }
  }
}

TEST_CASE("balanced log permanent survives extreme dynamic range") {
  // Two rows sharing one dominant column: perm = 2 e^-30 relative to the
  // leading entries, which cancels catastrophically without balancing.
  Matrix x(2, 2);
  x << 0, -30, 0, -30;
  CHECK(std::abs(log_permanent_exp(x) - (std::log(2.0) - 30.0)) < 1e-12);
  Rng rng(22);
  const Matrix big = random_matrix(7, rng, 40.0);
  CHECK(std::abs(log_permanent_exp(big) - oracle::brute_log_partition(big)) < 1e-9);
}

TEST_CASE("exact marginals match enumeration") {
  Rng rng(23);
  for (int n = 1; n <= 6; ++n) {
    const Matrix x = random_matrix(n, rng, 2.0);
    CHECK((exact_marginals(x) - oracle::brute_marginals(x)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("Bethe permanent on a 1x1 matrix is exact") {
  const auto b = bethe_permanent(Matrix::Constant(1, 1, 3.5));
  CHECK(b.log_perm_b == doctest::Approx(std::log(3.5)));
  CHECK(b.gamma(0, 0) == 1.0);
}

TEST_CASE("Bethe permanent obeys the sandwich bound") {
  Rng rng(24);
  for (int n = 2; n <= 10; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix x = random_matrix(n, rng, 1.5);
      const BetheResult b = bethe_permanent_log(x);
      CHECK(b.converged(1e-8));
      const double log_perm = log_permanent_exp(x);
      CHECK(b.log_perm_b <= log_perm + 1e-8);
      CHECK(b.log_perm_b >= log_perm - 0.5 * n * std::log(2.0) - 1e-8);
      CHECK((b.gamma.array() >= 0.0).all());
      CHECK((b.gamma.array() <= 1.0).all());
      CHECK(marginal_residual(b.gamma) < 1e-4);
    }
  }
  const Matrix a = (random_matrix(6, rng).array().abs() + 0.01).matrix();
  const auto b = bethe_permanent(a);
  const double perm = exact_permanent(a);
  CHECK(std::exp(b.log_perm_b) <= perm * (1 + 1e-9));
  CHECK(std::exp(b.log_perm_b) >= std::pow(std::sqrt(2.0), -6) * perm);
}

TEST_CASE("Bethe permanent of the all-ones matrix") {
  const auto b = bethe_permanent(Matrix::Ones(4, 4));
  const double value = std::exp(b.log_perm_b);
  CHECK(value <= 24.0);
  CHECK(value >= 24.0 / 4.0);
  // Symmetric optimum gamma = J/n gives (n-1)^(n(n-1)) / n^(n(n-2)).
  CHECK(value == doctest::Approx(std::pow(3.0, 12) / std::pow(4.0, 8)).epsilon(1e-9));
  const double pg = oracle::bethe_by_projected_gradient(Matrix::Zero(4, 4));
  CHECK(std::abs(pg - b.log_perm_b) < 1e-6);
}

TEST_CASE("fixed point agrees with projected-gradient maximization") {
  Rng rng(25);
  for (int trial = 0; trial < 4; ++trial) {
    const Matrix x = random_matrix(4, rng, 0.5);
    const auto b = bethe_permanent_log(x);
    const double pg = oracle::bethe_by_projected_gradient(x);
    CHECK(pg <= b.log_perm_b + 1e-7);
    CHECK(std::abs(pg - b.log_perm_b) < 1e-5);
  }
}

TEST_CASE("warm start converges to the same optimum") {
  Rng rng(26);
  const Matrix x = random_matrix(8, rng, 2.0);
  const auto cold = bethe_permanent_log(x);
  const Matrix nearby = x + 0.01 * random_matrix(8, rng);
  const auto warm = bethe_permanent_log(nearby, {}, &cold.messages);
  const auto fresh = bethe_permanent_log(nearby);
  CHECK(std::abs(warm.log_perm_b - fresh.log_perm_b) < 1e-9);
  CHECK(warm.iterations_used <= fresh.iterations_used);
}

TEST_CASE("exact log density examples and normalization") {
  for (int n = 1; n <= 5; ++n) {
    const auto p = to_matrix(Permutation::reversed(n));
    CHECK(log_q_density(Matrix::Zero(n, n), p, DensityMode::kExact) ==
          doctest::Approx(-log_factorial(n)));
  }
  Rng rng(27);
  for (int n = 2; n <= 7; ++n) {
    const Matrix x = random_matrix(n, rng, 2.0);
    double total = 0.0;
    for (const auto& z : all_permutations(n)) {
      total += std::exp(log_q_density(x, to_matrix(z), DensityMode::kExact));
    }
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
  CHECK_THROWS_AS(log_q_density(Matrix::Zero(21, 21), to_matrix(Permutation::identity(21)),
                                DensityMode::kExact),
                  std::invalid_argument);
  CHECK_THROWS_AS(log_q_density(Matrix::Zero(3, 3), to_matrix(Permutation::identity(2)),
                                DensityMode::kExact),
                  std::invalid_argument);
}

TEST_CASE("Bethe density is within the sandwich gap of the exact density") {
  Rng rng(28);
  const Matrix x = random_matrix(6, rng);
  const auto p = to_matrix(Permutation({2, 4, 6, 1, 3, 5}));
  const double exact = log_q_density(x, p, DensityMode::kExact);
  const double bethe = log_q_density(x, p, DensityMode::kBethe);
  CHECK(bethe >= exact - 1e-8);
  CHECK(std::abs(bethe - exact) <= 3.0 * std::log(2.0) + 1e-8);
}

TEST_CASE("shift invariance of the exact density") {
  Rng rng(29);
  const Matrix x = random_matrix(5, rng);
  const auto p = to_matrix(Permutation({5, 3, 1, 2, 4}));
  const double base = log_q_density(x, p, DensityMode::kExact);
  const Matrix shifted = (x.array() + 3.7).matrix();
  CHECK(std::abs(log_q_density(shifted, p, DensityMode::kExact) - base) < 1e-9);
}

TEST_CASE("gradient at zero scores uses the uniform marginals") {
  const auto p = to_matrix(Permutation({2, 1}));
  const Matrix g = grad_log_q(Matrix::Zero(2, 2), p);
  CHECK((g - (p.matrix().array() - 0.5).matrix()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Bethe gradient matches central finite differences") {
  Rng rng(30);
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix x = random_matrix(4, rng);
    const auto p = to_matrix(Permutation({3, 1, 4, 2}));
    BetheOptions opts;
    opts.tol = 1e-12;
    opts.max_iters = 5000;
    const Matrix g = grad_log_q(x, p, opts);
    const double h = 1e-5;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        Matrix up = x, down = x;
        up(i, j) += h;
        down(i, j) -= h;
        const double fd = (log_q_density(up, p, DensityMode::kBethe, opts) -
                           log_q_density(down, p, DensityMode::kBethe, opts)) /
                          (2 * h);
        CHECK(std::abs(fd - g(i, j)) <= 1e-4 * std::max(std::abs(g(i, j)), 1e-2));
      }
    }
  }
}

TEST_CASE("exact gradient matches finite differences and enumerated marginals") {
  Rng rng(31);
  const Matrix x = random_matrix(4, rng);
  const auto p = to_matrix(Permutation({2, 3, 4, 1}));
  const Matrix g = grad_log_q_exact(x, p);
  const Matrix oracle_g = p.matrix() - oracle::brute_marginals(x);
  CHECK((g - oracle_g).cwiseAbs().maxCoeff() < 1e-10);
  const double h = 1e-5;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      Matrix up = x, down = x;
      up(i, j) += h;
      down(i, j) -= h;
      const double fd = (log_q_density(up, p, DensityMode::kExact) -
                         log_q_density(down, p, DensityMode::kExact)) /
                        (2 * h);
      CHECK(std::abs(fd - g(i, j)) < 1e-6);
    }
  }
}

TEST_CASE("score-function identity holds in exact mode") {
  Rng rng(32);
  for (int n = 2; n <= 5; ++n) {
    const Matrix x = random_matrix(n, rng, 1.5);
    Matrix acc = Matrix::Zero(n, n);
    for (const auto& z : all_permutations(n)) {
      const auto p = to_matrix(z);
      acc += std::exp(log_q_density(x, p, DensityMode::kExact)) * grad_log_q_exact(x, p);
    }
    CHECK(acc.cwiseAbs().maxCoeff() < 1e-8);
  }
}
