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

#include "order_infer/permanent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace order_infer {
namespace {

void check_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) throw std::invalid_argument(std::string(who) + ": matrix not square");
}

double log_sum_exp(const auto& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Plain Ryser with a Gray-code walk over column subsets.
double ryser(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 1.0;
  Vector row_sums = Vector::Zero(n);
  const std::uint64_t subsets = std::uint64_t{1} << n;
  double total = 0.0;
  std::uint64_t gray = 0;
  for (std::uint64_t k = 1; k < subsets; ++k) {
    const int bit = std::countr_zero(k);
    const std::uint64_t mask = std::uint64_t{1} << bit;
    gray ^= mask;
    if (gray & mask) {
      row_sums += a.col(bit);
    } else {
      row_sums -= a.col(bit);
    }
    const double prod = row_sums.prod();
    const int size = std::popcount(gray);
    total += ((n - size) % 2 == 0) ? prod : -prod;
  }
  return total;
}

// Balanced form: log_a + r_i + c_j doubly stochastic. Returns the balanced
// log matrix and the total log scaling sum(r) + sum(c).
std::pair<Matrix, double> balance(const Matrix& log_a, int iterations) {
  Matrix l = log_a;
  double offset = 0.0;
  for (int it = 0; it < iterations; ++it) {
    for (Eigen::Index j = 0; j < l.cols(); ++j) {
      const double lse = log_sum_exp(l.col(j));
      l.col(j).array() -= lse;
      offset -= lse;
    }
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      const double lse = log_sum_exp(l.row(i));
      l.row(i).array() -= lse;
      offset -= lse;
    }
  }
  return {l, offset};
}

// out(i, j) = -log sum_{k != j} exp(v(i, k)), row by row, using prefix and
// suffix log-sums so no term is ever subtracted from a total.
void exclusive_row_lse(const Matrix& v, Matrix& out) {
  const Eigen::Index n = v.cols();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> prefix(n + 1), suffix(n + 1);
  auto log_add = [](double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
  };
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    prefix[0] = kNegInf;
    for (Eigen::Index k = 0; k < n; ++k) prefix[k + 1] = log_add(prefix[k], v(i, k));
    suffix[n] = kNegInf;
    for (Eigen::Index k = n; k > 0; --k) suffix[k - 1] = log_add(suffix[k], v(i, k - 1));
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = -log_add(prefix[j], suffix[j + 1]);
  }
}

Matrix beliefs(const Matrix& log_a, const BetheMessages& m) {
  const Matrix odds = log_a + m.from_rows + m.from_cols;
  // Logistic of the log odds, written to stay finite at both tails.
  return odds.unaryExpr([](double l) {
    return l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l));
  });
}

}  // namespace

double exact_permanent(const Matrix& a) {
  check_square(a, "exact_permanent");
  if (a.rows() > kExactPermanentMaxN) throw std::invalid_argument("exact_permanent: n too large");
  if ((a.array() < 0.0).any()) throw std::invalid_argument("exact_permanent: negative entry");
  if (!a.allFinite()) throw std::invalid_argument("exact_permanent: non-finite entry");
  // Factor out row maxima to keep the products in range.
  Matrix b = a;
  double scale = 1.0;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const double m = b.row(i).maxCoeff();
    if (m == 0.0) return 0.0;
    b.row(i) /= m;
    scale *= m;
  }
  return scale * ryser(b);
}

double log_permanent_exp(const Matrix& x) {
  check_square(x, "log_permanent_exp");
  if (x.rows() > kExactPermanentMaxN) throw std::invalid_argument("log_permanent_exp: n too large");
  if (!x.allFinite()) throw std::invalid_argument("log_permanent_exp: non-finite entry");
  if (x.rows() == 0) return 0.0;
  auto [l, offset] = balance(x, 50);
  const double p = ryser(l.array().exp().matrix());
  return std::log(p) - offset;
}

Matrix exact_marginals(const Matrix& x) {
  check_square(x, "exact_marginals");
  const Eigen::Index n = x.rows();
  Matrix m(n, n);
  if (n == 1) {
    m(0, 0) = 1.0;
    return m;
  }
  const double log_z = log_permanent_exp(x);
  Matrix minor(n - 1, n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index a = 0, ra = 0; a < n; ++a) {
        if (a == i) continue;
        for (Eigen::Index b = 0, cb = 0; b < n; ++b) {
          if (b == j) continue;
          minor(ra, cb++) = x(a, b);
        }
        ++ra;
      }
      m(i, j) = std::exp(x(i, j) + log_permanent_exp(minor) - log_z);
    }
  }
  return m;
}

double bethe_objective(const Matrix& log_a, const Matrix& gamma) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
    for (Eigen::Index j = 0; j < gamma.cols(); ++j) {
      const double g = gamma(i, j);
      if (g > 0.0) f += g * log_a(i, j) - g * std::log(g);
      if (g < 1.0) f += (1.0 - g) * std::log1p(-g);
    }
  }
  return f;
}

BetheResult bethe_permanent_log(const Matrix& log_a, const BetheOptions& opts,
                                const BetheMessages* warm_start) {
  check_square(log_a, "bethe_permanent");
  if (!log_a.allFinite()) throw std::invalid_argument("bethe_permanent: entries must be positive");
  if (opts.max_iters < 1) throw std::invalid_argument("bethe_permanent: max_iters must be >= 1");
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) {
    throw std::invalid_argument("bethe_permanent: damping must lie in [0, 1)");
  }
  const Eigen::Index n = log_a.rows();
  BetheResult out;
  if (n == 0) {
    out.gamma = Matrix(0, 0);
    return out;
  }
  if (n == 1) {
    out.gamma = Matrix::Ones(1, 1);
    out.log_perm_b = log_a(0, 0);
    out.messages = {Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
    return out;
  }

  BetheMessages m;
  if (warm_start && warm_start->from_rows.rows() == n && warm_start->from_cols.rows() == n) {
    m = *warm_start;
  } else {
    m = {Matrix::Zero(n, n), Matrix::Zero(n, n)};
  }
  // Row and column factor updates alternate, each damped in log space.
  // Messages may diverge on edges whose belief saturates, so convergence is
  // judged on the beliefs.
  Matrix fresh(n, n);
  Matrix fresh_t(n, n);
  Matrix gamma = beliefs(log_a, m);
  double step = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < opts.max_iters) {
    ++it;
    exclusive_row_lse(log_a + m.from_cols, fresh);
    m.from_rows = opts.damping * m.from_rows + (1.0 - opts.damping) * fresh;
    exclusive_row_lse((log_a + m.from_rows).transpose(), fresh_t);
    m.from_cols = opts.damping * m.from_cols + (1.0 - opts.damping) * fresh_t.transpose();
    Matrix next = beliefs(log_a, m);
    step = (next - gamma).cwiseAbs().maxCoeff();
    gamma = std::move(next);
    if (step <= opts.tol) break;
  }
  out.iterations_used = it;
  out.residual = std::max(step, marginal_residual(gamma));
  // Balance the beliefs onto the Birkhoff polytope before evaluating the
  // objective, so the value is that of a feasible point.
  out.gamma = balance(gamma.array().log().matrix(), 1).first;
  for (int pass = 0; pass < 200 && marginal_residual(out.gamma.array().exp().matrix()) > 1e-14;
       ++pass) {
    out.gamma = balance(out.gamma, 5).first;
  }
  out.gamma = out.gamma.array().exp().matrix();
  out.log_perm_b = bethe_objective(log_a, out.gamma);
  out.messages = std::move(m);
  return out;
}

BetheResult bethe_permanent(const Matrix& a, int max_iters, double tol) {
  check_square(a, "bethe_permanent");
  if (!(a.array() > 0.0).all()) throw std::invalid_argument("bethe_permanent: entries must be positive");
  BetheOptions opts;
  opts.max_iters = max_iters;
  opts.tol = tol;
  return bethe_permanent_log(a.array().log().matrix(), opts);
}

double log_q_density(const Matrix& x, const PermutationMatrix& p, DensityMode mode,
                     const BetheOptions& opts) {
  if (x.rows() != p.size() || x.cols() != p.size()) {
    throw std::invalid_argument("log_q_density: dimension mismatch");
  }
  const double inner = (x.array() * p.matrix().array()).sum();
  if (mode == DensityMode::kExact) return inner - log_permanent_exp(x);
  return inner - bethe_permanent_log(x, opts).log_perm_b;
}

double log_q_density(const Matrix& x, const PermutationMatrix& p, const BetheResult& bethe) {
  if (x.rows() != p.size() || x.cols() != p.size()) {
    throw std::invalid_argument("log_q_density: dimension mismatch");
  }
  return (x.array() * p.matrix().array()).sum() - bethe.log_perm_b;
}

Matrix grad_log_q(const Matrix& x, const PermutationMatrix& p, const BetheResult& bethe) {
  if (x.rows() != p.size() || bethe.gamma.rows() != p.size()) {
    throw std::invalid_argument("grad_log_q: dimension mismatch");
  }
  return p.matrix() - bethe.gamma;
}

Matrix grad_log_q(const Matrix& x, const PermutationMatrix& p, const BetheOptions& opts) {
  const BetheResult bethe = bethe_permanent_log(x, opts);
  if (!bethe.converged(std::max(opts.tol, 1e-6))) {
    throw std::runtime_error("grad_log_q: Bethe solver did not converge (residual " +
                             std::to_string(bethe.residual) + ")");
  }
  return grad_log_q(x, p, bethe);
}

Matrix grad_log_q_exact(const Matrix& x, const PermutationMatrix& p) {
  if (x.rows() != p.size() || x.cols() != p.size()) {
    throw std::invalid_argument("grad_log_q_exact: dimension mismatch");
  }
  return p.matrix() - exact_marginals(x);
}

}  // namespace order_infer
