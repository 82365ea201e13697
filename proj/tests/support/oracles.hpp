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

#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "order_infer/decoder.hpp"
#include "order_infer/rng.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;

/// perm(A) = sum over sigma of prod_i A(i, sigma_i), by enumeration.
inline double brute_permanent(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> s(n);
  std::iota(s.begin(), s.end(), 0);
  double total = 0.0;
  do {
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= a(i, s[i]);
    total += p;
  } while (std::next_permutation(s.begin(), s.end()));
  return total;
}

/// log sum_sigma exp(sum_i x(i, sigma_i)), by enumeration with a running max.
inline double brute_log_partition(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> s(n);
  std::iota(s.begin(), s.end(), 0);
  std::vector<double> scores;
  do {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += x(i, s[i]);
    scores.push_back(v);
  } while (std::next_permutation(s.begin(), s.end()));
  const double m = *std::max_element(scores.begin(), scores.end());
  double acc = 0.0;
  for (double v : scores) acc += std::exp(v - m);
  return m + std::log(acc);
}

/// Marginals sum_P q(P) P under q(P) proportional to exp<x,P>, by enumeration.
inline Matrix brute_marginals(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  const double log_z = brute_log_partition(x);
  Matrix m = Matrix::Zero(n, n);
  std::vector<int> s(n);
  std::iota(s.begin(), s.end(), 0);
  do {
    double v = 0.0;
    for (int i = 0; i < n; ++i) v += x(i, s[i]);
    const double q = std::exp(v - log_z);
    for (int i = 0; i < n; ++i) m(i, s[i]) += q;
  } while (std::next_permutation(s.begin(), s.end()));
  return m;
}

/// Textbook O(nm) Levenshtein table.
template <class Seq>
int levenshtein_dp(const Seq& a, const Seq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[n][m];
}

/// Pearson correlation of the rank vectors (ranks are the values themselves
/// for permutations).
inline double spearman_covariance(const std::vector<int>& w, const std::vector<int>& z) {
  const std::size_t n = w.size();
  double mw = 0, mz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mw += w[i];
    mz += z[i];
  }
  mw /= n;
  mz /= n;
  double cov = 0, vw = 0, vz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (w[i] - mw) * (z[i] - mz);
    vw += (w[i] - mw) * (w[i] - mw);
    vz += (z[i] - mz) * (z[i] - mz);
  }
  return cov / std::sqrt(vw * vz);
}

/// Projected-gradient ascent of the Bethe objective on the Birkhoff
/// polytope, with Euclidean projection by Dykstra's alternating scheme.
inline double bethe_by_projected_gradient(const Matrix& log_a, int steps = 4000,
                                          double step_size = 0.02) {
  const Eigen::Index n = log_a.rows();
  constexpr double kLo = 1e-9;
  auto objective = [&](const Matrix& g) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double v = g(i, j);
        f += v * log_a(i, j) - v * std::log(v) + (1 - v) * std::log(1 - v);
      }
    return f;
  };
  auto project = [&](Matrix y) {
    Matrix p1 = Matrix::Zero(n, n), p2 = Matrix::Zero(n, n), p3 = Matrix::Zero(n, n);
    for (int it = 0; it < 300; ++it) {
      Matrix a = y + p1;
      Matrix ya = a;
      for (Eigen::Index i = 0; i < n; ++i) ya.row(i).array() -= (a.row(i).sum() - 1.0) / n;
      p1 = a - ya;
      Matrix b = ya + p2;
      Matrix yb = b;
      for (Eigen::Index j = 0; j < n; ++j) yb.col(j).array() -= (b.col(j).sum() - 1.0) / n;
      p2 = b - yb;
      Matrix c = yb + p3;
      Matrix yc = c.cwiseMax(kLo).cwiseMin(1.0 - kLo);
      p3 = c - yc;
      y = yc;
    }
    return y;
  };
  order_infer::Rng rng(12345);
  Matrix g = Matrix::Constant(n, n, 1.0 / n);
  // Start away from the uniform point so symmetric cases are not trivial.
  Matrix noise(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) noise(i, j) = rng.uniform(-0.5, 0.5) / n;
  g = project(g + noise);
  double best = objective(g);
  double eta = step_size;
  for (int s = 0; s < steps; ++s) {
    Matrix grad(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        grad(i, j) = log_a(i, j) - std::log(g(i, j)) - std::log(1 - g(i, j)) - 2.0;
    Matrix cand = project(g + eta * grad);
    const double f = objective(cand);
    if (f >= best) {
      g = cand;
      best = f;
      eta *= 1.2;
    } else {
      eta *= 0.5;
      if (eta < 1e-12) break;
    }
  }
  return best;
}

/// Evaluates log p(y, z | x) one conditional at a time, rebuilding every
/// feature from the explicit partial sequence with plain loops.
inline double replay_joint_log_prob(const order_infer::DecoderParams& th, const order_infer::Episode& ep,
                                    const std::vector<int>& z) {
  const int d = th.dim;
  const int n = static_cast<int>(z.size());
  const int width = 3 * d + 2;
  auto emb = [&](int tok, int k) { return th.embed(tok, k); };
  auto lse = [](const std::vector<double>& v) {
    double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double a : v) s += std::exp(a - m);
    return m + std::log(s);
  };
  std::vector<int> placed_positions;  // positions generated so far, in step order
  double total = 0.0;
  for (int t = 1; t <= n; ++t) {
    std::vector<double> f(width, 0.0);
    for (int k = 0; k < d; ++k) {
      double src = 0.0;
      for (int id : ep.x) src += emb(id, k);
      f[k] = ep.x.empty() ? 0.0 : src / static_cast<double>(ep.x.size());
      double gen = 0.0;
      for (int pos : placed_positions) gen += emb(ep.y[pos - 1], k);
      f[d + k] = placed_positions.empty() ? 0.0 : gen / static_cast<double>(placed_positions.size());
      f[2 * d + k] = t == 1 ? th.start(k, 0) : emb(ep.y[z[t - 2] - 1], k);
    }
    f[3 * d] = static_cast<double>(t) / n;
    f[3 * d + 1] = 1.0;
    const int c = ep.y[z[t - 1] - 1];
    std::vector<double> logits(th.vocab_size, 0.0);
    for (int v = 0; v < th.vocab_size; ++v)
      for (int k = 0; k < width; ++k) logits[v] += th.token_map(v, k) * f[k];
    total += logits[c] - lse(logits);

    // Partial sequence in natural order and the slot the new token lands in.
    std::vector<int> sorted = placed_positions;
    std::sort(sorted.begin(), sorted.end());
    int slot = 0;
    for (int pos : sorted) slot += pos < z[t - 1] ? 1 : 0;
    std::vector<double> scores(t, 0.0);
    for (int s = 0; s < t; ++s) {
      double value = 0.0;
      for (int a = 0; a < d; ++a) {
        const double left = s == 0 ? th.left_boundary(a, 0) : emb(ep.y[sorted[s - 1] - 1], a);
        const double right = s == t - 1 ? th.right_boundary(a, 0) : emb(ep.y[sorted[s] - 1], a);
        double ml = th.slot_left(a, d), mr = th.slot_right(a, d);
        for (int b = 0; b < d; ++b) {
          ml += th.slot_left(a, b) * emb(c, b);
          mr += th.slot_right(a, b) * emb(c, b);
        }
        value += left * ml + right * mr;
      }
      double rho = 0.0;
      for (int k = 0; k < width; ++k) rho += th.slot_rho(k, 0) * f[k];
      for (int b = 0; b < d; ++b) rho += th.slot_rho(width + b, 0) * emb(c, b);
      value += (t == 1 ? 0.0 : static_cast<double>(s) / (t - 1)) * rho;
      scores[s] = value;
    }
    total += scores[slot] - lse(scores);
    placed_positions.push_back(z[t - 1]);
  }
  return total;
}

}  // namespace oracle
