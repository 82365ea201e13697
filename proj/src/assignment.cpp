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

#include "order_infer/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace order_infer {
namespace {

void check_weights(const Matrix& w) {
  if (w.rows() != w.cols()) throw std::invalid_argument("assignment: matrix not square");
  if (!w.allFinite()) throw std::invalid_argument("assignment: non-finite weights");
}

struct Duals {
  std::vector<double> u;  // rows
  std::vector<double> v;  // columns
  std::vector<int> row_to_col;
};

// Shortest augmenting path Hungarian on cost = -w; potentials satisfy
// cost(i,j) - u_i - v_j >= 0 with equality on the returned matching.
Duals solve_min_cost(const Matrix& w) {
  const int n = static_cast<int>(w.rows());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -w(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Duals d;
  d.u.assign(u.begin() + 1, u.end());
  d.v.assign(v.begin() + 1, v.end());
  d.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) d.row_to_col[p[j] - 1] = j - 1;
  return d;
}

// Lexicographically smallest perfect matching inside the equality graph
// (edges with zero reduced cost), starting from a known perfect matching.
std::vector<int> lexicographic_optimum(const Matrix& w, const Duals& d) {
  const int n = static_cast<int>(w.rows());
  const double scale = 1.0 + w.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * scale * std::max(1, n);
  std::vector<std::vector<char>> tight(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      tight[i][j] = std::abs(-w(i, j) - d.u[i] - d.v[j]) <= tol;
    }
  }
  std::vector<int> row_to_col = d.row_to_col;
  std::vector<int> col_to_row(n, -1);
  for (int i = 0; i < n; ++i) col_to_row[row_to_col[i]] = i;
  std::vector<char> fixed_row(n, 0), fixed_col(n, 0);

  // Alternating path from `start_row` to `target_col` over unfixed vertices.
  auto reroute = [&](int start_row, int target_col) -> bool {
    std::vector<int> prev_row_of_col(n, -1);
    std::vector<char> seen_col(n, 0);
    std::vector<int> queue{start_row};
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int r = queue[head];
      for (int c = 0; c < n; ++c) {
        if (!tight[r][c] || fixed_col[c] || seen_col[c]) continue;
        seen_col[c] = 1;
        prev_row_of_col[c] = r;
        if (c == target_col) {
          int col = c;
          while (true) {
            const int row = prev_row_of_col[col];
            const int old = row_to_col[row];
            row_to_col[row] = col;
            col_to_row[col] = row;
            if (row == start_row) break;
            col = old;
          }
          return true;
        }
        const int next = col_to_row[c];
        if (next >= 0 && !fixed_row[next]) queue.push_back(next);
      }
    }
    return false;
  };

  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < n; ++c) {
      if (!tight[i][c] || fixed_col[c]) continue;
      if (row_to_col[i] == c) break;
      // Tentatively give c to row i; the displaced row must reach i's old column.
      const auto saved_r2c = row_to_col;
      const auto saved_c2r = col_to_row;
      const int displaced = col_to_row[c];
      const int freed = row_to_col[i];
      fixed_row[i] = 1;
      fixed_col[c] = 1;
      row_to_col[i] = c;
      col_to_row[c] = i;
      col_to_row[freed] = -1;
      row_to_col[displaced] = -1;
      if (reroute(displaced, freed)) break;
      row_to_col = saved_r2c;
      col_to_row = saved_c2r;
      fixed_row[i] = 0;
      fixed_col[c] = 0;
    }
    fixed_row[i] = 1;
    fixed_col[row_to_col[i]] = 1;
  }
  return row_to_col;
}

PermutationMatrix matrix_from_assignment(const std::vector<int>& row_to_col) {
  std::vector<int> z(row_to_col.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = row_to_col[i] + 1;
  return to_matrix(Permutation(std::move(z)));
}

}  // namespace

PermutationMatrix hungarian_max(const Matrix& weights) {
  check_weights(weights);
  if (weights.rows() == 0) return PermutationMatrix(Matrix(0, 0));
  const Duals duals = solve_min_cost(weights);
  return matrix_from_assignment(lexicographic_optimum(weights, duals));
}

PermutationMatrix brute_force_max(const Matrix& weights) {
  check_weights(weights);
  if (weights.rows() > kBruteForceMaxN) {
    throw std::invalid_argument("brute_force_max: n too large");
  }
  const int n = static_cast<int>(weights.rows());
  std::vector<int> cols(n);
  std::iota(cols.begin(), cols.end(), 0);
  std::vector<int> best = cols;
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += weights(i, cols[i]);
    if (s > best_score) {
      best_score = s;
      best = cols;
    }
  } while (std::next_permutation(cols.begin(), cols.end()));
  return matrix_from_assignment(best);
}

double assignment_score(const Matrix& weights, const Permutation& z) {
  double s = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) s += weights(static_cast<Eigen::Index>(t), z[t] - 1);
  return s;
}

double assignment_score(const Matrix& weights, const PermutationMatrix& p) {
  return assignment_score(weights, from_matrix(p));
}

}  // namespace order_infer
