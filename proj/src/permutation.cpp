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

#include "order_infer/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace order_infer {

Permutation::Permutation(std::vector<int> z) : z_(std::move(z)) {
  const int n = static_cast<int>(z_.size());
  std::vector<bool> seen(z_.size(), false);
  for (int v : z_) {
    if (v < 1 || v > n) {
      throw std::invalid_argument("permutation value " + std::to_string(v) +
                                  " outside [1, " + std::to_string(n) + "]");
    }
    if (seen[v - 1]) {
      throw std::invalid_argument("permutation value " + std::to_string(v) +
                                  " repeated");
    }
    seen[v - 1] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<int> z(n);
  std::iota(z.begin(), z.end(), 1);
  return Permutation(std::move(z));
}

Permutation Permutation::reversed(std::size_t n) {
  std::vector<int> z(n);
  for (std::size_t t = 0; t < n; ++t) z[t] = static_cast<int>(n - t);
  return Permutation(std::move(z));
}

std::vector<int> Permutation::generation_steps() const {
  std::vector<int> steps(z_.size());
  for (std::size_t t = 0; t < z_.size(); ++t) steps[z_[t] - 1] = static_cast<int>(t);
  return steps;
}

InsertionCode::InsertionCode(std::vector<int> r) : r_(std::move(r)) {
  for (std::size_t t = 0; t < r_.size(); ++t) {
    if (r_[t] < 0 || r_[t] > static_cast<int>(t)) {
      throw std::invalid_argument("insertion slot " + std::to_string(r_[t]) +
                                  " out of range at step " + std::to_string(t + 1));
    }
  }
}

double marginal_residual(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const double rows = (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (m.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

bool is_doubly_stochastic(const Matrix& m, double eps) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite() || (m.array() < 0.0).any()) return false;
  return marginal_residual(m) <= eps;
}

bool is_permutation_matrix(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (v != 0.0 && v != 1.0) return false;
    }
  }
  return (m.rowwise().sum().array() == 1.0).all() &&
         (m.colwise().sum().array() == 1.0).all();
}

PermutationMatrix::PermutationMatrix(Matrix p) : p_(std::move(p)) {
  if (!is_permutation_matrix(p_)) {
    throw std::invalid_argument("matrix is not a permutation matrix");
  }
}

DoublyStochasticMatrix::DoublyStochasticMatrix(Matrix b, double eps) : b_(std::move(b)) {
  if (!is_doubly_stochastic(b_, eps)) {
    throw std::invalid_argument("matrix is not doubly stochastic within tolerance");
  }
}

PermutationMatrix to_matrix(const Permutation& z) {
  const auto n = static_cast<Eigen::Index>(z.size());
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index t = 0; t < n; ++t) p(t, z[t] - 1) = 1.0;
  return PermutationMatrix(std::move(p));
}

Permutation from_matrix(const PermutationMatrix& p) {
  const Matrix& m = p.matrix();
  std::vector<int> z(m.rows());
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    Eigen::Index col = 0;
    m.row(t).maxCoeff(&col);
    z[t] = static_cast<int>(col) + 1;
  }
  return Permutation(std::move(z));
}

Permutation from_matrix(const Matrix& p) { return from_matrix(PermutationMatrix(p)); }

InsertionCode z_to_r(const Permutation& z) {
  std::vector<int> r(z.size());
  for (std::size_t t = 0; t < z.size(); ++t) {
    int slot = 0;
    for (std::size_t s = 0; s < t; ++s) slot += z[s] < z[t] ? 1 : 0;
    r[t] = slot;
  }
  return InsertionCode(std::move(r));
}

Permutation r_to_z(const InsertionCode& r) {
  // Partial sequence holds generation steps in left-to-right order.
  std::vector<int> partial;
  partial.reserve(r.size());
  for (std::size_t t = 0; t < r.size(); ++t) {
    partial.insert(partial.begin() + r[t], static_cast<int>(t));
  }
  std::vector<int> z(r.size());
  for (std::size_t pos = 0; pos < partial.size(); ++pos) {
    z[partial[pos]] = static_cast<int>(pos) + 1;
  }
  return Permutation(std::move(z));
}

std::vector<Permutation> all_permutations(std::size_t n) {
  std::vector<int> z(n);
  std::iota(z.begin(), z.end(), 1);
  std::vector<Permutation> out;
  do {
    out.emplace_back(z);
  } while (std::next_permutation(z.begin(), z.end()));
  return out;
}

}  // namespace order_infer
