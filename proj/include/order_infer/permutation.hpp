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

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace order_infer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A generation order over n target positions.
///
/// `z[t]` is the 1-based absolute position (in the naturally ordered target)
/// of the token produced at generation step t. Immutable once constructed.
class Permutation {
 public:
  Permutation() = default;
  /// Throws std::invalid_argument unless `z` is a bijection on {1..n}.
  explicit Permutation(std::vector<int> z);

  static Permutation identity(std::size_t n);
  static Permutation reversed(std::size_t n);

  [[nodiscard]] std::size_t size() const { return z_.size(); }
  [[nodiscard]] int operator[](std::size_t t) const { return z_[t]; }
  [[nodiscard]] std::span<const int> values() const { return z_; }

  /// Step (0-based) at which position `pos` (1-based) is generated.
  [[nodiscard]] std::vector<int> generation_steps() const;

  bool operator==(const Permutation&) const = default;
  auto operator<=>(const Permutation&) const = default;

 private:
  std::vector<int> z_;
};

/// Relative insertion code: `r[t]` is the 0-based slot into the partial
/// sequence of t already-placed tokens (t counted from 0), so r[t] <= t.
class InsertionCode {
 public:
  InsertionCode() = default;
  explicit InsertionCode(std::vector<int> r);

  [[nodiscard]] std::size_t size() const { return r_.size(); }
  [[nodiscard]] int operator[](std::size_t t) const { return r_[t]; }
  [[nodiscard]] std::span<const int> values() const { return r_; }

  bool operator==(const InsertionCode&) const = default;

 private:
  std::vector<int> r_;
};

/// n x n 0/1 matrix with exactly one 1 per row and column.
/// Row t holds one_hot(z_t).
class PermutationMatrix {
 public:
  PermutationMatrix() = default;
  explicit PermutationMatrix(Matrix p);

  [[nodiscard]] const Matrix& matrix() const { return p_; }
  [[nodiscard]] Eigen::Index size() const { return p_.rows(); }

  bool operator==(const PermutationMatrix& o) const { return p_ == o.p_; }

 private:
  Matrix p_;
};

/// Non-negative matrix whose row and column sums are within `eps` of 1.
class DoublyStochasticMatrix {
 public:
  static constexpr double kDefaultTolerance = 1e-6;

  DoublyStochasticMatrix() = default;
  explicit DoublyStochasticMatrix(Matrix b, double eps = kDefaultTolerance);

  [[nodiscard]] const Matrix& matrix() const { return b_; }
  [[nodiscard]] Eigen::Index size() const { return b_.rows(); }

 private:
  Matrix b_;
};

/// Largest deviation of any row or column sum from 1.
double marginal_residual(const Matrix& m);
bool is_doubly_stochastic(const Matrix& m, double eps);
bool is_permutation_matrix(const Matrix& m);

PermutationMatrix to_matrix(const Permutation& z);
Permutation from_matrix(const PermutationMatrix& p);
/// Throws std::invalid_argument if `p` is not a permutation matrix.
Permutation from_matrix(const Matrix& p);

/// r_t = |{s < t : z_s < z_t}|.
InsertionCode z_to_r(const Permutation& z);
/// Replays the insertions; inverse of z_to_r.
Permutation r_to_z(const InsertionCode& r);

/// All n! permutations in lexicographic order of z.
std::vector<Permutation> all_permutations(std::size_t n);

}  // namespace order_infer
