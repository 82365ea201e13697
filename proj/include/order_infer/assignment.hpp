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

#include "order_infer/permutation.hpp"

namespace order_infer {

/// Maximum-weight perfect matching (Hungarian algorithm, O(n^3)).
///
/// Among optimal matchings the lexicographically smallest one is returned:
/// the lowest row takes the lowest column that still admits an optimum, and
/// so on. Throws std::invalid_argument for non-square or non-finite input.
PermutationMatrix hungarian_max(const Matrix& weights);

/// Exhaustive argmax over S_n with the same tie-breaking. n <= 10.
PermutationMatrix brute_force_max(const Matrix& weights);

inline constexpr Eigen::Index kBruteForceMaxN = 10;

/// <weights, P>_F summed in row order.
double assignment_score(const Matrix& weights, const Permutation& z);
double assignment_score(const Matrix& weights, const PermutationMatrix& p);

}  // namespace order_infer
