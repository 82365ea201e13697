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

inline constexpr Eigen::Index kExactPermanentMaxN = 20;

/// Ryser's formula, O(2^n n). Throws for n > 20 or negative entries.
double exact_permanent(const Matrix& a);

/// log perm(exp(x)) for finite x. The matrix is first Sinkhorn-balanced in
/// log space, which bounds every Ryser term by 1 and keeps the alternating
/// sum well conditioned.
double log_permanent_exp(const Matrix& x);

/// Marginals sum_P q(P|x) P of the density q(P|x) = exp<x,P> / perm(exp x).
/// Computed from permanents of minors; n <= 20.
Matrix exact_marginals(const Matrix& x);

struct BetheOptions {
  int max_iters = 1000;
  double tol = 1e-8;
  double damping = 0.0;
};

/// Log message ratios of sum-product on the bipartite matching graph:
/// from_rows(i,j) is row factor i -> edge (i,j), from_cols(i,j) is column
/// factor j -> edge (i,j).
struct BetheMessages {
  Matrix from_rows;
  Matrix from_cols;
};

struct BetheResult {
  double log_perm_b = 0.0;
  Matrix gamma;
  int iterations_used = 0;
  /// Last fixed-point step size, or the marginal residual of gamma if larger.
  double residual = 0.0;
  BetheMessages messages;

  [[nodiscard]] bool converged(double tol) const { return residual <= tol; }
};

/// Objective sum_ij gamma log a - gamma log gamma + (1-gamma) log(1-gamma),
/// with log a supplied directly.
double bethe_objective(const Matrix& log_a, const Matrix& gamma);

/// Bethe permanent of exp(log_a), by damped sum-product message passing.
/// `warm_start` messages from an earlier solve of a same-sized matrix are
/// used as the starting point when given.
BetheResult bethe_permanent_log(const Matrix& log_a, const BetheOptions& opts = {},
                                const BetheMessages* warm_start = nullptr);

/// Bethe permanent of a positive matrix `a`.
BetheResult bethe_permanent(const Matrix& a, int max_iters = 1000, double tol = 1e-8);

enum class DensityMode { kExact, kBethe };

/// <x,p>_F - log perm(exp x)  (kExact, n <= 20)  or  - log perm_B(exp x) (kBethe).
double log_q_density(const Matrix& x, const PermutationMatrix& p, DensityMode mode,
                     const BetheOptions& opts = {});

/// Same, with a Bethe solution for exp(x) that was computed earlier.
double log_q_density(const Matrix& x, const PermutationMatrix& p, const BetheResult& bethe);

/// d/dx of log_q_density in Bethe mode: p - gamma*(exp x).
Matrix grad_log_q(const Matrix& x, const PermutationMatrix& p, const BetheResult& bethe);
Matrix grad_log_q(const Matrix& x, const PermutationMatrix& p, const BetheOptions& opts = {});

/// d/dx of log_q_density in exact mode: p - exact_marginals(x).
Matrix grad_log_q_exact(const Matrix& x, const PermutationMatrix& p);

}  // namespace order_infer
