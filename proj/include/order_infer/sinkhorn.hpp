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

#include <cstdint>
#include <vector>

#include "order_infer/permutation.hpp"
#include "order_infer/rng.hpp"

namespace order_infer {

struct SinkhornConfig {
  double tau = 1.0;
  int iterations = 200;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument unless tau > 0 and iterations >= 1.
  void validate() const;
};

struct SinkhornResult {
  Matrix matrix;
  /// Largest |row sum - 1| or |col sum - 1| after the final iteration.
  double residual = 0.0;
  /// Set when some |x| exceeded the clamp; the log-space result is still valid.
  bool overflow_risk = false;
};

/// Entries of |x| above this are flagged as an overflow risk for any
/// linear-domain consumer of exp(x).
inline constexpr double kSinkhornClamp = 700.0;

/// T^iterations(exp(x)) with T = row-normalize after column-normalize,
/// evaluated in log space.
SinkhornResult sinkhorn_operator(const Matrix& x, int iterations);

/// Log-space variant: returns log of the normalized matrix.
Matrix log_sinkhorn(const Matrix& log_a, int iterations);

/// n x n matrix of i.i.d. standard Gumbel draws, filled row by row.
Matrix gumbel_noise(Eigen::Index n, Rng& rng);

/// `count` draws of S((x + eps) / tau). Draw k uses the substream
/// ("gumbel", k) of cfg.seed so draws are independent of one another.
std::vector<SinkhornResult> sample_gumbel_sinkhorn(const Matrix& x, const SinkhornConfig& cfg,
                                                   int count);

/// A single draw using an explicit generator.
SinkhornResult sample_gumbel_sinkhorn_one(const Matrix& x, double tau, int iterations, Rng& rng);

}  // namespace order_infer
