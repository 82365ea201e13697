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
#include <optional>
#include <string>
#include <vector>

#include "order_infer/permanent.hpp"
#include "order_infer/permutation.hpp"

namespace order_infer {

enum class DistributionKind { kGumbelMatching, kPlackettLuce };

std::string to_string(DistributionKind kind);
/// Accepts "gumbel_matching" and "plackett_luce".
DistributionKind parse_distribution_kind(const std::string& name);

struct OrderSample {
  Permutation z;
  double log_density = 0.0;
};

/// A distribution over generation orders of length n.
///
/// Gumbel-Matching: scores are an n x n matrix X (row = step, column =
/// position), q(z) proportional to exp<X, f(z)>. Samples are Hungarian
/// roundings of the log of Gumbel-Sinkhorn draws; densities use the Bethe (or exact)
/// normalizer, computed once at construction.
///
/// Plackett-Luce: scores are an n x 1 vector s over positions; the position
/// generated at step t is chosen with probability softmax over the positions
/// not yet generated.
class OrderDistribution {
 public:
  static OrderDistribution gumbel_matching(Matrix x, double tau = 1.0, int sinkhorn_iterations = 200,
                                           DensityMode mode = DensityMode::kBethe,
                                           const BetheOptions& bethe = {},
                                           const BetheMessages* warm_start = nullptr);
  static OrderDistribution plackett_luce(Vector s);

  [[nodiscard]] DistributionKind kind() const { return kind_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(scores_.rows()); }
  [[nodiscard]] const Matrix& scores() const { return scores_; }
  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] int sinkhorn_iterations() const { return sinkhorn_iterations_; }
  /// log of the normalizer (log perm_B(exp X), log perm(exp X), or 0 for
  /// Plackett-Luce, whose terms are normalized per step).
  [[nodiscard]] double log_normalizer() const { return log_normalizer_; }
  /// Bethe solution for Gumbel-Matching in Bethe mode.
  [[nodiscard]] const std::optional<BetheResult>& bethe() const { return bethe_; }

  [[nodiscard]] double log_density(const Permutation& z) const;
  /// d log_density / d scores, same shape as scores().
  [[nodiscard]] Matrix grad_log_density(const Permutation& z) const;
  /// Most likely order: Hungarian on X, or s sorted in decreasing order.
  [[nodiscard]] Permutation modal() const;

  /// Draw `k` of a sequence seeded by `seed`; independent of other indices.
  [[nodiscard]] OrderSample sample_one(std::uint64_t seed, std::uint64_t k) const;

 private:
  OrderDistribution() = default;

  DistributionKind kind_ = DistributionKind::kPlackettLuce;
  Matrix scores_;
  double tau_ = 1.0;
  int sinkhorn_iterations_ = 200;
  DensityMode mode_ = DensityMode::kBethe;
  double log_normalizer_ = 0.0;
  std::optional<BetheResult> bethe_;
  Matrix marginals_;
};

/// `count` draws with their log densities; deterministic given `seed`.
std::vector<OrderSample> sample(const OrderDistribution& d, int count, std::uint64_t seed);

double log_density(const OrderDistribution& d, const Permutation& z);

/// Plug-in entropy estimate -(1/K) sum_k log q(z_k). Throws on empty input.
double entropy_estimate(const OrderDistribution& d, const std::vector<OrderSample>& samples);

}  // namespace order_infer
