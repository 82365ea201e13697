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

#include "order_infer/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "order_infer/assignment.hpp"
#include "order_infer/rng.hpp"
#include "order_infer/sinkhorn.hpp"

namespace order_infer {
namespace {

void check_length(const OrderDistribution& d, const Permutation& z) {
  if (z.size() != d.size()) throw std::invalid_argument("order distribution: length mismatch");
}

}  // namespace

std::string to_string(DistributionKind kind) {
  return kind == DistributionKind::kGumbelMatching ? "gumbel_matching" : "plackett_luce";
}

DistributionKind parse_distribution_kind(const std::string& name) {
  if (name == "gumbel_matching") return DistributionKind::kGumbelMatching;
  if (name == "plackett_luce") return DistributionKind::kPlackettLuce;
  throw std::invalid_argument("unknown distribution '" + name + "'");
}

OrderDistribution OrderDistribution::gumbel_matching(Matrix x, double tau, int sinkhorn_iterations,
                                                     DensityMode mode, const BetheOptions& bethe,
                                                     const BetheMessages* warm_start) {
  if (x.rows() != x.cols()) throw std::invalid_argument("gumbel_matching: scores not square");
  if (!x.allFinite()) throw std::invalid_argument("gumbel_matching: non-finite scores");
  SinkhornConfig{tau, sinkhorn_iterations, 0}.validate();
  OrderDistribution d;
  d.kind_ = DistributionKind::kGumbelMatching;
  d.scores_ = std::move(x);
  d.tau_ = tau;
  d.sinkhorn_iterations_ = sinkhorn_iterations;
  d.mode_ = mode;
  if (mode == DensityMode::kExact) {
    d.log_normalizer_ = log_permanent_exp(d.scores_);
    d.marginals_ = exact_marginals(d.scores_);
  } else {
    d.bethe_ = bethe_permanent_log(d.scores_, bethe, warm_start);
    d.log_normalizer_ = d.bethe_->log_perm_b;
    d.marginals_ = d.bethe_->gamma;
  }
  return d;
}

OrderDistribution OrderDistribution::plackett_luce(Vector s) {
  if (!s.allFinite()) throw std::invalid_argument("plackett_luce: non-finite scores");
  OrderDistribution d;
  d.kind_ = DistributionKind::kPlackettLuce;
  d.scores_ = std::move(s);
  return d;
}

double OrderDistribution::log_density(const Permutation& z) const {
  check_length(*this, z);
  if (kind_ == DistributionKind::kGumbelMatching) {
    double inner = 0.0;
    for (std::size_t t = 0; t < z.size(); ++t) inner += scores_(static_cast<Eigen::Index>(t), z[t] - 1);
    return inner - log_normalizer_;
  }
  // Remaining positions are z_t..z_n; accumulate the log-sum backwards.
  const std::size_t n = z.size();
  double total = 0.0;
  double m = -std::numeric_limits<double>::infinity();
  double acc = 0.0;  // sum exp(s - m) over positions generated at steps >= t
  for (std::size_t t = n; t-- > 0;) {
    const double s = scores_(z[t] - 1, 0);
    if (s > m) {
      acc = acc * std::exp(m - s) + 1.0;
      m = s;
    } else {
      acc += std::exp(s - m);
    }
    total += s - (m + std::log(acc));
  }
  return total;
}

Matrix OrderDistribution::grad_log_density(const Permutation& z) const {
  check_length(*this, z);
  const auto n = static_cast<Eigen::Index>(z.size());
  if (kind_ == DistributionKind::kGumbelMatching) {
    return to_matrix(z).matrix() - marginals_;
  }
  Matrix g = Matrix::Ones(n, 1);
  std::vector<char> available(n, 1);
  Vector p(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index u = 0; u < n; ++u) {
      if (available[u]) m = std::max(m, scores_(u, 0));
    }
    double sum = 0.0;
    for (Eigen::Index u = 0; u < n; ++u) {
      p(u) = available[u] ? std::exp(scores_(u, 0) - m) : 0.0;
      sum += p(u);
    }
    for (Eigen::Index u = 0; u < n; ++u) g(u, 0) -= p(u) / sum;
    available[z[t] - 1] = 0;
  }
  return g;
}

Permutation OrderDistribution::modal() const {
  if (kind_ == DistributionKind::kGumbelMatching) return from_matrix(hungarian_max(scores_));
  std::vector<int> z(size());
  std::iota(z.begin(), z.end(), 1);
  std::stable_sort(z.begin(), z.end(),
                   [&](int a, int b) { return scores_(a - 1, 0) > scores_(b - 1, 0); });
  return Permutation(std::move(z));
}

OrderSample OrderDistribution::sample_one(std::uint64_t seed, std::uint64_t k) const {
  OrderSample out;
  if (kind_ == DistributionKind::kGumbelMatching) {
    // Round in log coordinates: log S differs from (X + eps) / tau only by
    // row and column offsets, so the matching is well defined even when
    // S is far from converged or exp(.) under/overflows.
    Rng rng(seed, "gumbel", k);
    const Matrix eps = gumbel_noise(scores_.rows(), rng);
    out.z = from_matrix(hungarian_max(log_sinkhorn((scores_ + eps) / tau_, sinkhorn_iterations_)));
  } else {
    Rng rng(seed, "plackett_luce", k);
    const std::size_t n = size();
    std::vector<double> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = scores_(static_cast<Eigen::Index>(i), 0) + rng.gumbel();
    std::vector<int> z(n);
    std::iota(z.begin(), z.end(), 1);
    std::stable_sort(z.begin(), z.end(), [&](int a, int b) { return keys[a - 1] > keys[b - 1]; });
    out.z = Permutation(std::move(z));
  }
  out.log_density = log_density(out.z);
  return out;
}

std::vector<OrderSample> sample(const OrderDistribution& d, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
  std::vector<OrderSample> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(d.sample_one(seed, static_cast<std::uint64_t>(k)));
  return out;
}

double log_density(const OrderDistribution& d, const Permutation& z) { return d.log_density(z); }

double entropy_estimate(const OrderDistribution& d, const std::vector<OrderSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("entropy_estimate: no samples");
  double total = 0.0;
  for (const auto& s : samples) total += d.log_density(s.z);
  return -total / static_cast<double>(samples.size());
}

}  // namespace order_infer
