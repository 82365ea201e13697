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

#include "order_infer/sinkhorn.hpp"

#include <cmath>
#include <stdexcept>

namespace order_infer {
namespace {

void normalize_columns(Matrix& l) {
  for (Eigen::Index j = 0; j < l.cols(); ++j) {
    auto col = l.col(j);
    const double m = col.maxCoeff();
    const double lse = m + std::log((col.array() - m).exp().sum());
    col.array() -= lse;
  }
}

void normalize_rows(Matrix& l) {
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    auto row = l.row(i);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    row.array() -= lse;
  }
}

}  // namespace

void SinkhornConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("sinkhorn: tau must be positive");
  }
  if (iterations < 1) throw std::invalid_argument("sinkhorn: iterations must be >= 1");
}

Matrix log_sinkhorn(const Matrix& log_a, int iterations) {
  if (log_a.rows() != log_a.cols()) throw std::invalid_argument("sinkhorn: matrix not square");
  if (!log_a.allFinite()) throw std::invalid_argument("sinkhorn: non-finite input");
  if (iterations < 1) throw std::invalid_argument("sinkhorn: iterations must be >= 1");
  Matrix l = log_a;
  for (int it = 0; it < iterations; ++it) {
    normalize_columns(l);
    normalize_rows(l);
  }
  return l;
}

SinkhornResult sinkhorn_operator(const Matrix& x, int iterations) {
  SinkhornResult out;
  out.matrix = log_sinkhorn(x, iterations).array().exp().matrix();
  out.residual = marginal_residual(out.matrix);
  out.overflow_risk = x.size() > 0 && x.cwiseAbs().maxCoeff() > kSinkhornClamp;
  return out;
}

Matrix gumbel_noise(Eigen::Index n, Rng& rng) {
  Matrix eps(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) eps(i, j) = rng.gumbel();
  }
  return eps;
}

SinkhornResult sample_gumbel_sinkhorn_one(const Matrix& x, double tau, int iterations, Rng& rng) {
  const Matrix eps = gumbel_noise(x.rows(), rng);
  return sinkhorn_operator((x + eps) / tau, iterations);
}

std::vector<SinkhornResult> sample_gumbel_sinkhorn(const Matrix& x, const SinkhornConfig& cfg,
                                                   int count) {
  cfg.validate();
  if (count < 1) throw std::invalid_argument("sinkhorn: count must be >= 1");
  std::vector<SinkhornResult> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Rng rng(cfg.seed, "gumbel", static_cast<std::uint64_t>(k));
    out.push_back(sample_gumbel_sinkhorn_one(x, cfg.tau, cfg.iterations, rng));
  }
  return out;
}

}  // namespace order_infer
