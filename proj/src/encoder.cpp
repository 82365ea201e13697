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

#include "order_infer/encoder.hpp"

#include <stdexcept>

#include "order_infer/rng.hpp"

namespace order_infer {
namespace {

double fraction(Eigen::Index i, Eigen::Index n) {
  return n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
}

void check_episode(const EncoderParams& phi, const Episode& ep, const SourceMask& mask) {
  if (ep.y.empty()) throw std::invalid_argument("encoder: empty target");
  for (int t : ep.y)
    if (t < 0 || t >= phi.vocab_size) throw std::invalid_argument("encoder: target id out of range");
  for (int t : ep.x)
    if (t < 0 || t >= phi.vocab_size) throw std::invalid_argument("encoder: source id out of range");
  if (!mask.empty() && mask.size() != ep.x.size()) throw std::invalid_argument("encoder: mask size mismatch");
}

bool kept(const SourceMask& mask, std::size_t j) { return mask.empty() || mask[j]; }

Vector source_summary(const EncoderParams& phi, const Episode& ep, const SourceMask& mask) {
  Vector s = Vector::Zero(phi.dim);
  for (std::size_t j = 0; j < ep.x.size(); ++j)
    if (kept(mask, j)) s += phi.embed.row(ep.x[j]).transpose();
  if (!ep.x.empty()) s /= static_cast<double>(ep.x.size());
  return s;
}

Matrix step_features(Eigen::Index n) {
  Matrix g(n, 3);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double u = fraction(t, n);
    g(t, 0) = 1.0;
    g(t, 1) = u;
    g(t, 2) = u * u;
  }
  return g;
}

void backprop_features(const EncoderParams& phi, const Episode& ep, const Matrix& d_h, EncoderParams& grad,
                       const SourceMask& mask) {
  const int d = phi.dim;
  const Vector s = source_summary(phi, ep, mask);
  Vector d_s = Vector::Zero(d);
  for (std::size_t i = 0; i < ep.y.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Vector e = phi.embed.row(ep.y[i]).transpose();
    const Vector d_prod = d_h.row(row).segment(d, d).transpose();
    grad.embed.row(ep.y[i]) += d_h.row(row).head(d) + d_prod.cwiseProduct(s).transpose();
    d_s += d_prod.cwiseProduct(e);
  }
  if (ep.x.empty()) return;
  d_s /= static_cast<double>(ep.x.size());
  for (std::size_t j = 0; j < ep.x.size(); ++j)
    if (kept(mask, j)) grad.embed.row(ep.x[j]) += d_s.transpose();
}

}  // namespace

EncoderParams EncoderParams::zeros(int vocab_size, int dim) {
  if (vocab_size < 1 || dim < 1) throw std::invalid_argument("encoder: vocab_size and dim must be >= 1");
  EncoderParams p;
  p.vocab_size = vocab_size;
  p.dim = dim;
  p.embed = Matrix::Zero(vocab_size, dim);
  p.pair_map = Matrix::Zero(2 * dim + 2, 3);
  p.pl_map = Matrix::Zero(2 * dim + 2, 1);
  return p;
}

EncoderParams EncoderParams::random(int vocab_size, int dim, std::uint64_t seed, double scale) {
  EncoderParams p = zeros(vocab_size, dim);
  Rng rng(seed, "init", 1);
  p.for_each([&](const char*, Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rng.normal();
  });
  return p;
}

void EncoderParams::axpy(double alpha, const EncoderParams& other) {
  if (vocab_size != other.vocab_size || dim != other.dim) throw std::invalid_argument("encoder: shape mismatch");
  embed += alpha * other.embed;
  pair_map += alpha * other.pair_map;
  pl_map += alpha * other.pl_map;
}

double EncoderParams::squared_norm() const {
  return embed.squaredNorm() + pair_map.squaredNorm() + pl_map.squaredNorm();
}

bool EncoderParams::all_finite() const {
  return embed.allFinite() && pair_map.allFinite() && pl_map.allFinite();
}

void EncoderParams::validate() const {
  const EncoderParams ref = zeros(vocab_size, dim);
  auto same = [](const Matrix& a, const Matrix& b) { return a.rows() == b.rows() && a.cols() == b.cols(); };
  if (!same(embed, ref.embed) || !same(pair_map, ref.pair_map) || !same(pl_map, ref.pl_map)) {
    throw std::invalid_argument("encoder: inconsistent shapes");
  }
  if (!all_finite()) throw std::invalid_argument("encoder: non-finite parameters");
}

Matrix position_features(const EncoderParams& phi, const Episode& ep, const SourceMask& mask) {
  check_episode(phi, ep, mask);
  const int d = phi.dim;
  const auto n = static_cast<Eigen::Index>(ep.y.size());
  const Vector s = source_summary(phi, ep, mask);
  Matrix h(n, phi.feature_width());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto e = phi.embed.row(ep.y[i]);
    h.row(i).head(d) = e;
    h.row(i).segment(d, d) = e.cwiseProduct(s.transpose());
    h(i, 2 * d) = fraction(i, n);
    h(i, 2 * d + 1) = 1.0;
  }
  return h;
}

Matrix matching_scores(const EncoderParams& phi, const Episode& ep, const SourceMask& mask) {
  const Matrix h = position_features(phi, ep, mask);
  return step_features(h.rows()) * phi.pair_map.transpose() * h.transpose();
}

Vector plackett_luce_scores(const EncoderParams& phi, const Episode& ep, const SourceMask& mask) {
  return position_features(phi, ep, mask) * phi.pl_map.col(0);
}

void backprop_matching(const EncoderParams& phi, const Episode& ep, const Matrix& d_scores, EncoderParams& grad,
                       const SourceMask& mask) {
  const Matrix h = position_features(phi, ep, mask);
  if (d_scores.rows() != h.rows() || d_scores.cols() != h.rows()) {
    throw std::invalid_argument("encoder: score gradient shape mismatch");
  }
  const Matrix g = step_features(h.rows());
  const Matrix dx_t_g = d_scores.transpose() * g;  // n x 3
  grad.pair_map.noalias() += h.transpose() * dx_t_g;
  backprop_features(phi, ep, dx_t_g * phi.pair_map.transpose(), grad, mask);
}

void backprop_plackett_luce(const EncoderParams& phi, const Episode& ep, const Vector& d_scores,
                            EncoderParams& grad, const SourceMask& mask) {
  const Matrix h = position_features(phi, ep, mask);
  if (d_scores.size() != h.rows()) throw std::invalid_argument("encoder: score gradient shape mismatch");
  grad.pl_map.col(0).noalias() += h.transpose() * d_scores;
  backprop_features(phi, ep, d_scores * phi.pl_map.col(0).transpose(), grad, mask);
}

}  // namespace order_infer
