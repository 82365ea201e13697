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

#include "order_infer/episode.hpp"
#include "order_infer/permutation.hpp"

namespace order_infer {

/// Parameters of the toy order encoder.
///
/// Position i of a target of length n is described by
///   h_i = [e(y_i); e(y_i) * s; (i - 1) / (n - 1); 1]      (width 2d + 2)
/// where e is the embedding table and s the mean embedding of the unmasked
/// source tokens (masked tokens count as zero vectors). Step t is described
/// by g_t = [1; u; u^2] with u = (t - 1) / (n - 1). The Gumbel-Matching
/// scores are X(t, i) = h_i' pair_map g_t, the Plackett-Luce scores
/// s_i = h_i' pl_map.
struct EncoderParams {
  int vocab_size = 0;
  int dim = 0;
  Matrix embed;     // V x d
  Matrix pair_map;  // (2d + 2) x 3
  Matrix pl_map;    // (2d + 2) x 1

  [[nodiscard]] int feature_width() const { return 2 * dim + 2; }

  static EncoderParams zeros(int vocab_size, int dim);
  /// Entries i.i.d. N(0, scale^2) from the ("init", 1) substream of `seed`.
  static EncoderParams random(int vocab_size, int dim, std::uint64_t seed, double scale = 0.1);

  template <class F>
  void for_each(F&& f) {
    f("embed", embed);
    f("pair_map", pair_map);
    f("pl_map", pl_map);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<EncoderParams*>(this)->for_each(
        [&](const char* name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }

  void axpy(double alpha, const EncoderParams& other);
  [[nodiscard]] double squared_norm() const;
  [[nodiscard]] bool all_finite() const;
  void validate() const;
};

/// Per-source-position keep flags; empty means keep everything.
using SourceMask = std::vector<bool>;

/// n x (2d + 2) matrix whose rows are h_i.
Matrix position_features(const EncoderParams& phi, const Episode& ep, const SourceMask& mask = {});

/// n x n scores, rows = generation steps, columns = target positions.
Matrix matching_scores(const EncoderParams& phi, const Episode& ep, const SourceMask& mask = {});

/// n Plackett-Luce scores over target positions.
Vector plackett_luce_scores(const EncoderParams& phi, const Episode& ep, const SourceMask& mask = {});

/// grad += backprop of dL/dX through matching_scores.
void backprop_matching(const EncoderParams& phi, const Episode& ep, const Matrix& d_scores, EncoderParams& grad,
                       const SourceMask& mask = {});

/// grad += backprop of dL/ds through plackett_luce_scores.
void backprop_plackett_luce(const EncoderParams& phi, const Episode& ep, const Vector& d_scores,
                            EncoderParams& grad, const SourceMask& mask = {});

}  // namespace order_infer
