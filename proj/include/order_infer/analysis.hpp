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

#include <span>
#include <string>
#include <vector>

#include "order_infer/distributions.hpp"
#include "order_infer/encoder.hpp"
#include "order_infer/permutation.hpp"

namespace order_infer {

/// Edit distance with unit insert, delete and substitute costs.
int levenshtein(std::span<const int> a, std::span<const int> b);

/// levenshtein(w, z) / n. Throws std::invalid_argument on a length mismatch
/// or n = 0.
double nld(const Permutation& w, const Permutation& z);

/// Spearman rank correlation 1 - 6 sum (w_i - z_i)^2 / (n^3 - n).
/// Throws std::invalid_argument on a length mismatch or n < 2.
double orc(const Permutation& w, const Permutation& z);

struct DecodedOrder {
  std::vector<int> y;
  Permutation z;
  std::vector<std::string> tags;  // aligned with y; empty means untagged
};

struct TagStats {
  std::string tag;
  int count = 0;
  double mean = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
};

inline constexpr const char* kUntagged = "untagged";

/// Normalized generation index (1-based generation step / length) of every
/// token, summarized per tag and sorted by ascending mean. Quantiles
/// interpolate linearly between order statistics.
std::vector<TagStats> generation_index_stats(const std::vector<DecodedOrder>& decoded);

/// CSV with header tag,count,mean_norm_index,p25,p50,p75.
std::string to_csv(const std::vector<TagStats>& stats);

struct PerturbationResult {
  std::vector<int> masked;  // 0-based source positions removed
  Permutation order;
  double nld = 0.0;  // against the unmasked modal order
};

/// For each mask, recomputes the encoder scores with those source positions
/// zeroed and compares the modal order with the unmasked one.
std::vector<PerturbationResult> perturbation_study(const EncoderParams& phi, const Episode& ep,
                                                   const std::vector<std::vector<int>>& masks,
                                                   DistributionKind kind = DistributionKind::kGumbelMatching);

/// Modal order of the encoder for `ep`: Hungarian on X or sorted PL scores.
Permutation modal_order(const EncoderParams& phi, const Episode& ep, DistributionKind kind,
                        const SourceMask& mask = {});

}  // namespace order_infer
