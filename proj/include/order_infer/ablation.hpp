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
#include <functional>
#include <string>
#include <vector>

#include "order_infer/trainer.hpp"

namespace order_infer {

/// One encoder configuration of an order-recovery ablation.
struct AblationCell {
  DistributionKind distribution = DistributionKind::kGumbelMatching;
  int k = 4;
};

struct AblationRow {
  AblationCell cell;
  std::vector<double> nld;  // final NLD, one per seed

  [[nodiscard]] double mean_nld() const;
};

struct AblationTable {
  std::vector<std::uint64_t> seeds;
  std::vector<int> phase1_steps;  // per seed
  std::vector<bool> phase1_converged;
  std::vector<AblationRow> rows;
};

enum class AblationKind { kTable4, kTable5 };
AblationKind parse_ablation_kind(const std::string& name);

/// table4: both distributions at cfg.k; table5: Gumbel-Matching at K in
/// {2, 3, 4, 10}.
std::vector<AblationCell> ablation_cells(AblationKind kind, const TrainConfig& cfg);

using AblationProgress = std::function<void(std::uint64_t seed, const AblationCell&, double nld)>;

/// For every seed: pretrain one decoder on the planted orders (stored in the
/// corpus), then train a fresh encoder for every cell against it. Each
/// seed's corpus comes from `corpus_for_seed`.
AblationTable run_ablation(const std::function<Corpus(std::uint64_t)>& corpus_for_seed,
                           const std::vector<AblationCell>& cells, const std::vector<std::uint64_t>& seeds,
                           const TrainConfig& cfg, const AblationProgress& progress = {});

/// CSV with header distribution,k,mean_nld,seed_<s>... (one column per seed).
std::string to_csv(const AblationTable& table);

/// Planted orders of every episode; throws if one is missing.
std::vector<Permutation> planted_orders(const Corpus& corpus);

}  // namespace order_infer
