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

#include "order_infer/ablation.hpp"

#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace order_infer {

double AblationRow::mean_nld() const {
  if (nld.empty()) return 0.0;
  return std::accumulate(nld.begin(), nld.end(), 0.0) / static_cast<double>(nld.size());
}

AblationKind parse_ablation_kind(const std::string& name) {
  if (name == "table4") return AblationKind::kTable4;
  if (name == "table5") return AblationKind::kTable5;
  throw std::invalid_argument("unknown ablation '" + name + "' (expected table4 or table5)");
}

std::vector<AblationCell> ablation_cells(AblationKind kind, const TrainConfig& cfg) {
  if (kind == AblationKind::kTable4) {
    return {{DistributionKind::kGumbelMatching, cfg.k}, {DistributionKind::kPlackettLuce, cfg.k}};
  }
  std::vector<AblationCell> cells;
  for (int k : {2, 3, 4, 10}) cells.push_back({DistributionKind::kGumbelMatching, k});
  return cells;
}

std::vector<Permutation> planted_orders(const Corpus& corpus) {
  std::vector<Permutation> orders;
  for (std::size_t i = 0; i < corpus.episodes.size(); ++i) {
    const auto& z = corpus.episodes[i].planted_z;
    if (!z) throw std::invalid_argument("episode " + std::to_string(i) + " has no planted order");
    orders.push_back(*z);
  }
  return orders;
}

AblationTable run_ablation(const std::function<Corpus(std::uint64_t)>& corpus_for_seed,
                           const std::vector<AblationCell>& cells, const std::vector<std::uint64_t>& seeds,
                           const TrainConfig& cfg, const AblationProgress& progress) {
  if (cells.empty() || seeds.empty()) throw std::invalid_argument("run_ablation: no cells or no seeds");
  cfg.validate();
  AblationTable table;
  table.seeds = seeds;
  for (const auto& c : cells) table.rows.push_back({c, {}});
  for (std::uint64_t seed : seeds) {
    const Corpus corpus = corpus_for_seed(seed);
    const auto orders = planted_orders(corpus);
    TrainConfig run = cfg;
    run.seed = seed;
    int steps = 0;
    bool ok = false;
    const DecoderParams theta = pretrain_decoder(corpus, orders, run, &steps, &ok);
    table.phase1_steps.push_back(steps);
    table.phase1_converged.push_back(ok);
    for (auto& row : table.rows) {
      TrainConfig cell = run;
      cell.distribution = row.cell.distribution;
      cell.k = row.cell.k;
      const double v = train_encoder(corpus, orders, theta, cell).final_nld;
      row.nld.push_back(v);
      if (progress) progress(seed, row.cell, v);
    }
  }
  return table;
}

std::string to_csv(const AblationTable& table) {
  std::string out = "distribution,k,mean_nld";
  for (auto s : table.seeds) out += ",seed_" + std::to_string(s);
  out += '\n';
  char buf[64];
  for (const auto& row : table.rows) {
    out += to_string(row.cell.distribution) + ',' + std::to_string(row.cell.k);
    std::snprintf(buf, sizeof buf, ",%.10g", row.mean_nld());
    out += buf;
    for (double v : row.nld) {
      std::snprintf(buf, sizeof buf, ",%.10g", v);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace order_infer
