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

#include "order_infer/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include "order_infer/assignment.hpp"

namespace order_infer {
namespace {

std::span<const int> view(const Permutation& p) { return p.values(); }

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

int levenshtein(std::span<const int> a, std::span<const int> b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int keep = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, keep});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double nld(const Permutation& w, const Permutation& z) {
  if (w.size() != z.size()) throw std::invalid_argument("nld: length mismatch");
  if (w.size() == 0) throw std::invalid_argument("nld: empty orders");
  return static_cast<double>(levenshtein(view(w), view(z))) / static_cast<double>(w.size());
}

double orc(const Permutation& w, const Permutation& z) {
  if (w.size() != z.size()) throw std::invalid_argument("orc: length mismatch");
  const auto n = static_cast<double>(w.size());
  if (w.size() < 2) throw std::invalid_argument("orc: needs n >= 2");
  double sq = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double diff = w[i] - z[i];
    sq += diff * diff;
  }
  return 1.0 - 6.0 * sq / (n * n * n - n);
}

std::vector<TagStats> generation_index_stats(const std::vector<DecodedOrder>& decoded) {
  std::map<std::string, std::vector<double>> by_tag;
  for (const auto& d : decoded) {
    if (d.z.size() != d.y.size()) throw std::invalid_argument("generation_index_stats: |z| != |y|");
    if (!d.tags.empty() && d.tags.size() != d.y.size()) {
      throw std::invalid_argument("generation_index_stats: tags not aligned");
    }
    const auto steps = d.z.generation_steps();
    const auto n = static_cast<double>(d.y.size());
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      const std::string& tag = d.tags.empty() ? std::string(kUntagged) : d.tags[i];
      by_tag[tag].push_back((steps[i] + 1) / n);
    }
  }
  std::vector<TagStats> out;
  for (auto& [tag, v] : by_tag) {
    std::sort(v.begin(), v.end());
    TagStats s;
    s.tag = tag;
    s.count = static_cast<int>(v.size());
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.p25 = quantile(v, 0.25);
    s.p50 = quantile(v, 0.5);
    s.p75 = quantile(v, 0.75);
    out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(), [](const TagStats& a, const TagStats& b) { return a.mean < b.mean; });
  return out;
}

std::string to_csv(const std::vector<TagStats>& stats) {
  std::string out = "tag,count,mean_norm_index,p25,p50,p75\n";
  char buf[256];
  for (const auto& s : stats) {
    std::snprintf(buf, sizeof(buf), ",%d,%.10g,%.10g,%.10g,%.10g\n", s.count, s.mean, s.p25, s.p50, s.p75);
    out += s.tag + buf;
  }
  return out;
}

Permutation modal_order(const EncoderParams& phi, const Episode& ep, DistributionKind kind,
                        const SourceMask& mask) {
  if (kind == DistributionKind::kGumbelMatching) return from_matrix(hungarian_max(matching_scores(phi, ep, mask)));
  return OrderDistribution::plackett_luce(plackett_luce_scores(phi, ep, mask)).modal();
}

std::vector<PerturbationResult> perturbation_study(const EncoderParams& phi, const Episode& ep,
                                                   const std::vector<std::vector<int>>& masks,
                                                   DistributionKind kind) {
  const Permutation base = modal_order(phi, ep, kind);
  std::vector<PerturbationResult> out;
  for (const auto& masked : masks) {
    SourceMask keep(ep.x.size(), true);
    for (int j : masked) {
      if (j < 0 || j >= static_cast<int>(ep.x.size())) {
        throw std::invalid_argument("perturbation_study: mask position out of range");
      }
      keep[j] = false;
    }
    PerturbationResult r;
    r.masked = masked;
    r.order = modal_order(phi, ep, kind, keep);
    r.nld = nld(base, r.order);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace order_infer
