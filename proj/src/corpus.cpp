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

#include "order_infer/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "order_infer/rng.hpp"

namespace order_infer {
namespace {

using nlohmann::json;

constexpr const char* kContentTag = "content";
constexpr const char* kFillerTag = "filler";

std::vector<int> identity_order(std::size_t n) {
  std::vector<int> z(n);
  std::iota(z.begin(), z.end(), 1);
  return z;
}

}  // namespace

std::string to_string(OrderRule rule) {
  switch (rule) {
    case OrderRule::kLeftToRight: return "ltr";
    case OrderRule::kCommonFirst: return "common_first";
    case OrderRule::kRareFirst: return "rare_first";
    case OrderRule::kRandom: return "random";
    case OrderRule::kContentFirst: return "content_first";
  }
  return "unknown";
}

OrderRule parse_order_rule(const std::string& name) {
  for (auto r : {OrderRule::kLeftToRight, OrderRule::kCommonFirst, OrderRule::kRareFirst, OrderRule::kRandom,
                 OrderRule::kContentFirst}) {
    if (to_string(r) == name) return r;
  }
  throw std::invalid_argument("unknown order rule '" + name + "'");
}

void GenDataOptions::validate() const {
  if (size < 1) throw std::invalid_argument("gen_data: size must be >= 1");
  if (vocab_size < 1) throw std::invalid_argument("gen_data: vocab_size must be >= 1");
  if (min_len < 1 || max_len < min_len) throw std::invalid_argument("gen_data: bad length range");
  if (max_len > vocab_size) throw std::invalid_argument("gen_data: max_len exceeds vocab_size");
  if (!(zipf_exponent >= 0.0)) throw std::invalid_argument("gen_data: zipf exponent must be >= 0");
}

void Corpus::validate() const {
  vocab.validate();
  if (episodes.empty()) throw std::invalid_argument("corpus: no episodes");
  for (const auto& ep : episodes) order_infer::validate(ep, vocab);
}

std::map<int, int> token_counts(const std::vector<Episode>& episodes) {
  std::map<int, int> counts;
  for (const auto& ep : episodes)
    for (int t : ep.y) ++counts[t];
  return counts;
}

Permutation planted_order(OrderRule rule, const Episode& ep, const std::map<int, int>& counts,
                          std::uint64_t seed) {
  const std::size_t n = ep.y.size();
  std::vector<int> z = identity_order(n);
  auto count_of = [&](int pos) {
    const auto it = counts.find(ep.y[pos - 1]);
    return it == counts.end() ? 0 : it->second;
  };
  auto common_first = [&] {
    std::stable_sort(z.begin(), z.end(), [&](int a, int b) {
      const int ca = count_of(a), cb = count_of(b);
      if (ca != cb) return ca > cb;
      return ep.y[a - 1] < ep.y[b - 1];
    });
  };
  switch (rule) {
    case OrderRule::kLeftToRight: break;
    case OrderRule::kCommonFirst: common_first(); break;
    case OrderRule::kRareFirst:
      common_first();
      std::reverse(z.begin(), z.end());
      break;
    case OrderRule::kRandom: {
      Rng rng(seed);
      for (std::size_t i = n; i > 1; --i) std::swap(z[i - 1], z[rng.below(i)]);
      break;
    }
    case OrderRule::kContentFirst:
      if (ep.tags.size() != n) throw std::invalid_argument("planted_order: content_first needs tags");
      std::stable_partition(z.begin(), z.end(), [&](int pos) { return ep.tags[pos - 1] == kContentTag; });
      break;
  }
  return Permutation(std::move(z));
}

Corpus gen_data(const GenDataOptions& opts) {
  opts.validate();
  const int v = opts.vocab_size;
  // Frequency rank -> token id, shuffled so that id order (the surface order)
  // carries no frequency information.
  std::vector<int> by_rank(v);
  std::iota(by_rank.begin(), by_rank.end(), 0);
  Rng shuffle(opts.seed, "data", 0);
  for (int i = v; i > 1; --i) std::swap(by_rank[i - 1], by_rank[shuffle.below(i)]);
  std::vector<double> weight(v);
  for (int r = 0; r < v; ++r) weight[by_rank[r]] = 1.0 / std::pow(r + 1.0, opts.zipf_exponent);

  Corpus corpus;
  corpus.vocab = Vocab::synthetic(v);
  corpus.meta = {"synthetic", opts.seed, to_string(opts.rule)};
  for (int e = 0; e < opts.size; ++e) {
    Rng rng(opts.seed, "data", static_cast<std::uint64_t>(e) + 1);
    const int len = opts.min_len + static_cast<int>(rng.below(opts.max_len - opts.min_len + 1));
    // Weighted sampling without replacement (exponential keys).
    std::vector<std::pair<double, int>> keys(v);
    for (int t = 0; t < v; ++t) keys[t] = {-std::log(1.0 - rng.uniform()) / weight[t], t};
    std::partial_sort(keys.begin(), keys.begin() + len, keys.end());
    Episode ep;
    for (int i = 0; i < len; ++i) ep.y.push_back(keys[i].second);
    std::sort(ep.y.begin(), ep.y.end());
    ep.x = ep.y;
    for (int t : ep.y) ep.tags.emplace_back(t < v / 2 ? kContentTag : kFillerTag);
    corpus.episodes.push_back(std::move(ep));
  }
  const auto counts = token_counts(corpus.episodes);
  for (std::size_t e = 0; e < corpus.episodes.size(); ++e) {
    auto& ep = corpus.episodes[e];
    ep.planted_z = planted_order(opts.rule, ep, counts, substream_seed(opts.seed, "order", e));
  }
  return corpus;
}

std::filesystem::path vocab_path(const std::filesystem::path& corpus_path) {
  auto p = corpus_path;
  p.replace_extension(".vocab.json");
  return p;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  corpus.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& ep : corpus.episodes) {
    json j;
    j["x"] = ep.x;
    j["y"] = ep.y;
    j["tags"] = ep.tags;
    if (ep.planted_z) {
      j["planted_z"] = std::vector<int>(ep.planted_z->values().begin(), ep.planted_z->values().end());
    }
    out << j.dump() << '\n';
  }
  json v;
  v["tokens"] = corpus.vocab.tokens;
  v["end_token"] = corpus.vocab.end_token ? json(*corpus.vocab.end_token) : json(nullptr);
  v["metadata"] = {{"name", corpus.meta.name}, {"seed", corpus.meta.seed}, {"rule", corpus.meta.rule}};
  std::ofstream vout(vocab_path(path), std::ios::binary);
  if (!vout) throw std::runtime_error("cannot write " + vocab_path(path).string());
  vout << v.dump(2) << '\n';
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read corpus " + path.string());
  std::ifstream vin(vocab_path(path));
  if (!vin) throw std::runtime_error("cannot read vocab " + vocab_path(path).string());
  Corpus corpus;
  try {
    const json v = json::parse(vin);
    corpus.vocab.tokens = v.at("tokens").get<std::vector<std::string>>();
    if (v.contains("end_token") && !v["end_token"].is_null()) corpus.vocab.end_token = v["end_token"].get<int>();
    if (v.contains("metadata")) {
      const auto& m = v["metadata"];
      corpus.meta.name = m.value("name", "");
      corpus.meta.seed = m.value("seed", std::uint64_t{0});
      corpus.meta.rule = m.value("rule", "");
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      Episode ep;
      ep.x = j.at("x").get<std::vector<int>>();
      ep.y = j.at("y").get<std::vector<int>>();
      if (j.contains("tags")) ep.tags = j["tags"].get<std::vector<std::string>>();
      if (j.contains("planted_z")) ep.planted_z = Permutation(j["planted_z"].get<std::vector<int>>());
      corpus.episodes.push_back(std::move(ep));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed corpus " + path.string() + ": " + e.what());
  }
  corpus.validate();
  return corpus;
}

}  // namespace order_infer
