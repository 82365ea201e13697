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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "order_infer/episode.hpp"

namespace order_infer {

enum class OrderRule { kLeftToRight, kCommonFirst, kRareFirst, kRandom, kContentFirst };

std::string to_string(OrderRule rule);
/// Accepts ltr, common_first, rare_first, random, content_first.
OrderRule parse_order_rule(const std::string& name);

struct GenDataOptions {
  OrderRule rule = OrderRule::kCommonFirst;
  int size = 64;
  int vocab_size = 50;  // content tokens; the end token is added on top
  int min_len = 5;
  int max_len = 12;
  std::uint64_t seed = 0;
  double zipf_exponent = 1.0;

  void validate() const;
};

struct CorpusMetadata {
  std::string name = "synthetic";
  std::uint64_t seed = 0;
  std::string rule;

  bool operator==(const CorpusMetadata&) const = default;
};

struct Corpus {
  std::vector<Episode> episodes;
  Vocab vocab;
  CorpusMetadata meta;

  /// Throws std::invalid_argument if empty or any episode is invalid.
  void validate() const;
};

/// Synthetic sentences: each draws `len` distinct tokens under a Zipf law
/// over a shuffled frequency ranking and lists them in id order, so surface
/// order and frequency are unrelated. The source is a copy of the target.
/// Tokens with id < vocab_size / 2 are tagged "content", the rest "filler".
/// Planted orders follow `rule`, with frequencies counted on the generated
/// corpus itself.
Corpus gen_data(const GenDataOptions& opts);

/// Occurrence counts of every target token id across the corpus.
std::map<int, int> token_counts(const std::vector<Episode>& episodes);

/// Generation order of `ep` under `rule`. Frequency rules break ties by
/// token id, then position. `seed` only matters for kRandom.
Permutation planted_order(OrderRule rule, const Episode& ep, const std::map<int, int>& counts,
                          std::uint64_t seed);

/// Writes `path` as JSONL (x, y, tags, planted_z per line) and the vocab plus
/// metadata to vocab_path(path).
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus(const std::filesystem::path& path);
std::filesystem::path vocab_path(const std::filesystem::path& corpus_path);

}  // namespace order_infer
