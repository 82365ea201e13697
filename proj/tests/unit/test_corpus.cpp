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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "order_infer/corpus.hpp"

using namespace order_infer;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("order_infer_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Corpus make(OrderRule rule, std::uint64_t seed = 5) {
  GenDataOptions o;
  o.rule = rule;
  o.seed = seed;
  o.size = 40;
  return gen_data(o);
}

}  // namespace

TEST_CASE("left-to-right rule plants the identity") {
  const Corpus c = make(OrderRule::kLeftToRight);
  CHECK(c.episodes.size() == 40);
  for (const auto& ep : c.episodes) {
    CHECK(*ep.planted_z == Permutation::identity(ep.y.size()));
    CHECK(ep.y.size() >= 5);
    CHECK(ep.y.size() <= 12);
    CHECK(ep.x == ep.y);
  }
  CHECK(c.vocab.size() == 51);
  CHECK(c.vocab.end_token == 50);
}

TEST_CASE("frequency rules follow the corpus counts") {
  const Corpus c = make(OrderRule::kCommonFirst);
  const auto counts = token_counts(c.episodes);
  for (const auto& ep : c.episodes) {
    const auto& z = *ep.planted_z;
    for (std::size_t t = 1; t < z.size(); ++t) {
      CHECK(counts.at(ep.y[z[t - 1] - 1]) >= counts.at(ep.y[z[t] - 1]));
    }
  }
  const Corpus rare = make(OrderRule::kRareFirst);
  for (std::size_t e = 0; e < c.episodes.size(); ++e) {
    auto z = std::vector<int>(c.episodes[e].planted_z->values().begin(), c.episodes[e].planted_z->values().end());
    std::reverse(z.begin(), z.end());
    CHECK(Permutation(z) == *rare.episodes[e].planted_z);
  }
}

TEST_CASE("surface order is independent of frequency") {
  // Targets list distinct tokens in id order.
  const Corpus c = make(OrderRule::kCommonFirst, 9);
  for (const auto& ep : c.episodes) {
    CHECK(std::is_sorted(ep.y.begin(), ep.y.end()));
    CHECK(std::adjacent_find(ep.y.begin(), ep.y.end()) == ep.y.end());
  }
  int non_trivial = 0;
  for (const auto& ep : c.episodes) non_trivial += *ep.planted_z == Permutation::identity(ep.y.size()) ? 0 : 1;
  CHECK(non_trivial > 30);
}

TEST_CASE("content-first and random rules") {
  const Corpus c = make(OrderRule::kContentFirst);
  for (const auto& ep : c.episodes) {
    const auto& z = *ep.planted_z;
    bool seen_filler = false;
    for (std::size_t t = 0; t < z.size(); ++t) {
      const bool content = ep.tags[z[t] - 1] == "content";
      CHECK(!(content && seen_filler));
      seen_filler = seen_filler || !content;
    }
  }
  const Corpus r = make(OrderRule::kRandom);
  const Corpus r2 = make(OrderRule::kRandom);
  for (std::size_t e = 0; e < r.episodes.size(); ++e) CHECK(*r.episodes[e].planted_z == *r2.episodes[e].planted_z);
}

TEST_CASE("corpus files are deterministic and round-trip") {
  const auto dir = scratch_dir("corpus");
  const Corpus c = make(OrderRule::kCommonFirst);
  write_corpus(c, dir / "a.jsonl");
  write_corpus(make(OrderRule::kCommonFirst), dir / "b.jsonl");
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(slurp(dir / "a.vocab.json") == slurp(dir / "b.vocab.json"));
  const Corpus back = read_corpus(dir / "a.jsonl");
  CHECK(back.vocab == c.vocab);
  CHECK(back.meta == c.meta);
  REQUIRE(back.episodes.size() == c.episodes.size());
  for (std::size_t e = 0; e < c.episodes.size(); ++e) {
    CHECK(back.episodes[e].y == c.episodes[e].y);
    CHECK(back.episodes[e].tags == c.episodes[e].tags);
    CHECK(*back.episodes[e].planted_z == *c.episodes[e].planted_z);
  }
  write_corpus(make(OrderRule::kCommonFirst, 6), dir / "c.jsonl");
  CHECK(slurp(dir / "a.jsonl") != slurp(dir / "c.jsonl"));
  CHECK_THROWS(read_corpus(dir / "missing.jsonl"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("invalid options and episodes") {
  CHECK_THROWS_AS(parse_order_rule("alphabetical"), std::invalid_argument);
  CHECK(parse_order_rule("rare_first") == OrderRule::kRareFirst);
  GenDataOptions o;
  o.size = 0;
  CHECK_THROWS_AS(gen_data(o), std::invalid_argument);
  o = {};
  o.max_len = 60;
  CHECK_THROWS_AS(gen_data(o), std::invalid_argument);
  const Vocab v = Vocab::synthetic(3);
  CHECK_THROWS_AS(validate(Episode{{0}, {}, {}, {}}, v), std::invalid_argument);
  CHECK_THROWS_AS(validate(Episode{{0}, {9}, {}, {}}, v), std::invalid_argument);
  CHECK_THROWS_AS(validate(Episode{{0}, {1, 2}, {"a"}, {}}, v), std::invalid_argument);
  Vocab dup{{"a", "a"}, std::nullopt};
  CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
}
