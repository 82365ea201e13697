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

#include <cmath>

#include "doctest.h"
#include "order_infer/analysis.hpp"
#include "order_infer/corpus.hpp"
#include "order_infer/rng.hpp"
#include "support/oracles.hpp"

using namespace order_infer;

namespace {

Permutation shuffled(int n, Rng& rng) {
  std::vector<int> z(n);
  for (int i = 0; i < n; ++i) z[i] = i + 1;
  for (int i = n - 1; i > 0; --i) std::swap(z[i], z[rng.below(i + 1)]);
  return Permutation(z);
}

std::vector<int> vec(const Permutation& p) { return {p.values().begin(), p.values().end()}; }

}  // namespace

TEST_CASE("nld examples") {
  CHECK(nld(Permutation({1, 2, 3}), Permutation({1, 2, 3})) == 0.0);
  CHECK(nld(Permutation({1, 2, 3}), Permutation({2, 1, 3})) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(nld(Permutation({1}), Permutation({1, 2})), std::invalid_argument);
  CHECK_THROWS_AS(nld(Permutation(), Permutation()), std::invalid_argument);
}

TEST_CASE("nld of a reversal") {
  // Odd n keeps the middle element, giving (n - 1) / n. For even n no
  // element can be kept and the distance is n.
  for (int n = 2; n <= 64; ++n) {
    const auto w = Permutation::identity(n), z = Permutation::reversed(n);
    const int lev = oracle::levenshtein_dp(vec(w), vec(z));
    CHECK(levenshtein(w.values(), z.values()) == lev);
    CHECK(lev == (n % 2 == 1 ? n - 1 : n));
    CHECK(nld(w, z) == doctest::Approx(static_cast<double>(lev) / n));
  }
}

TEST_CASE("levenshtein agrees with the DP table") {
  Rng rng(21);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(12));
    const auto w = shuffled(n, rng), z = shuffled(n, rng);
    const int lev = levenshtein(w.values(), z.values());
    CHECK(lev == oracle::levenshtein_dp(vec(w), vec(z)));
    CHECK(nld(w, z) == nld(z, w));
    CHECK((nld(w, z) == 0.0) == (w == z));
    const auto u = shuffled(n, rng);
    CHECK(lev <= levenshtein(w.values(), u.values()) + levenshtein(u.values(), z.values()));
  }
  const std::vector<int> a{1, 2, 3, 4}, b{2, 3};
  CHECK(levenshtein(a, b) == 2);
  CHECK(levenshtein(a, {}) == 4);
}

TEST_CASE("orc examples and properties") {
  for (int n = 2; n <= 20; ++n) {
    CHECK(orc(Permutation::identity(n), Permutation::identity(n)) == doctest::Approx(1.0));
    CHECK(orc(Permutation::identity(n), Permutation::reversed(n)) == doctest::Approx(-1.0));
  }
  Rng rng(22);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 6;
    const auto w = shuffled(n, rng), z = shuffled(n, rng);
    CHECK(std::abs(orc(w, z) - oracle::spearman_covariance(vec(w), vec(z))) < 1e-10);
    CHECK(orc(w, z) == orc(z, w));
    CHECK((orc(w, z) == 1.0) == (w == z));
    // Relabel both orders by the same bijection of position labels.
    const auto sigma = shuffled(n, rng);
    std::vector<int> w2(n), z2(n);
    for (int i = 0; i < n; ++i) {
      w2[i] = sigma[w[i] - 1];
      z2[i] = sigma[z[i] - 1];
    }
    CHECK(nld(Permutation(w2), Permutation(z2)) == nld(w, z));
  }
  CHECK_THROWS_AS(orc(Permutation({1}), Permutation({1})), std::invalid_argument);
  CHECK_THROWS_AS(orc(Permutation({1, 2}), Permutation({1, 2, 3})), std::invalid_argument);
}

TEST_CASE("generation index statistics") {
  SUBCASE("left-to-right decodes reproduce mean normalized positions") {
    std::vector<DecodedOrder> decoded;
    decoded.push_back({{3, 4, 5}, Permutation::identity(3), {"a", "b", "a"}});
    decoded.push_back({{3, 4}, Permutation::identity(2), {"b", "a"}});
    const auto stats = generation_index_stats(decoded);
    REQUIRE(stats.size() == 2);
    // a: 1/3, 3/3, 2/2 ; b: 2/3, 1/2
    const double mean_a = (1.0 / 3 + 1.0 + 1.0) / 3, mean_b = (2.0 / 3 + 0.5) / 2;
    CHECK(stats[0].tag == "b");
    CHECK(stats[0].mean == doctest::Approx(mean_b));
    CHECK(stats[1].mean == doctest::Approx(mean_a));
    CHECK(stats[1].count == 3);
    CHECK(stats[1].p50 == doctest::Approx(1.0));
  }
  SUBCASE("single class closed form") {
    Rng rng(23);
    std::vector<DecodedOrder> decoded;
    double expected = 0.0;
    int tokens = 0;
    for (int e = 0; e < 40; ++e) {
      const int n = 1 + static_cast<int>(rng.below(9));
      decoded.push_back({std::vector<int>(n, 0), shuffled(n, rng), {}});
      expected += n * (n + 1.0) / (2.0 * n);
      tokens += n;
    }
    const auto stats = generation_index_stats(decoded);
    REQUIRE(stats.size() == 1);
    CHECK(stats[0].tag == kUntagged);
    CHECK(stats[0].count == tokens);
    CHECK(stats[0].mean == doctest::Approx(expected / tokens));
  }
  SUBCASE("planted content-first orders separate the tags") {
    GenDataOptions opts;
    opts.rule = OrderRule::kContentFirst;
    opts.size = 50;
    opts.seed = 3;
    const Corpus c = gen_data(opts);
    std::vector<DecodedOrder> decoded;
    for (const auto& ep : c.episodes) decoded.push_back({ep.y, *ep.planted_z, ep.tags});
    const auto stats = generation_index_stats(decoded);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].tag == "content");
    CHECK(stats[0].mean < stats[1].mean);
  }
  const auto csv = to_csv({{"a", 2, 0.5, 0.25, 0.5, 0.75}});
  CHECK(csv == "tag,count,mean_norm_index,p25,p50,p75\na,2,0.5,0.25,0.5,0.75\n");
  CHECK_THROWS_AS(generation_index_stats({{{1, 2}, Permutation::identity(3), {}}}), std::invalid_argument);
}

TEST_CASE("perturbation study on a planted encoder") {
  // Tokens 0..4 carry a score a_v; token 5 is a marker that flips the
  // induced order, token 6 only touches an unused feature.
  EncoderParams phi = EncoderParams::zeros(7, 2);
  for (int v = 0; v < 5; ++v) phi.embed(v, 0) = 0.1 * (v + 1);
  phi.embed(5, 0) = 100.0;
  phi.embed(6, 1) = 5.0;
  // X(t, i) = c_i * (t - 1) / (n - 1), c_i = -e1 + e1 * s1.
  phi.pair_map(0, 1) = -1.0;
  phi.pair_map(2, 1) = 1.0;
  Episode ep;
  ep.y = {0, 1, 2, 3, 4};
  ep.x = {0, 1, 2, 3, 4, 5, 6};
  const auto results = perturbation_study(phi, ep, {{}, {6}, {5}});
  REQUIRE(results.size() == 3);
  CHECK(modal_order(phi, ep, DistributionKind::kGumbelMatching) == Permutation::identity(5));
  CHECK(results[0].nld == 0.0);
  CHECK(results[1].nld == 0.0);
  CHECK(results[2].order == Permutation::reversed(5));
  CHECK(results[2].nld > 0.3);
  CHECK_THROWS_AS(perturbation_study(phi, ep, {{9}}), std::invalid_argument);
}
