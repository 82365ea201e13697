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
#include "order_infer/trainer.hpp"
#include "order_infer/rng.hpp"
#include "support/oracles.hpp"

using namespace order_infer;

namespace {

Matrix random_matrix(Eigen::Index n, Rng& rng, double scale) {
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = scale * rng.normal();
  return m;
}

/// Exact Gumbel-Matching law by enumeration, independent of the library.
struct ExactLaw {
  std::vector<Permutation> perms;
  std::vector<double> prob;
  Matrix marginals;

  explicit ExactLaw(const Matrix& x) {
    const double log_z = oracle::brute_log_partition(x);
    marginals = oracle::brute_marginals(x);
    perms = all_permutations(static_cast<std::size_t>(x.rows()));
    for (const auto& p : perms) {
      double s = 0.0;
      for (std::size_t t = 0; t < p.size(); ++t) s += x(static_cast<Eigen::Index>(t), p[t] - 1);
      prob.push_back(std::exp(s - log_z));
    }
  }
  std::size_t draw(Rng& rng) const {
    double u = rng.uniform(), acc = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      acc += prob[i];
      if (u < acc) return i;
    }
    return prob.size() - 1;
  }
  Matrix score(std::size_t i) const { return to_matrix(perms[i]).matrix() - marginals; }
};

double planted_reward(const Permutation& z, const Permutation& star) {
  return -3.0 * levenshtein(z.values(), star.values()) - 10.0;
}

}  // namespace

TEST_CASE("baseline") {
  const std::vector<double> two{-1.0, -3.0};
  CHECK(baseline(two) == -2.0);
  const std::vector<double> one{-4.5};
  CHECK(baseline(one) == -4.5);
  Rng rng(31);
  std::vector<double> v;
  double sum = 0.0;
  for (int i = 0; i < 37; ++i) {
    v.push_back(rng.normal() * 10);
    sum += v.back();
  }
  CHECK(baseline(v) == doctest::Approx(sum / 37).epsilon(1e-14));
  CHECK_THROWS_AS(baseline(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("beta annealing") {
  TrainConfig cfg;
  cfg.beta = {0.5, 0.05, 3};
  CHECK(anneal_beta(cfg, 0) == 0.5);
  CHECK(anneal_beta(cfg, 1) == doctest::Approx(0.5 * std::sqrt(0.05 / 0.5)));
  CHECK(anneal_beta(cfg, 2) == 0.05);
  CHECK(anneal_beta(cfg, 100) == 0.05);
  cfg.beta = {0.2, 0.2, 10};
  for (int s = 0; s < 12; ++s) CHECK(anneal_beta(cfg, s) == 0.2);
  cfg.beta = {1.0, 1e-3, 101};
  for (int s = 1; s < 101; ++s) CHECK(anneal_beta(cfg, s) < anneal_beta(cfg, s - 1));
  cfg.beta = {0.0, 1.0, 11};
  CHECK(anneal_beta(cfg, 5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(anneal_beta(cfg, -1), std::invalid_argument);
}

TEST_CASE("score-function identity with any constant baseline") {
  Rng rng(32);
  for (int n = 2; n <= 4; ++n) {
    const Matrix x = random_matrix(n, rng, 1.0);
    const auto d = OrderDistribution::gumbel_matching(x, 1.0, 200, DensityMode::kExact);
    const ExactLaw law(x);
    for (double c : {0.0, 3.5, -12.0}) {
      Matrix acc = Matrix::Zero(n, n);
      for (std::size_t i = 0; i < law.perms.size(); ++i) {
        std::vector<OrderSample> s{{law.perms[i], d.log_density(law.perms[i])}};
        const std::vector<double> r{c};
        acc += law.prob[i] * score_function_gradient(d, s, r, 0.0, false);
      }
      CHECK(acc.cwiseAbs().maxCoeff() < 1e-7);
    }
  }
}

TEST_CASE("constant rewards give a pure entropy update") {
  Rng rng(33);
  const Matrix x = random_matrix(4, rng, 1.0);
  const auto d = OrderDistribution::gumbel_matching(x, 1.0, 200, DensityMode::kExact);
  const auto samples = sample(d, 5, 1);
  const std::vector<double> flat(5, -7.0);
  CHECK(score_function_gradient(d, samples, flat, 0.0).cwiseAbs().maxCoeff() == 0.0);
  Matrix entropy_only = Matrix::Zero(4, 4);
  for (const auto& s : samples) entropy_only -= 0.3 * s.log_density * d.grad_log_density(s.z);
  CHECK((score_function_gradient(d, samples, flat, 0.3) - entropy_only / 5.0).cwiseAbs().maxCoeff() < 1e-12);
  const std::vector<double> single{-2.0};
  CHECK(score_function_gradient(d, std::span(samples).first(1), single, 0.0).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(score_function_gradient(d, samples, single, 0.0), std::invalid_argument);
}

TEST_CASE("Monte-Carlo gradient matches K-tuple enumeration") {
  Rng rng(34);
  const int n = 3, k = 2;
  const Matrix x = random_matrix(n, rng, 0.8);
  const Permutation star({2, 3, 1});
  const auto d = OrderDistribution::gumbel_matching(x, 1.0, 200, DensityMode::kExact);
  const ExactLaw law(x);
  const std::size_t m = law.perms.size();

  // Exact expectation of the estimator over all K-tuples.
  Matrix expected = Matrix::Zero(n, n);
  Matrix true_grad = Matrix::Zero(n, n);
  for (std::size_t a = 0; a < m; ++a) {
    true_grad += law.prob[a] * planted_reward(law.perms[a], star) * law.score(a);
    for (std::size_t b = 0; b < m; ++b) {
      const double ra = planted_reward(law.perms[a], star), rb = planted_reward(law.perms[b], star);
      const double mean = 0.5 * (ra + rb);
      expected += law.prob[a] * law.prob[b] * 0.5 * ((ra - mean) * law.score(a) + (rb - mean) * law.score(b));
    }
  }
  // The leave-in baseline scales the expectation by (1 - 1/K).
  CHECK((expected - (1.0 - 1.0 / k) * true_grad).cwiseAbs().maxCoeff() < 1e-12);

  const int draws = 100000;
  Matrix sum = Matrix::Zero(n, n), sq = Matrix::Zero(n, n);
  Rng sampler(35);
  for (int it = 0; it < draws; ++it) {
    std::vector<OrderSample> s;
    std::vector<double> r;
    for (int j = 0; j < k; ++j) {
      const auto& z = law.perms[law.draw(sampler)];
      s.push_back({z, d.log_density(z)});
      r.push_back(planted_reward(z, star));
    }
    const Matrix g = score_function_gradient(d, s, r, 0.0);
    sum += g;
    sq += g.cwiseProduct(g);
  }
  const Matrix mean = sum / draws;
  const Matrix se = ((sq / draws - mean.cwiseProduct(mean)) / draws).cwiseSqrt();
  // Distance of the mean vector, measured in units of its standard error.
  CHECK((mean - expected).norm() <= 2.0 * se.norm());
  MESSAGE("max |mean - expected| / se = " << ((mean - expected).cwiseAbs().cwiseQuotient(se)).maxCoeff());
}

TEST_CASE("Plackett-Luce sampler gives an unbiased score-function estimate") {
  Rng rng(36);
  Vector s(3);
  s << 0.4, -0.3, 0.9;
  const auto d = OrderDistribution::plackett_luce(s);
  const Permutation star({3, 1, 2});
  Vector expected = Vector::Zero(3);
  for (const auto& z : all_permutations(3)) {
    expected += std::exp(d.log_density(z)) * planted_reward(z, star) * d.grad_log_density(z).col(0);
  }
  const int draws = 100000;
  Vector sum = Vector::Zero(3), sq = Vector::Zero(3);
  for (int it = 0; it < draws; ++it) {
    const OrderSample smp = d.sample_one(37, static_cast<std::uint64_t>(it));
    const std::vector<double> r{planted_reward(smp.z, star)};
    const Vector g = score_function_gradient(d, std::span(&smp, 1), r, 0.0, false).col(0);
    sum += g;
    sq += g.cwiseProduct(g);
  }
  const Vector mean = sum / draws;
  const Vector se = ((sq / draws - mean.cwiseProduct(mean)) / draws).cwiseSqrt();
  CHECK((mean - expected).norm() <= 2.0 * se.norm());
}

TEST_CASE("the K-sample baseline reduces variance") {
  Rng rng(38);
  const Matrix x = random_matrix(4, rng, 0.7);
  const auto d = OrderDistribution::gumbel_matching(x, 1.0, 200, DensityMode::kBethe);
  const Permutation star({4, 2, 1, 3});
  auto variance = [&](bool with_baseline) {
    const int draws = 10000;
    Matrix sum = Matrix::Zero(4, 4), sq = Matrix::Zero(4, 4);
    for (int it = 0; it < draws; ++it) {
      const auto samples = sample(d, 4, 1000 + it);
      std::vector<double> r;
      for (const auto& smp : samples) r.push_back(planted_reward(smp.z, star));
      const Matrix g = score_function_gradient(d, samples, r, 0.0, with_baseline);
      sum += g;
      sq += g.cwiseProduct(g);
    }
    const Matrix mean = sum / draws;
    return (sq / draws - mean.cwiseProduct(mean)).sum();
  };
  const double with = variance(true), without = variance(false);
  MESSAGE("variance with baseline " << with << ", without " << without);
  CHECK(with <= without);
}

TEST_CASE("train_step contract") {
  GenDataOptions opts;
  opts.size = 6;
  opts.vocab_size = 10;
  opts.min_len = 1;
  opts.max_len = 5;
  opts.seed = 2;
  const Corpus corpus = gen_data(opts);
  TrainConfig cfg;
  cfg.k = 3;
  cfg.decoder_dim = 4;
  cfg.encoder_dim = 3;
  cfg.seed = 11;
  const int v = corpus.vocab.size();

  SUBCASE("one decoder evaluation per sample and determinism") {
    auto theta = DecoderParams::random(v, 4, 1);
    auto phi = EncoderParams::random(v, 3, 1);
    auto theta2 = theta;
    auto phi2 = phi;
    for (auto dist : {DistributionKind::kGumbelMatching, DistributionKind::kPlackettLuce}) {
      cfg.distribution = dist;
      const auto r1 = train_step(theta, phi, corpus.episodes, cfg, 3);
      const auto r2 = train_step(theta2, phi2, corpus.episodes, cfg, 3);
      CHECK(r1.decoder_evaluations == static_cast<long>(corpus.episodes.size()) * cfg.k);
      CHECK(to_csv_row(r1) == to_csv_row(r2));
      CHECK(theta.embed == theta2.embed);
      CHECK(phi.pair_map == phi2.pair_map);
      CHECK(phi.pl_map == phi2.pl_map);
      CHECK(std::isfinite(r1.elbo));
      CHECK(r1.grad_norm_theta > 0.0);
    }
    cfg.threads = 3;
    auto theta3 = theta;
    auto phi3 = phi;
    const auto a = train_step(theta, phi, corpus.episodes, cfg, 4);
    cfg.threads = 1;
    const auto b = train_step(theta3, phi3, corpus.episodes, cfg, 4);
    CHECK(to_csv_row(a) == to_csv_row(b));
    CHECK(phi.embed == phi3.embed);
  }
  SUBCASE("frozen decoder is left untouched") {
    auto theta = DecoderParams::random(v, 4, 1);
    auto phi = EncoderParams::random(v, 3, 1);
    const auto before = theta;
    cfg.train_decoder = false;
    const auto r = train_step(theta, phi, corpus.episodes, cfg, 0);
    CHECK(theta.token_map == before.token_map);
    CHECK(r.grad_norm_theta == 0.0);
  }
  SUBCASE("single-position episodes contribute no encoder gradient") {
    auto theta = DecoderParams::random(v, 4, 1);
    auto phi = EncoderParams::random(v, 3, 1);
    const auto before = phi;
    std::vector<Episode> ones{Episode{{1}, {1}, {}, {}}, Episode{{2, 3}, {4}, {}, {}}};
    for (auto dist : {DistributionKind::kGumbelMatching, DistributionKind::kPlackettLuce}) {
      cfg.distribution = dist;
      const auto r = train_step(theta, phi, ones, cfg, 0);
      CHECK(r.log_q == 0.0);
      CHECK(r.grad_norm_phi == 0.0);
      CHECK(phi.embed == before.embed);
    }
  }
  SUBCASE("non-finite gradients abort without an update") {
    auto theta = DecoderParams::random(v, 4, 1);
    auto phi = EncoderParams::random(v, 3, 1);
    theta.token_map.setConstant(1e308);
    theta.start.setConstant(10.0);
    const auto theta_before = theta;
    const auto phi_before = phi;
    CHECK_THROWS_AS(train_step(theta, phi, corpus.episodes, cfg, 0), NonFiniteGradient);
    CHECK(phi.embed == phi_before.embed);
    CHECK(theta.slot_left == theta_before.slot_left);
  }
  auto theta0 = DecoderParams::zeros(v, 4);
  auto phi0 = EncoderParams::zeros(v, 3);
  CHECK_THROWS_AS(train_step(theta0, phi0, std::span<const Episode>(), cfg, 0), std::invalid_argument);
}

TEST_CASE("config round trip and validation") {
  TrainConfig cfg;
  cfg.k = 10;
  cfg.distribution = DistributionKind::kPlackettLuce;
  cfg.density = DensityMode::kExact;
  cfg.beta = {0.4, 0.02, 77};
  const TrainConfig back = train_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"k", 0}}), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"lr_phi", -1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"kk", 2}}), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"k", "two"}}), std::invalid_argument);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"distribution", "mallows"}}), std::invalid_argument);
  CHECK(step_csv_header().rfind("step,elbo,log_p,log_q,entropy,beta", 0) == 0);
}

TEST_CASE("order recovery on a small corpus with a rising ELBO") {
  GenDataOptions opts;
  opts.rule = OrderRule::kLeftToRight;
  opts.size = 16;
  opts.vocab_size = 20;
  opts.min_len = 3;
  opts.max_len = 7;
  opts.seed = 4;
  const Corpus corpus = gen_data(opts);
  TrainConfig cfg;
  cfg.seed = 4;
  cfg.batch_size = 8;
  cfg.total_steps = 1000;
  cfg.lr_phi = 0.02;
  cfg.beta = {1.0, 0.01, 300};
  cfg.sinkhorn_iterations = 50;
  const auto result = recover_order_experiment(corpus, OrderRule::kLeftToRight, cfg);
  CHECK(result.phase1_converged);
  CHECK(result.final_nld <= 0.05);
  MESSAGE("left-to-right recovery NLD " << result.final_nld);
  // Non-overlapping 200-step window means of the ELBO.
  std::vector<double> windows;
  for (std::size_t s = 0; s + 200 <= result.history.size(); s += 200) {
    double m = 0.0;
    for (std::size_t i = s; i < s + 200; ++i) m += result.history[i].elbo;
    windows.push_back(m / 200);
  }
  int regressions = 0;
  for (std::size_t w = 1; w < windows.size(); ++w) regressions += windows[w] < windows[w - 1] ? 1 : 0;
  CHECK(regressions <= static_cast<int>(0.05 * static_cast<double>(windows.size() - 1)));
}
