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

#include "order_infer/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "order_infer/analysis.hpp"
#include "order_infer/parallel.hpp"
#include "order_infer/rng.hpp"

namespace order_infer {
namespace {

using nlohmann::json;

std::string density_name(DensityMode m) { return m == DensityMode::kExact ? "exact" : "bethe"; }

DensityMode parse_density(const std::string& s) {
  if (s == "exact") return DensityMode::kExact;
  if (s == "bethe") return DensityMode::kBethe;
  throw std::invalid_argument("unknown density mode '" + s + "'");
}

struct EpisodeWork {
  DecoderParams g_theta;
  EncoderParams g_phi;
  double elbo = 0.0;
  double log_p = 0.0;
  double log_q = 0.0;
  double base = 0.0;
  long evaluations = 0;
};

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (k < 1) fail("k must be >= 1");
  if (!(lr_theta > 0.0) || !(lr_phi > 0.0)) fail("learning rates must be > 0");
  if (!(beta.start >= 0.0) || !(beta.end >= 0.0)) fail("beta must be >= 0");
  if (beta.steps < 1) fail("beta_steps must be >= 1");
  if (!(tau > 0.0)) fail("tau must be > 0");
  if (sinkhorn_iterations < 1) fail("sinkhorn_iterations must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (total_steps < 0) fail("total_steps must be >= 0");
  if (decoder_dim < 1 || encoder_dim < 1) fail("dims must be >= 1");
  if (!(init_scale >= 0.0)) fail("init_scale must be >= 0");
  if (phase1_max_steps < 0 || phase1_check_every < 1) fail("bad phase-1 settings");
  if (bethe.max_iters < 1 || !(bethe.tol > 0.0) || bethe.damping < 0.0 || bethe.damping >= 1.0) {
    fail("bad bethe options");
  }
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("train config: expected a JSON object");
  static const std::set<std::string> known = {
      "k",           "beta_start",    "beta_end",       "beta_steps",        "lr_theta",
      "lr_phi",      "tau",           "sinkhorn_iterations", "batch_size",  "seed",
      "total_steps", "distribution",  "density",        "bethe_max_iters",   "bethe_tol",
      "bethe_damping", "train_decoder", "decoder_dim",  "encoder_dim",       "init_scale",
      "phase1_max_steps", "phase1_check_every", "threads"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("train config: unknown key '" + key + "'");
  }
  TrainConfig c;
  try {
    c.k = j.value("k", c.k);
    c.beta.start = j.value("beta_start", c.beta.start);
    c.beta.end = j.value("beta_end", c.beta.end);
    c.beta.steps = j.value("beta_steps", c.beta.steps);
    c.lr_theta = j.value("lr_theta", c.lr_theta);
    c.lr_phi = j.value("lr_phi", c.lr_phi);
    c.tau = j.value("tau", c.tau);
    c.sinkhorn_iterations = j.value("sinkhorn_iterations", c.sinkhorn_iterations);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.total_steps = j.value("total_steps", c.total_steps);
    if (j.contains("distribution")) c.distribution = parse_distribution_kind(j["distribution"].get<std::string>());
    if (j.contains("density")) c.density = parse_density(j["density"].get<std::string>());
    c.bethe.max_iters = j.value("bethe_max_iters", c.bethe.max_iters);
    c.bethe.tol = j.value("bethe_tol", c.bethe.tol);
    c.bethe.damping = j.value("bethe_damping", c.bethe.damping);
    c.train_decoder = j.value("train_decoder", c.train_decoder);
    c.decoder_dim = j.value("decoder_dim", c.decoder_dim);
    c.encoder_dim = j.value("encoder_dim", c.encoder_dim);
    c.init_scale = j.value("init_scale", c.init_scale);
    c.phase1_max_steps = j.value("phase1_max_steps", c.phase1_max_steps);
    c.phase1_check_every = j.value("phase1_check_every", c.phase1_check_every);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return json{{"k", c.k},
              {"beta_start", c.beta.start},
              {"beta_end", c.beta.end},
              {"beta_steps", c.beta.steps},
              {"lr_theta", c.lr_theta},
              {"lr_phi", c.lr_phi},
              {"tau", c.tau},
              {"sinkhorn_iterations", c.sinkhorn_iterations},
              {"batch_size", c.batch_size},
              {"seed", c.seed},
              {"total_steps", c.total_steps},
              {"distribution", to_string(c.distribution)},
              {"density", density_name(c.density)},
              {"bethe_max_iters", c.bethe.max_iters},
              {"bethe_tol", c.bethe.tol},
              {"bethe_damping", c.bethe.damping},
              {"train_decoder", c.train_decoder},
              {"decoder_dim", c.decoder_dim},
              {"encoder_dim", c.encoder_dim},
              {"init_scale", c.init_scale},
              {"phase1_max_steps", c.phase1_max_steps},
              {"phase1_check_every", c.phase1_check_every},
              {"threads", c.threads}};
}

std::string step_csv_header() {
  return "step,elbo,log_p,log_q,entropy,beta,baseline,grad_norm_theta,grad_norm_phi,decoder_evaluations";
}

std::string to_csv_row(const StepReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%ld", r.step, r.elbo,
                r.log_p, r.log_q, r.entropy, r.beta, r.baseline, r.grad_norm_theta, r.grad_norm_phi,
                r.decoder_evaluations);
  return buf;
}

double baseline(std::span<const double> log_ps) {
  if (log_ps.empty()) throw std::invalid_argument("baseline: empty reward list");
  double s = 0.0;
  for (double v : log_ps) s += v;
  return s / static_cast<double>(log_ps.size());
}

double anneal_beta(const TrainConfig& cfg, int step_index) {
  if (step_index < 0) throw std::invalid_argument("anneal_beta: negative step");
  const auto& b = cfg.beta;
  if (b.start == b.end) return b.start;
  if (b.steps <= 1 || step_index >= b.steps - 1) return b.end;
  if (step_index == 0) return b.start;
  const double u = static_cast<double>(step_index) / static_cast<double>(b.steps - 1);
  if (b.start > 0.0 && b.end > 0.0) return b.start * std::pow(b.end / b.start, u);
  return b.start + (b.end - b.start) * u;
}

Matrix score_function_gradient(const OrderDistribution& d, std::span<const OrderSample> samples,
                               std::span<const double> rewards, double beta, bool use_baseline) {
  if (samples.empty() || samples.size() != rewards.size()) {
    throw std::invalid_argument("score_function_gradient: need one reward per sample");
  }
  const double b = use_baseline ? baseline(rewards) : 0.0;
  Matrix g = Matrix::Zero(d.scores().rows(), d.scores().cols());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double advantage = rewards[k] - b - beta * samples[k].log_density;
    g += advantage * d.grad_log_density(samples[k].z);
  }
  return g / static_cast<double>(samples.size());
}

OrderDistribution encoder_distribution(const EncoderParams& phi, const Episode& ep, const TrainConfig& cfg) {
  if (cfg.distribution == DistributionKind::kGumbelMatching) {
    return OrderDistribution::gumbel_matching(matching_scores(phi, ep), cfg.tau, cfg.sinkhorn_iterations,
                                              cfg.density, cfg.bethe);
  }
  return OrderDistribution::plackett_luce(plackett_luce_scores(phi, ep));
}

StepReport train_step(DecoderParams& theta, EncoderParams& phi, std::span<const Episode> batch,
                      const TrainConfig& cfg, int step_index) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const double beta = anneal_beta(cfg, step_index);
  const auto n_batch = static_cast<double>(batch.size());
  const double per_sample = 1.0 / (n_batch * cfg.k);
  const std::uint64_t step_seed = substream_seed(cfg.seed, "step", static_cast<std::uint64_t>(step_index));

  std::vector<EpisodeWork> work(batch.size());
  parallel_for(batch.size(), worker_count(cfg.threads), [&](std::size_t i) {
    const Episode& ep = batch[i];
    EpisodeWork& w = work[i];
    w.g_theta = DecoderParams::zeros(theta.vocab_size, theta.dim);
    w.g_phi = EncoderParams::zeros(phi.vocab_size, phi.dim);
    const OrderDistribution d = encoder_distribution(phi, ep, cfg);
    const std::uint64_t seed = substream_seed(step_seed, "episode", i);
    std::vector<OrderSample> samples;
    std::vector<double> rewards;
    for (int k = 0; k < cfg.k; ++k) {
      samples.push_back(d.sample_one(seed, static_cast<std::uint64_t>(k)));
      rewards.push_back(cfg.train_decoder ? accumulate_grad(theta, ep, samples.back().z, per_sample, w.g_theta)
                                          : joint_log_prob(theta, ep, samples.back().z));
      ++w.evaluations;
    }
    const Matrix d_scores = score_function_gradient(d, samples, rewards, beta) / n_batch;
    if (cfg.distribution == DistributionKind::kGumbelMatching) {
      backprop_matching(phi, ep, d_scores, w.g_phi);
    } else {
      backprop_plackett_luce(phi, ep, d_scores.col(0), w.g_phi);
    }
    w.base = baseline(rewards);
    double lq = 0.0;
    for (const auto& s : samples) lq += s.log_density;
    w.log_p = w.base;
    w.log_q = lq / cfg.k;
    w.elbo = w.log_p - w.log_q;
  });

  DecoderParams g_theta = DecoderParams::zeros(theta.vocab_size, theta.dim);
  EncoderParams g_phi = EncoderParams::zeros(phi.vocab_size, phi.dim);
  StepReport r;
  r.step = step_index;
  r.beta = beta;
  for (const auto& w : work) {
    g_theta.axpy(1.0, w.g_theta);
    g_phi.axpy(1.0, w.g_phi);
    r.elbo += w.elbo / n_batch;
    r.log_p += w.log_p / n_batch;
    r.log_q += w.log_q / n_batch;
    r.baseline += w.base / n_batch;
    r.decoder_evaluations += w.evaluations;
  }
  r.entropy = -r.log_q;
  if (!g_theta.all_finite() || !g_phi.all_finite()) {
    throw NonFiniteGradient("train_step " + std::to_string(step_index) + ": non-finite gradient (log_p=" +
                            std::to_string(r.log_p) + ", log_q=" + std::to_string(r.log_q) + ")");
  }
  r.grad_norm_theta = cfg.train_decoder ? std::sqrt(g_theta.squared_norm()) : 0.0;
  r.grad_norm_phi = std::sqrt(g_phi.squared_norm());
  if (cfg.train_decoder) theta.axpy(cfg.lr_theta, g_theta);
  phi.axpy(cfg.lr_phi, g_phi);
  return r;
}

DecoderParams pretrain_decoder(const Corpus& corpus, const std::vector<Permutation>& orders,
                               const TrainConfig& cfg, int* steps_used, bool* converged) {
  corpus.validate();
  if (orders.size() != corpus.episodes.size()) throw std::invalid_argument("pretrain_decoder: one order per episode");
  const int vocab = corpus.vocab.size();
  DecoderParams theta = DecoderParams::random(vocab, cfg.decoder_dim, cfg.seed, cfg.init_scale);
  const std::size_t m = corpus.episodes.size();
  const auto end = corpus.vocab.end_token;
  const int workers = worker_count(cfg.threads);

  auto perfect = [&] {
    for (std::size_t i = 0; i < m; ++i) {
      for (const auto& f : teacher_forced_steps(theta, corpus.episodes[i], orders[i])) {
        if (!f.token_is_argmax || !f.slot_is_argmax) return false;
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto& ep = corpus.episodes[i];
      const auto out = decode(theta, ep.x, 1, static_cast<int>(ep.y.size()), end);
      if (out.y != ep.y || out.z != orders[i]) return false;
      if (end) {
        const auto longer = decode(theta, ep.x, 1, static_cast<int>(ep.y.size()) + 1, end);
        if (!longer.terminated || longer.y != ep.y) return false;
      }
    }
    return true;
  };

  bool ok = false;
  int step = 0;
  std::vector<DecoderParams> grads(m);
  for (; step <= cfg.phase1_max_steps; ++step) {
    if (step % cfg.phase1_check_every == 0 && perfect()) {
      ok = true;
      break;
    }
    if (step == cfg.phase1_max_steps) break;
    parallel_for(m, workers, [&](std::size_t i) {
      grads[i] = DecoderParams::zeros(vocab, cfg.decoder_dim);
      accumulate_grad(theta, corpus.episodes[i], orders[i], 1.0, grads[i]);
      if (end) end_log_prob(theta, corpus.episodes[i], orders[i], *end, 1.0, &grads[i]);
    });
    DecoderParams g = DecoderParams::zeros(vocab, cfg.decoder_dim);
    for (const auto& gi : grads) g.axpy(1.0, gi);
    if (!g.all_finite()) throw NonFiniteGradient("pretrain_decoder: non-finite gradient");
    theta.axpy(cfg.lr_theta / static_cast<double>(m), g);
  }
  if (steps_used) *steps_used = step;
  if (converged) *converged = ok;
  return theta;
}

namespace {

void run_steps(DecoderParams& theta, EncoderParams& phi, const Corpus& corpus, const TrainConfig& cfg,
               std::vector<StepReport>& history, const StepObserver& observer) {
  const std::size_t m = corpus.episodes.size();
  const auto n_batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), m);
  std::vector<Episode> batch(n_batch);
  for (int step = 0; step < cfg.total_steps; ++step) {
    for (std::size_t j = 0; j < n_batch; ++j) {
      batch[j] = corpus.episodes[(static_cast<std::size_t>(step) * n_batch + j) % m];
    }
    history.push_back(train_step(theta, phi, batch, cfg, step));
    if (observer) observer(history.back());
  }
}

}  // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  corpus.validate();
  const int vocab = corpus.vocab.size();
  TrainResult out{DecoderParams::random(vocab, cfg.decoder_dim, cfg.seed, cfg.init_scale),
                  EncoderParams::random(vocab, cfg.encoder_dim, cfg.seed, cfg.init_scale),
                  {}};
  run_steps(out.theta, out.phi, corpus, cfg, out.history, observer);
  return out;
}

RecoveryResult train_encoder(const Corpus& corpus, const std::vector<Permutation>& orders,
                             const DecoderParams& theta, const TrainConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  corpus.validate();
  if (orders.size() != corpus.episodes.size()) throw std::invalid_argument("train_encoder: one order per episode");
  RecoveryResult out;
  out.theta = theta;
  out.phi = EncoderParams::random(corpus.vocab.size(), cfg.encoder_dim, cfg.seed, cfg.init_scale);
  TrainConfig frozen = cfg;
  frozen.train_decoder = false;
  run_steps(out.theta, out.phi, corpus, frozen, out.history, observer);
  const std::size_t m = corpus.episodes.size();
  for (std::size_t i = 0; i < m; ++i) {
    out.episode_nld.push_back(nld(modal_order(out.phi, corpus.episodes[i], cfg.distribution), orders[i]));
  }
  out.final_nld = std::accumulate(out.episode_nld.begin(), out.episode_nld.end(), 0.0) / static_cast<double>(m);
  return out;
}

RecoveryResult recover_order_experiment(const Corpus& corpus, OrderRule rule, const TrainConfig& cfg,
                                        const StepObserver& observer) {
  cfg.validate();
  corpus.validate();
  const auto counts = token_counts(corpus.episodes);
  std::vector<Permutation> orders;
  for (std::size_t i = 0; i < corpus.episodes.size(); ++i) {
    orders.push_back(planted_order(rule, corpus.episodes[i], counts, substream_seed(corpus.meta.seed, "order", i)));
  }
  int steps = 0;
  bool ok = false;
  const DecoderParams theta = pretrain_decoder(corpus, orders, cfg, &steps, &ok);
  RecoveryResult out = train_encoder(corpus, orders, theta, cfg, observer);
  out.phase1_steps = steps;
  out.phase1_converged = ok;
  return out;
}

}  // namespace order_infer
