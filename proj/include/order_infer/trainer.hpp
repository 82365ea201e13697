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
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "order_infer/corpus.hpp"
#include "order_infer/decoder.hpp"
#include "order_infer/distributions.hpp"
#include "order_infer/encoder.hpp"

namespace order_infer {

/// Log-linear interpolation from `start` to `end` over `steps` steps, then
/// constant. If exactly one endpoint is zero the interpolation is linear.
struct BetaSchedule {
  double start = 1.0;
  double end = 0.01;
  int steps = 1000;
};

struct TrainConfig {
  int k = 4;
  BetaSchedule beta;
  double lr_theta = 0.3;
  double lr_phi = 0.05;
  double tau = 1.0;
  int sinkhorn_iterations = 200;
  int batch_size = 16;
  std::uint64_t seed = 0;
  int total_steps = 1000;
  DistributionKind distribution = DistributionKind::kGumbelMatching;
  DensityMode density = DensityMode::kBethe;
  BetheOptions bethe;
  bool train_decoder = true;
  int decoder_dim = 32;
  int encoder_dim = 16;
  double init_scale = 0.1;
  // Phase 1 of the order-recovery experiment.
  int phase1_max_steps = 3000;
  int phase1_check_every = 50;
  int threads = 0;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// Unknown keys are rejected; missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);

struct StepReport {
  int step = 0;
  double elbo = 0.0;     // mean over episodes of mean_k (log p - log q)
  double log_p = 0.0;    // mean log p(y, z_k | x)
  double log_q = 0.0;    // mean log q(z_k)
  double entropy = 0.0;  // -log_q
  double baseline = 0.0;
  double grad_norm_theta = 0.0;
  double grad_norm_phi = 0.0;
  double beta = 0.0;
  long decoder_evaluations = 0;
};

/// CSV header and row matching the fields of StepReport.
std::string step_csv_header();
std::string to_csv_row(const StepReport& r);

/// Thrown by train_step when a gradient is not finite; parameters are left
/// untouched.
class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean of the rewards; throws std::invalid_argument on an empty list.
double baseline(std::span<const double> log_ps);

double anneal_beta(const TrainConfig& cfg, int step_index);

/// Score-function estimate for one episode, as a gradient with respect to
/// the distribution scores:
///   (1/K) sum_k A_k grad log q(z_k),  A_k = r_k - b - beta log q(z_k)
/// with b the mean reward (or 0 when use_baseline is false).
Matrix score_function_gradient(const OrderDistribution& d, std::span<const OrderSample> samples,
                               std::span<const double> rewards, double beta, bool use_baseline = true);

/// Builds q_phi for one episode from the configured distribution.
OrderDistribution encoder_distribution(const EncoderParams& phi, const Episode& ep, const TrainConfig& cfg);

/// One step of joint training on `batch`. Decoder parameters are updated
/// only when cfg.train_decoder is set.
StepReport train_step(DecoderParams& theta, EncoderParams& phi, std::span<const Episode> batch,
                      const TrainConfig& cfg, int step_index);

struct RecoveryResult {
  int phase1_steps = 0;
  bool phase1_converged = false;
  double final_nld = 0.0;
  std::vector<double> episode_nld;
  std::vector<StepReport> history;
  DecoderParams theta;
  EncoderParams phi;
};

/// Observer for phase-2 reports (e.g. a CSV writer); may be empty.
using StepObserver = std::function<void(const StepReport&)>;

struct TrainResult {
  DecoderParams theta;
  EncoderParams phi;
  std::vector<StepReport> history;
};

/// Joint training of decoder and encoder from fresh initializations for
/// cfg.total_steps steps. Batches walk the corpus cyclically.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg, const StepObserver& observer = {});

/// Phase 1 trains the decoder alone on the planted orders (plus the end
/// factor) until every teacher-forced step is the argmax; phase 2 freezes
/// it and trains the encoder with train_step for cfg.total_steps steps.
/// Returns the mean NLD between the encoder's modal orders and the planted
/// ones.
RecoveryResult recover_order_experiment(const Corpus& corpus, OrderRule rule, const TrainConfig& cfg,
                                        const StepObserver& observer = {});

/// Phase 1 on its own; exposed so several phase-2 runs can share a decoder.
DecoderParams pretrain_decoder(const Corpus& corpus, const std::vector<Permutation>& orders,
                               const TrainConfig& cfg, int* steps_used, bool* converged);

/// Phase 2 on its own, starting from a trained decoder.
RecoveryResult train_encoder(const Corpus& corpus, const std::vector<Permutation>& orders,
                             const DecoderParams& theta, const TrainConfig& cfg,
                             const StepObserver& observer = {});

}  // namespace order_infer
