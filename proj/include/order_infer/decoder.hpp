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
#include <optional>
#include <string>
#include <vector>

#include "order_infer/episode.hpp"
#include "order_infer/permutation.hpp"

namespace order_infer {

/// Parameters of the log-linear insertion decoder.
///
/// Step t (1-based) sees the feature vector
///   f_t = [mean source embedding; mean embedding of tokens generated so far;
///          embedding of the previous token (or `start`); t / L; 1]
/// of width 3d + 2, where L is the target length. The token distribution is
/// softmax(token_map * f_t). Once token c is chosen, slot s of the t slots
/// scores
///   left_s' slot_left [e_c; 1] + right_s' slot_right [e_c; 1]
///     + (s / (t - 1)) * slot_rho' [f_t; e_c]
/// where left_s / right_s are the embeddings of the neighbours of the slot,
/// or the boundary embeddings at the sequence ends.
struct DecoderParams {
  int vocab_size = 0;
  int dim = 0;
  Matrix embed;           // V x d
  Matrix start;           // d x 1
  Matrix left_boundary;   // d x 1
  Matrix right_boundary;  // d x 1
  Matrix token_map;       // V x (3d + 2)
  Matrix slot_left;       // d x (d + 1)
  Matrix slot_right;      // d x (d + 1)
  Matrix slot_rho;        // (4d + 2) x 1

  [[nodiscard]] int feature_width() const { return 3 * dim + 2; }

  static DecoderParams zeros(int vocab_size, int dim);
  /// Entries i.i.d. N(0, scale^2) from the ("init", 0) substream of `seed`.
  static DecoderParams random(int vocab_size, int dim, std::uint64_t seed, double scale = 0.1);

  /// Visits every tensor with its stable name, in a fixed order.
  template <class F>
  void for_each(F&& f) {
    f("embed", embed);
    f("start", start);
    f("left_boundary", left_boundary);
    f("right_boundary", right_boundary);
    f("token_map", token_map);
    f("slot_left", slot_left);
    f("slot_right", slot_right);
    f("slot_rho", slot_rho);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<DecoderParams*>(this)->for_each(
        [&](const char* name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }

  /// this += alpha * other. Shapes must match.
  void axpy(double alpha, const DecoderParams& other);
  void scale(double alpha);
  [[nodiscard]] double squared_norm() const;
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] std::size_t parameter_count() const;
  /// Throws std::invalid_argument on inconsistent shapes or non-finite values.
  void validate() const;
};

/// log p(y, z | x): sum over steps of the token log-softmax of y_{z_t} and the
/// slot log-softmax of the insertion code r_t. Length-conditioned (no end
/// factor). Throws std::invalid_argument when |z| != |y|.
double joint_log_prob(const DecoderParams& theta, const Episode& ep, const Permutation& z);

/// The same value, plus `weight` times its gradient accumulated into `grad`
/// (which must have theta's shapes).
double accumulate_grad(const DecoderParams& theta, const Episode& ep, const Permutation& z,
                       double weight, DecoderParams& grad);

/// Gradient of joint_log_prob with respect to every parameter.
DecoderParams grad_joint_log_prob(const DecoderParams& theta, const Episode& ep, const Permutation& z);

/// Log probability of emitting `end_token` after y is complete and inserting
/// it at the rightmost slot. This is what lets a trained decoder stop.
double end_log_prob(const DecoderParams& theta, const Episode& ep, const Permutation& z, int end_token,
                    double weight = 0.0, DecoderParams* grad = nullptr);

/// Per-step diagnostics of a teacher-forced pass.
struct StepFit {
  double token_log_prob = 0.0;
  double slot_log_prob = 0.0;
  bool token_is_argmax = false;
  bool slot_is_argmax = false;
};
std::vector<StepFit> teacher_forced_steps(const DecoderParams& theta, const Episode& ep,
                                          const Permutation& z);

struct InsertionStep {
  int token = 0;
  int slot = 0;
};

struct DecodeResult {
  std::vector<int> y;
  Permutation z;
  std::vector<InsertionStep> steps;  // excludes the end token
  double log_prob = 0.0;             // includes the end factor when terminated
  bool terminated = false;           // end token emitted (else length limit)
};

/// Beam search over (token, slot) pairs. beam = 1 is greedy on the joint
/// step score. Hypotheses finish on the end token (scored at the rightmost
/// slot, as in end_log_prob) or at max_len tokens; the
/// best finished hypothesis by total log probability is returned. The step
/// fraction uses the source length as the length reference (max_len when the
/// source is empty).
DecodeResult decode(const DecoderParams& theta, const std::vector<int>& x, int beam, int max_len,
                    std::optional<int> end_token);

struct TraceEvent {
  enum class Kind { kToken, kSlot } kind = Kind::kToken;
  int value = 0;             // token id or slot index
  std::vector<int> partial;  // partial sequence after the event
};

/// Two events per step: the token, then its slot insertion.
std::vector<TraceEvent> insertion_trace(const std::vector<InsertionStep>& steps);

/// Replays a trace and returns the final sequence.
std::vector<int> replay_trace(const std::vector<TraceEvent>& events);

}  // namespace order_infer
