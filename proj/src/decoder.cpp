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

#include "order_infer/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "order_infer/rng.hpp"

namespace order_infer {
namespace {

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

Vector softmax(const Vector& v) {
  Vector p = (v.array() - v.maxCoeff()).exp();
  return p / p.sum();
}

Eigen::Index argmax(const Vector& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return i;
}

/// Running decoder state shared by teacher forcing and search.
struct State {
  std::vector<int> partial;  // tokens in their current left-to-right order
  Vector gen_sum;
  int generated = 0;
  int prev = -1;
};

State initial_state(const DecoderParams& th) {
  State s;
  s.gen_sum = Vector::Zero(th.dim);
  return s;
}

Vector source_mean(const DecoderParams& th, const std::vector<int>& x) {
  Vector src = Vector::Zero(th.dim);
  for (int id : x) src += th.embed.row(id).transpose();
  if (!x.empty()) src /= static_cast<double>(x.size());
  return src;
}

Vector features(const DecoderParams& th, const Vector& src, const State& s, double length_ref) {
  const int d = th.dim;
  Vector f(th.feature_width());
  f.segment(0, d) = src;
  if (s.generated > 0) {
    f.segment(d, d) = s.gen_sum / s.generated;
  } else {
    f.segment(d, d).setZero();
  }
  f.segment(2 * d, d) = s.prev < 0 ? Vector(th.start.col(0)) : Vector(th.embed.row(s.prev).transpose());
  f(3 * d) = (s.generated + 1) / length_ref;
  f(3 * d + 1) = 1.0;
  return f;
}

Vector augmented(const DecoderParams& th, int token) {
  Vector e(th.dim + 1);
  e.head(th.dim) = th.embed.row(token).transpose();
  e(th.dim) = 1.0;
  return e;
}

Vector left_emb(const DecoderParams& th, const State& s, int slot) {
  return slot == 0 ? Vector(th.left_boundary.col(0)) : Vector(th.embed.row(s.partial[slot - 1]).transpose());
}

Vector right_emb(const DecoderParams& th, const State& s, int slot) {
  return slot == static_cast<int>(s.partial.size()) ? Vector(th.right_boundary.col(0))
                                                    : Vector(th.embed.row(s.partial[slot]).transpose());
}

double slot_fraction(const State& s, int slot) {
  return s.partial.empty() ? 0.0 : static_cast<double>(slot) / static_cast<double>(s.partial.size());
}

struct SlotTerms {
  Vector e_aug;  // [e_c; 1]
  Vector a_left, a_right;
  Vector u;  // [f; e_c]
  double rho_coef = 0.0;
  Vector scores;
};

SlotTerms slot_scores(const DecoderParams& th, const State& s, const Vector& f, int token) {
  SlotTerms st;
  st.e_aug = augmented(th, token);
  st.a_left = th.slot_left * st.e_aug;
  st.a_right = th.slot_right * st.e_aug;
  st.u.resize(th.feature_width() + th.dim);
  st.u.head(th.feature_width()) = f;
  st.u.tail(th.dim) = st.e_aug.head(th.dim);
  st.rho_coef = th.slot_rho.col(0).dot(st.u);
  const int slots = static_cast<int>(s.partial.size()) + 1;
  st.scores.resize(slots);
  for (int k = 0; k < slots; ++k) {
    st.scores(k) = left_emb(th, s, k).dot(st.a_left) + right_emb(th, s, k).dot(st.a_right) +
                   slot_fraction(s, k) * st.rho_coef;
  }
  return st;
}

void advance(const DecoderParams& th, State& s, int token, int slot) {
  s.partial.insert(s.partial.begin() + slot, token);
  s.gen_sum += th.embed.row(token).transpose();
  ++s.generated;
  s.prev = token;
}

void add_embedding_grad(DecoderParams& g, const State& s, int slot, bool left, const Vector& v) {
  if (left) {
    if (slot == 0) {
      g.left_boundary.col(0) += v;
    } else {
      g.embed.row(s.partial[slot - 1]) += v.transpose();
    }
  } else if (slot == static_cast<int>(s.partial.size())) {
    g.right_boundary.col(0) += v;
  } else {
    g.embed.row(s.partial[slot]) += v.transpose();
  }
}

struct Step {
  int token;
  int slot;
};

/// Teacher-forced pass over `steps`; only steps with index >= `counted_from`
/// contribute to the value, the gradient and `fits`.
double teacher_force(const DecoderParams& th, const std::vector<int>& x, const std::vector<Step>& steps,
                     double length_ref, std::size_t counted_from, double weight, DecoderParams* grad,
                     std::vector<StepFit>* fits) {
  const int d = th.dim;
  const int fw = th.feature_width();
  const Vector src = source_mean(th, x);
  State s = initial_state(th);
  double total = 0.0;
  Vector src_grad = Vector::Zero(d);
  // gen_grads.col(j): gradient w.r.t. each token generated before step j.
  Matrix gen_grads = grad ? Matrix::Zero(d, static_cast<Eigen::Index>(steps.size())) : Matrix();

  for (std::size_t j = 0; j < steps.size(); ++j) {
    const auto [c, r] = steps[j];
    if (r < 0 || r > static_cast<int>(s.partial.size())) throw std::invalid_argument("decoder: bad slot");
    if (j >= counted_from) {
      const Vector f = features(th, src, s, length_ref);
      const Vector logits = th.token_map * f;
      const double tok_lp = logits(c) - log_sum_exp(logits);
      SlotTerms st = slot_scores(th, s, f, c);
      const double slot_lp = st.scores(r) - log_sum_exp(st.scores);
      total += tok_lp + slot_lp;
      if (fits) fits->push_back({tok_lp, slot_lp, argmax(logits) == c, argmax(st.scores) == r});

      if (grad) {
        DecoderParams& g = *grad;
        Vector dl = -softmax(logits);
        dl(c) += 1.0;
        dl *= weight;
        g.token_map.noalias() += dl * f.transpose();
        Vector df = th.token_map.transpose() * dl;

        Vector ds = -softmax(st.scores);
        ds(r) += 1.0;
        ds *= weight;
        Vector ga_left = Vector::Zero(d);
        Vector ga_right = Vector::Zero(d);
        double kappa = 0.0;
        for (Eigen::Index k = 0; k < ds.size(); ++k) {
          const int slot = static_cast<int>(k);
          ga_left += ds(k) * left_emb(th, s, slot);
          ga_right += ds(k) * right_emb(th, s, slot);
          add_embedding_grad(g, s, slot, true, ds(k) * st.a_left);
          add_embedding_grad(g, s, slot, false, ds(k) * st.a_right);
          kappa += ds(k) * slot_fraction(s, slot);
        }
        g.slot_left.noalias() += ga_left * st.e_aug.transpose();
        g.slot_right.noalias() += ga_right * st.e_aug.transpose();
        const Vector de = th.slot_left.transpose() * ga_left + th.slot_right.transpose() * ga_right;
        g.slot_rho.col(0) += kappa * st.u;
        const Vector du = kappa * th.slot_rho.col(0);
        df += du.head(fw);
        g.embed.row(c) += (du.tail(d) + de.head(d)).transpose();

        src_grad += df.segment(0, d);
        if (s.generated > 0) gen_grads.col(static_cast<Eigen::Index>(j)) = df.segment(d, d) / s.generated;
        if (s.prev < 0) {
          g.start.col(0) += df.segment(2 * d, d);
        } else {
          g.embed.row(s.prev) += df.segment(2 * d, d).transpose();
        }
      }
    }
    advance(th, s, c, r);
  }

  if (grad) {
    if (!x.empty()) {
      const Vector per = src_grad / static_cast<double>(x.size());
      for (int id : x) grad->embed.row(id) += per.transpose();
    }
    // The token generated at step i feeds the mean at every later step.
    Vector suffix = Vector::Zero(d);
    for (std::size_t i = steps.size(); i-- > 0;) {
      grad->embed.row(steps[i].token) += suffix.transpose();
      suffix += gen_grads.col(static_cast<Eigen::Index>(i));
    }
  }
  return total;
}

std::vector<Step> steps_of(const Episode& ep, const Permutation& z) {
  if (z.size() != ep.y.size()) throw std::invalid_argument("decoder: |z| != |y|");
  const InsertionCode r = z_to_r(z);
  std::vector<Step> steps(z.size());
  for (std::size_t t = 0; t < z.size(); ++t) steps[t] = {ep.y[z[t] - 1], r[t]};
  return steps;
}

void check_shapes(const DecoderParams& a, const DecoderParams& b) {
  if (a.vocab_size != b.vocab_size || a.dim != b.dim) {
    throw std::invalid_argument("decoder: parameter shapes differ");
  }
}

}  // namespace

DecoderParams DecoderParams::zeros(int vocab_size, int dim) {
  if (vocab_size < 1 || dim < 1) throw std::invalid_argument("decoder: vocab_size and dim must be >= 1");
  DecoderParams p;
  p.vocab_size = vocab_size;
  p.dim = dim;
  p.embed = Matrix::Zero(vocab_size, dim);
  p.start = Matrix::Zero(dim, 1);
  p.left_boundary = Matrix::Zero(dim, 1);
  p.right_boundary = Matrix::Zero(dim, 1);
  p.token_map = Matrix::Zero(vocab_size, 3 * dim + 2);
  p.slot_left = Matrix::Zero(dim, dim + 1);
  p.slot_right = Matrix::Zero(dim, dim + 1);
  p.slot_rho = Matrix::Zero(4 * dim + 2, 1);
  return p;
}

DecoderParams DecoderParams::random(int vocab_size, int dim, std::uint64_t seed, double scale) {
  DecoderParams p = zeros(vocab_size, dim);
  Rng rng(seed, "init", 0);
  p.for_each([&](const char*, Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rng.normal();
  });
  return p;
}

void DecoderParams::axpy(double alpha, const DecoderParams& other) {
  check_shapes(*this, other);
  embed += alpha * other.embed;
  start += alpha * other.start;
  left_boundary += alpha * other.left_boundary;
  right_boundary += alpha * other.right_boundary;
  token_map += alpha * other.token_map;
  slot_left += alpha * other.slot_left;
  slot_right += alpha * other.slot_right;
  slot_rho += alpha * other.slot_rho;
}

void DecoderParams::scale(double alpha) {
  for_each([&](const char*, Matrix& m) { m *= alpha; });
}

double DecoderParams::squared_norm() const {
  double s = 0.0;
  for_each([&](const char*, const Matrix& m) { s += m.squaredNorm(); });
  return s;
}

bool DecoderParams::all_finite() const {
  bool ok = true;
  for_each([&](const char*, const Matrix& m) { ok = ok && m.allFinite(); });
  return ok;
}

std::size_t DecoderParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const char*, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

void DecoderParams::validate() const {
  const DecoderParams ref = zeros(vocab_size, dim);
  auto expect = [](const Matrix& a, const Matrix& b, const char* name) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
      throw std::invalid_argument(std::string("decoder: bad shape for ") + name);
    }
  };
  expect(embed, ref.embed, "embed");
  expect(start, ref.start, "start");
  expect(left_boundary, ref.left_boundary, "left_boundary");
  expect(right_boundary, ref.right_boundary, "right_boundary");
  expect(token_map, ref.token_map, "token_map");
  expect(slot_left, ref.slot_left, "slot_left");
  expect(slot_right, ref.slot_right, "slot_right");
  expect(slot_rho, ref.slot_rho, "slot_rho");
  if (!all_finite()) throw std::invalid_argument("decoder: non-finite parameters");
}

double joint_log_prob(const DecoderParams& theta, const Episode& ep, const Permutation& z) {
  const auto steps = steps_of(ep, z);
  return teacher_force(theta, ep.x, steps, static_cast<double>(steps.size()), 0, 0.0, nullptr, nullptr);
}

double accumulate_grad(const DecoderParams& theta, const Episode& ep, const Permutation& z, double weight,
                       DecoderParams& grad) {
  check_shapes(theta, grad);
  const auto steps = steps_of(ep, z);
  return teacher_force(theta, ep.x, steps, static_cast<double>(steps.size()), 0, weight, &grad, nullptr);
}

DecoderParams grad_joint_log_prob(const DecoderParams& theta, const Episode& ep, const Permutation& z) {
  DecoderParams g = DecoderParams::zeros(theta.vocab_size, theta.dim);
  accumulate_grad(theta, ep, z, 1.0, g);
  return g;
}

double end_log_prob(const DecoderParams& theta, const Episode& ep, const Permutation& z, int end_token,
                    double weight, DecoderParams* grad) {
  if (end_token < 0 || end_token >= theta.vocab_size) throw std::invalid_argument("decoder: bad end token");
  if (grad) check_shapes(theta, *grad);
  auto steps = steps_of(ep, z);
  const std::size_t n = steps.size();
  steps.push_back({end_token, static_cast<int>(n)});
  return teacher_force(theta, ep.x, steps, static_cast<double>(n), n, weight, grad, nullptr);
}

std::vector<StepFit> teacher_forced_steps(const DecoderParams& theta, const Episode& ep, const Permutation& z) {
  const auto steps = steps_of(ep, z);
  std::vector<StepFit> fits;
  teacher_force(theta, ep.x, steps, static_cast<double>(steps.size()), 0, 0.0, nullptr, &fits);
  return fits;
}

DecodeResult decode(const DecoderParams& theta, const std::vector<int>& x, int beam, int max_len,
                    std::optional<int> end_token) {
  if (beam < 1) throw std::invalid_argument("decode: beam must be >= 1");
  if (max_len < 0) throw std::invalid_argument("decode: max_len must be >= 0");
  for (int id : x) {
    if (id < 0 || id >= theta.vocab_size) throw std::invalid_argument("decode: source id out of range");
  }
  struct Hyp {
    State state;
    std::vector<InsertionStep> steps;
    double score = 0.0;
    bool terminated = false;
  };
  struct Candidate {
    std::size_t hyp;
    int token;
    int slot;
    double score;
  };
  const double length_ref = x.empty() ? std::max(max_len, 1) : static_cast<double>(x.size());
  const Vector src = source_mean(theta, x);
  std::vector<Hyp> alive{Hyp{initial_state(theta), {}, 0.0, false}};
  std::vector<Hyp> finished;
  if (max_len == 0) finished.push_back(alive.front());

  for (int t = 1; t <= max_len && !alive.empty(); ++t) {
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      const State& s = alive[h].state;
      const Vector f = features(theta, src, s, length_ref);
      const Vector logits = theta.token_map * f;
      const Vector tok_lp = logits.array() - log_sum_exp(logits);
      for (int c = 0; c < theta.vocab_size; ++c) {
        const Vector sc = slot_scores(theta, s, f, c).scores;
        const Vector slot_lp = sc.array() - log_sum_exp(sc);
        if (end_token && c == *end_token) {
          // The end token is scored at the rightmost slot, as in training.
          const Eigen::Index k = slot_lp.size() - 1;
          cands.push_back({h, c, static_cast<int>(k), alive[h].score + tok_lp(c) + slot_lp(k)});
          continue;
        }
        for (Eigen::Index k = 0; k < slot_lp.size(); ++k) {
          cands.push_back({h, c, static_cast<int>(k), alive[h].score + tok_lp(c) + slot_lp(k)});
        }
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    std::vector<Hyp> next;
    for (std::size_t i = 0; i < cands.size() && i < static_cast<std::size_t>(beam); ++i) {
      const Candidate& cd = cands[i];
      Hyp h = alive[cd.hyp];
      h.score = cd.score;
      if (end_token && cd.token == *end_token) {
        h.terminated = true;
        finished.push_back(std::move(h));
        continue;
      }
      advance(theta, h.state, cd.token, cd.slot);
      h.steps.push_back({cd.token, cd.slot});
      if (t == max_len) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
    // Scores only decrease, so a finished hypothesis at least as good as
    // every live one cannot be overtaken.
    if (!finished.empty() && !alive.empty()) {
      double best_finished = -std::numeric_limits<double>::infinity();
      for (const auto& h : finished) best_finished = std::max(best_finished, h.score);
      double best_alive = -std::numeric_limits<double>::infinity();
      for (const auto& h : alive) best_alive = std::max(best_alive, h.score);
      if (best_finished >= best_alive) break;
    }
  }

  const Hyp* best = nullptr;
  for (const auto& h : finished) {
    if (!best || h.score > best->score) best = &h;
  }
  DecodeResult out;
  if (!best) return out;
  out.y = best->state.partial;
  out.steps = best->steps;
  out.log_prob = best->score;
  out.terminated = best->terminated;
  std::vector<int> r;
  r.reserve(out.steps.size());
  for (const auto& st : out.steps) r.push_back(st.slot);
  out.z = r_to_z(InsertionCode(std::move(r)));
  return out;
}

std::vector<TraceEvent> insertion_trace(const std::vector<InsertionStep>& steps) {
  std::vector<TraceEvent> events;
  std::vector<int> partial;
  for (const auto& st : steps) {
    if (st.slot < 0 || st.slot > static_cast<int>(partial.size())) {
      throw std::invalid_argument("insertion_trace: bad slot");
    }
    events.push_back({TraceEvent::Kind::kToken, st.token, partial});
    partial.insert(partial.begin() + st.slot, st.token);
    events.push_back({TraceEvent::Kind::kSlot, st.slot, partial});
  }
  return events;
}

std::vector<int> replay_trace(const std::vector<TraceEvent>& events) {
  std::vector<int> partial;
  int pending = -1;
  for (const auto& ev : events) {
    if (ev.kind == TraceEvent::Kind::kToken) {
      pending = ev.value;
    } else {
      if (pending < 0 || ev.value < 0 || ev.value > static_cast<int>(partial.size())) {
        throw std::invalid_argument("replay_trace: malformed trace");
      }
      partial.insert(partial.begin() + ev.value, pending);
      pending = -1;
    }
  }
  return partial;
}

}  // namespace order_infer
