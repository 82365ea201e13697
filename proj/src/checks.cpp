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

#include "order_infer/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "order_infer/assignment.hpp"
#include "order_infer/permanent.hpp"
#include "order_infer/permutation.hpp"
#include "order_infer/rng.hpp"
#include "order_infer/sinkhorn.hpp"

namespace order_infer {

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Matrix uniform_matrix(Eigen::Index n, Rng& rng, double lo, double hi) {
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// log sum over all permutations of exp(sum_t x(t, z_t)), by enumeration.
double enumerate_log_permanent(const Matrix& x) {
  const auto perms = all_permutations(static_cast<std::size_t>(x.rows()));
  std::vector<double> terms;
  double top = -INFINITY;
  for (const auto& z : perms) {
    double s = 0.0;
    for (std::size_t t = 0; t < z.size(); ++t) s += x(static_cast<Eigen::Index>(t), z[t] - 1);
    terms.push_back(s);
    top = std::max(top, s);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

}  // namespace

CheckResult check_permanent_sandwich(int count, std::uint64_t seed, double slack) {
  Timer timer;
  CheckResult r{"permanent-sandwich"};
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, "permanent", static_cast<std::uint64_t>(i));
    const auto n = static_cast<Eigen::Index>(2 + i % 7);
    // Entries of A are uniform on (0, 1]; work with log A throughout.
    const Matrix log_a = uniform_matrix(n, rng, 1e-12, 1.0).array().log().matrix();
    const double log_perm = log_permanent_exp(log_a);
    const double log_b = bethe_permanent_log(log_a).log_perm_b;
    const double over = log_b - log_perm;
    const double under = (log_perm - 0.5 * static_cast<double>(n) * std::log(2.0)) - log_b;
    const double violation = std::max(over, under);
    ++r.cases;
    if (violation > slack || !std::isfinite(log_b)) ++r.failures;
    r.worst = std::max(r.worst, std::max(violation, 0.0));
  }
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_exact_permanent(int count, std::uint64_t seed, double tol) {
  Timer timer;
  CheckResult r{"exact-permanent"};
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, "ryser", static_cast<std::uint64_t>(i));
    const auto n = static_cast<Eigen::Index>(1 + i % 7);
    const Matrix x = uniform_matrix(n, rng, -3.0, 3.0);
    const double err = std::abs(log_permanent_exp(x) - enumerate_log_permanent(x));
    ++r.cases;
    if (!(err <= tol)) ++r.failures;
    r.worst = std::max(r.worst, err);
  }
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_assignment(int count, std::uint64_t seed) {
  Timer timer;
  CheckResult r{"assignment"};
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, "assignment", static_cast<std::uint64_t>(i));
    const auto n = static_cast<Eigen::Index>(1 + i % 8);
    const Matrix w = uniform_matrix(n, rng, -10.0, 10.0);
    const double fast = assignment_score(w, hungarian_max(w));
    const double best = assignment_score(w, brute_force_max(w));
    ++r.cases;
    if (fast != best) ++r.failures;
    r.worst = std::max(r.worst, best - fast);
  }
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_sinkhorn(int count, std::uint64_t seed, const std::vector<double>& taus, double tol) {
  Timer timer;
  CheckResult r{"sinkhorn"};
  for (double tau : taus) {
    for (int i = 0; i < count; ++i) {
      Rng rng(seed, "sinkhorn", static_cast<std::uint64_t>(i));
      const Matrix x = uniform_matrix(8, rng, 0.0, 1.0) / tau;
      const auto out = sinkhorn_operator(x, 200);
      const Matrix& s = out.matrix;
      const double dev = std::max((s.rowwise().sum().array() - 1.0).abs().maxCoeff(),
                                  (s.colwise().sum().array() - 1.0).abs().maxCoeff());
      ++r.cases;
      if (!(dev <= tol)) ++r.failures;
      r.worst = std::max(r.worst, dev);
    }
  }
  r.seconds = timer.seconds();
  return r;
}

std::vector<CheckResult> run_all_checks(std::uint64_t seed) {
  return {check_permanent_sandwich(1000, seed), check_exact_permanent(700, seed), check_assignment(1000, seed),
          check_sinkhorn(1000, seed)};
}

std::string format_check(const CheckResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %s: %d cases, %d failures, worst %.3g", r.passed() ? "PASS" : "FAIL",
                r.name.c_str(), r.cases, r.failures, r.worst);
  return buf;
}

}  // namespace order_infer
