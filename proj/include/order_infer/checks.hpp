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
#include <string>
#include <vector>

namespace order_infer {

/// Outcome of one self-check suite. `worst` is the largest violation seen
/// (in the suite's own units, 0 when everything passed).
struct CheckResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;
  double seconds = 0.0;

  [[nodiscard]] bool passed() const { return cases > 0 && failures == 0; }
};

// Randomized suites comparing the fast routines against exhaustive ones.
// Each draws its inputs from `seed` only.

/// 2^{-n/2} perm <= perm_B <= perm on random positive matrices, n in 2..8.
CheckResult check_permanent_sandwich(int count, std::uint64_t seed, double slack = 1e-8);
/// Ryser-based log permanent against direct enumeration, n in 1..7.
CheckResult check_exact_permanent(int count, std::uint64_t seed, double tol = 1e-10);
/// hungarian_max reaches the optimal score found by enumeration, n in 1..8.
CheckResult check_assignment(int count, std::uint64_t seed);
/// 200 Sinkhorn iterations bring the marginals of exp(U / tau) within
/// `tol` of one for 8x8 uniform U, at every tau in `taus`.
CheckResult check_sinkhorn(int count, std::uint64_t seed, const std::vector<double>& taus = {0.1, 1.0},
                           double tol = 1e-6);

std::vector<CheckResult> run_all_checks(std::uint64_t seed);
std::string format_check(const CheckResult& r);

}  // namespace order_infer
