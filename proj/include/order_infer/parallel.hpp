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

#include <cstddef>
#include <functional>

namespace order_infer {

/// Worker count: `requested` if positive, else ORDER_INFER_THREADS if set,
/// else the hardware concurrency. Always capped by ORDER_INFER_THREADS.
int worker_count(int requested = 0);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index runs
/// exactly once; callers write results to slot i and reduce afterwards in
/// index order, so the outcome does not depend on scheduling. The first
/// exception thrown by any task is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace order_infer
