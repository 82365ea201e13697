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

#include <optional>
#include <string>
#include <vector>

#include "order_infer/permutation.hpp"

namespace order_infer {

/// Token inventory with dense ids in [0, size()).
///
/// `end_token` is optional: a vocabulary without one can only stop decoding
/// at the length limit.
struct Vocab {
  std::vector<std::string> tokens;
  std::optional<int> end_token;

  [[nodiscard]] int size() const { return static_cast<int>(tokens.size()); }
  /// Throws std::out_of_range for unknown tokens.
  [[nodiscard]] int id(const std::string& token) const;
  /// Throws std::invalid_argument on duplicates, empty vocab or a bad end id.
  void validate() const;

  /// "w0", "w1", ... followed by "</s>" as the end token.
  static Vocab synthetic(int content_tokens);

  bool operator==(const Vocab&) const = default;
};

struct Episode {
  std::vector<int> x;  // source ids
  std::vector<int> y;  // target ids in natural order
  std::vector<std::string> tags;  // per target token, may be empty
  std::optional<Permutation> planted_z;

  [[nodiscard]] std::size_t length() const { return y.size(); }
};

/// Throws std::invalid_argument unless y is non-empty, all ids are in the
/// vocabulary, tags (if any) align with y and planted_z (if any) has length n.
void validate(const Episode& ep, const Vocab& vocab);

}  // namespace order_infer
