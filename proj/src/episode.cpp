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

#include "order_infer/episode.hpp"

#include <set>
#include <stdexcept>

namespace order_infer {

int Vocab::id(const std::string& token) const {
  for (int i = 0; i < size(); ++i) {
    if (tokens[i] == token) return i;
  }
  throw std::out_of_range("unknown token '" + token + "'");
}

void Vocab::validate() const {
  if (tokens.empty()) throw std::invalid_argument("vocab: empty");
  if (std::set<std::string>(tokens.begin(), tokens.end()).size() != tokens.size()) {
    throw std::invalid_argument("vocab: duplicate tokens");
  }
  if (end_token && (*end_token < 0 || *end_token >= size())) {
    throw std::invalid_argument("vocab: end token id out of range");
  }
}

Vocab Vocab::synthetic(int content_tokens) {
  if (content_tokens < 1) throw std::invalid_argument("vocab: need at least one token");
  Vocab v;
  for (int i = 0; i < content_tokens; ++i) v.tokens.push_back("w" + std::to_string(i));
  v.tokens.emplace_back("</s>");
  v.end_token = content_tokens;
  return v;
}

void validate(const Episode& ep, const Vocab& vocab) {
  if (ep.y.empty()) throw std::invalid_argument("episode: empty target");
  auto check = [&](const std::vector<int>& ids, const char* what) {
    for (int t : ids) {
      if (t < 0 || t >= vocab.size()) {
        throw std::invalid_argument(std::string("episode: ") + what + " id out of range");
      }
    }
  };
  check(ep.x, "source");
  check(ep.y, "target");
  if (!ep.tags.empty() && ep.tags.size() != ep.y.size()) {
    throw std::invalid_argument("episode: tags not aligned with target");
  }
  if (ep.planted_z && ep.planted_z->size() != ep.y.size()) {
    throw std::invalid_argument("episode: planted order length mismatch");
  }
}

}  // namespace order_infer
