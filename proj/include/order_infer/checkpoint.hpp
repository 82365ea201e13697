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

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "order_infer/decoder.hpp"
#include "order_infer/encoder.hpp"
#include "order_infer/episode.hpp"

namespace order_infer {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A checkpoint is a flat JSON object: every parameter block becomes a
// row-major numeric array under its own name, next to "version", "model",
// "vocab_size", "dim" and the vocabulary the model was trained with.
nlohmann::json to_json(const DecoderParams& theta, const Vocab& vocab);
nlohmann::json to_json(const EncoderParams& phi, const Vocab& vocab);

/// Both loaders throw CheckpointError on a malformed file or when the stored
/// vocabulary differs from `vocab`.
DecoderParams decoder_from_json(const nlohmann::json& j, const Vocab& vocab);
EncoderParams encoder_from_json(const nlohmann::json& j, const Vocab& vocab);

void save_checkpoint(const std::filesystem::path& path, const DecoderParams& theta, const Vocab& vocab);
void save_checkpoint(const std::filesystem::path& path, const EncoderParams& phi, const Vocab& vocab);
DecoderParams load_decoder(const std::filesystem::path& path, const Vocab& vocab);
EncoderParams load_encoder(const std::filesystem::path& path, const Vocab& vocab);

}  // namespace order_infer
