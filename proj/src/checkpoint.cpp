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

#include "order_infer/checkpoint.hpp"

#include <fstream>

namespace order_infer {

namespace {

template <class Params>
nlohmann::json dump(const Params& p, const Vocab& vocab, const char* model) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["model"] = model;
  j["vocab_size"] = p.vocab_size;
  j["dim"] = p.dim;
  j["vocab"] = vocab.tokens;
  j["end_token"] = vocab.end_token ? nlohmann::json(*vocab.end_token) : nlohmann::json(nullptr);
  p.for_each([&](const char* name, const Matrix& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
    j[name] = std::move(flat);
  });
  return j;
}

template <class Params>
Params parse(const nlohmann::json& j, const Vocab& vocab, const char* model) {
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
    }
    if (j.at("model").get<std::string>() != model) {
      throw CheckpointError("expected a " + std::string(model) + " checkpoint, got " + j.at("model").dump());
    }
    const auto tokens = j.at("vocab").get<std::vector<std::string>>();
    const auto end = j.at("end_token").is_null() ? std::optional<int>{} : std::optional<int>{j.at("end_token").get<int>()};
    if (tokens != vocab.tokens || end != vocab.end_token) {
      throw CheckpointError("vocabulary mismatch between checkpoint and corpus");
    }
    const int v = j.at("vocab_size").get<int>();
    const int d = j.at("dim").get<int>();
    if (v != vocab.size() || d < 1) throw CheckpointError("checkpoint has inconsistent vocab_size or dim");
    Params p = Params::zeros(v, d);
    p.for_each([&](const char* name, Matrix& m) {
      const auto flat = j.at(name).get<std::vector<double>>();
      if (flat.size() != static_cast<std::size_t>(m.size())) {
        throw CheckpointError(std::string("checkpoint array '") + name + "' has the wrong size");
      }
      std::size_t i = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[i++];
    });
    if (!p.all_finite()) throw CheckpointError("checkpoint contains non-finite values");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << j.dump() << '\n';
}

nlohmann::json read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const DecoderParams& theta, const Vocab& vocab) { return dump(theta, vocab, "decoder"); }
nlohmann::json to_json(const EncoderParams& phi, const Vocab& vocab) { return dump(phi, vocab, "encoder"); }

DecoderParams decoder_from_json(const nlohmann::json& j, const Vocab& vocab) {
  return parse<DecoderParams>(j, vocab, "decoder");
}
EncoderParams encoder_from_json(const nlohmann::json& j, const Vocab& vocab) {
  return parse<EncoderParams>(j, vocab, "encoder");
}

void save_checkpoint(const std::filesystem::path& path, const DecoderParams& theta, const Vocab& vocab) {
  write(path, to_json(theta, vocab));
}
void save_checkpoint(const std::filesystem::path& path, const EncoderParams& phi, const Vocab& vocab) {
  write(path, to_json(phi, vocab));
}
DecoderParams load_decoder(const std::filesystem::path& path, const Vocab& vocab) {
  return decoder_from_json(read(path), vocab);
}
EncoderParams load_encoder(const std::filesystem::path& path, const Vocab& vocab) {
  return encoder_from_json(read(path), vocab);
}

}  // namespace order_infer
