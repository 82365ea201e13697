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

// order-infer: corpora, training, ablations, decoding and analysis from the
// command line. Every command that writes files also writes a manifest next
// to them; nothing is written when a command fails.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "order_infer/ablation.hpp"
#include "order_infer/analysis.hpp"
#include "order_infer/checkpoint.hpp"
#include "order_infer/checks.hpp"
#include "order_infer/corpus.hpp"
#include "order_infer/decoder.hpp"
#include "order_infer/trainer.hpp"
#include "order_infer/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace order_infer;

namespace {

// Usage, configuration and data errors exit with 2; failures while running
// (non-finite training, failed checks) exit with 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json read_json_object(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError(path.string() + ": expected a JSON object");
  return j;
}

// Values given on the command line are parsed as JSON when they can be
// (numbers, booleans, lists) and taken as plain strings otherwise.
json flag_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

/// Adds one `--key` option per config key; `apply` folds the given ones into
/// a config object.
class ConfigFlags {
 public:
  ConfigFlags(CLI::App* cmd, const std::vector<std::string>& keys) {
    for (const auto& key : keys) {
      cmd->add_option("--" + key, values_[key], "override config key '" + key + "'");
    }
  }
  void apply(json& config) const {
    for (const auto& [key, value] : values_) {
      if (!value.empty()) config[key] = flag_value(value);
    }
  }

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> train_config_keys() {
  std::vector<std::string> keys;
  const json defaults = to_json(TrainConfig{});
  for (const auto& [k, v] : defaults.items()) keys.push_back(k);
  return keys;
}

/// Splits `extra` keys out of `config` and returns them; what is left must
/// be a valid TrainConfig.
json take_keys(json& config, const std::vector<std::string>& extra) {
  json taken = json::object();
  for (const auto& key : extra) {
    if (config.contains(key)) {
      taken[key] = config[key];
      config.erase(key);
    }
  }
  return taken;
}

TrainConfig parse_train_config(const json& j) {
  try {
    return train_config_from_json(j);
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
}

Corpus load_corpus(const fs::path& path) {
  if (path.empty()) throw UsageError("no corpus path given");
  if (!fs::exists(path)) throw UsageError("corpus not found: " + path.string());
  try {
    return read_corpus(path);
  } catch (const std::exception& e) {
    throw UsageError(std::string("cannot read corpus: ") + e.what());
  }
}

json manifest(const std::string& command, const json& config, std::uint64_t seed, const json& inputs,
              const json& outputs) {
  return json{{"command", command},       {"version", version()}, {"seed", seed},
              {"config", config},         {"inputs", inputs},     {"outputs", outputs}};
}

fs::path manifest_path_for(const fs::path& out) {
  fs::path p = out;
  return p.replace_extension(".manifest.json");
}

// gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::string rule = "common_first";
  GenDataOptions opts;
  std::string out;
};

json to_json(const GenDataOptions& o) {
  return json{{"rule", to_string(o.rule)},       {"size", o.size},       {"vocab_size", o.vocab_size},
              {"min_len", o.min_len},            {"max_len", o.max_len}, {"seed", o.seed},
              {"zipf_exponent", o.zipf_exponent}};
}

GenDataOptions gen_data_options_from_json(const json& j) {
  GenDataOptions o;
  for (const auto& [key, value] : j.items()) {
    if (key == "rule") o.rule = parse_order_rule(value.get<std::string>());
    else if (key == "size") o.size = value.get<int>();
    else if (key == "vocab_size") o.vocab_size = value.get<int>();
    else if (key == "min_len") o.min_len = value.get<int>();
    else if (key == "max_len") o.max_len = value.get<int>();
    else if (key == "seed") o.seed = value.get<std::uint64_t>();
    else if (key == "zipf_exponent") o.zipf_exponent = value.get<double>();
    else throw UsageError("unknown data key '" + key + "'");
  }
  o.validate();
  return o;
}

int run_gen_data(GenDataArgs& args) {
  try {
    args.opts.rule = parse_order_rule(args.rule);
    args.opts.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Corpus corpus = gen_data(args.opts);
  const fs::path out(args.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_corpus(corpus, out);
  const json outputs{{"corpus", out.filename().string()}, {"vocab", vocab_path(out).filename().string()}};
  write_file(manifest_path_for(out), manifest("gen-data", to_json(args.opts), args.opts.seed, json::object(), outputs).dump(2) + "\n");
  std::cout << "wrote " << corpus.episodes.size() << " episodes to " << out.string() << "\n";
  return 0;
}

// train ------------------------------------------------------------------

int run_train(const std::string& config_path, const ConfigFlags& flags) {
  json config = read_json_object(config_path);
  flags.apply(config);
  json paths = take_keys(config, {"corpus", "out_dir"});
  if (!paths.contains("corpus")) throw UsageError("config has no 'corpus' path");
  if (!paths.contains("out_dir")) throw UsageError("config has no 'out_dir'");
  const TrainConfig cfg = parse_train_config(config);
  json effective = to_json(cfg);
  effective.update(paths);
  const fs::path corpus_path = paths["corpus"].get<std::string>();
  const fs::path out_dir = paths["out_dir"].get<std::string>();
  const Corpus corpus = load_corpus(corpus_path);

  // Everything is kept in memory until the run has finished.
  std::string log = step_csv_header() + "\n";
  const TrainResult result = train(corpus, cfg, [&](const StepReport& r) { log += to_csv_row(r) + "\n"; });

  fs::create_directories(out_dir);
  write_file(out_dir / "train_log.csv", log);
  save_checkpoint(out_dir / "decoder.json", result.theta, corpus.vocab);
  save_checkpoint(out_dir / "encoder.json", result.phi, corpus.vocab);
  const json outputs{{"log", "train_log.csv"}, {"decoder", "decoder.json"}, {"encoder", "encoder.json"}};
  write_file(out_dir / "manifest.json",
             manifest("train", effective, cfg.seed, json{{"corpus", corpus_path.string()}}, outputs).dump(2) + "\n");
  const auto& last = result.history.back();
  std::printf("trained %d steps, final elbo %.6g, log to %s\n", cfg.total_steps, last.elbo,
              (out_dir / "train_log.csv").string().c_str());
  return 0;
}

// ablate -----------------------------------------------------------------

int run_ablate(const std::string& kind_name, const std::string& config_path, const std::string& out,
               const ConfigFlags& flags) {
  AblationKind kind;
  try {
    kind = parse_ablation_kind(kind_name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  json config = read_json_object(config_path);
  flags.apply(config);
  json extra = take_keys(config, {"corpus", "data", "seeds"});
  const TrainConfig cfg = parse_train_config(config);
  json effective = to_json(cfg);
  effective.update(extra);
  std::vector<std::uint64_t> seeds{cfg.seed};
  if (extra.contains("seeds")) seeds = extra["seeds"].get<std::vector<std::uint64_t>>();
  if (seeds.empty()) throw UsageError("'seeds' is empty");

  // Either one fixed corpus for every seed, or a generated one per seed.
  std::function<Corpus(std::uint64_t)> corpus_for_seed;
  json inputs = json::object();
  if (extra.contains("corpus")) {
    const fs::path path = extra["corpus"].get<std::string>();
    auto corpus = std::make_shared<Corpus>(load_corpus(path));
    planted_orders(*corpus);
    corpus_for_seed = [corpus](std::uint64_t) { return *corpus; };
    inputs["corpus"] = path.string();
  } else {
    GenDataOptions base;
    try {
      base = gen_data_options_from_json(extra.value("data", json::object()));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    corpus_for_seed = [base](std::uint64_t seed) {
      GenDataOptions o = base;
      o.seed = seed;
      return gen_data(o);
    };
  }
  const auto table = run_ablation(corpus_for_seed, ablation_cells(kind, cfg), seeds, cfg,
                                  [](std::uint64_t seed, const AblationCell& c, double v) {
                                    std::fprintf(stderr, "seed %llu %s K=%d nld %.4f\n",
                                                 static_cast<unsigned long long>(seed),
                                                 to_string(c.distribution).c_str(), c.k, v);
                                  });
  const std::string csv = to_csv(table);
  const fs::path out_path(out);
  write_file(out_path, csv);
  write_file(manifest_path_for(out_path),
             manifest("ablate " + kind_name, effective, seeds.front(), inputs,
                      json{{"table", out_path.filename().string()}, {"phase1_steps", table.phase1_steps}})
                     .dump(2) +
                 "\n");
  std::cout << csv;
  return 0;
}

// decode -----------------------------------------------------------------

json trace_json(const std::vector<TraceEvent>& events) {
  json out = json::array();
  for (const auto& e : events) {
    out.push_back({{"kind", e.kind == TraceEvent::Kind::kToken ? "token" : "slot"},
                   {"value", e.value},
                   {"partial", e.partial}});
  }
  return out;
}

int run_decode(const std::string& checkpoint, const std::string& corpus_path, int beam, int max_len,
               const std::string& out) {
  if (beam < 1) throw UsageError("--beam must be at least 1");
  const Corpus corpus = load_corpus(corpus_path);
  DecoderParams theta;
  try {
    theta = load_decoder(checkpoint, corpus.vocab);
  } catch (const CheckpointError& e) {
    throw UsageError(e.what());
  }
  std::string lines;
  for (std::size_t i = 0; i < corpus.episodes.size(); ++i) {
    const auto& ep = corpus.episodes[i];
    const int limit = max_len > 0 ? max_len : 2 * static_cast<int>(ep.x.size()) + 2;
    const auto result = decode(theta, ep.x, beam, limit, corpus.vocab.end_token);
    json rec{{"index", i},
             {"x", ep.x},
             {"y", result.y},
             {"z", result.z.values()},
             {"log_prob", result.log_prob},
             {"terminated", result.terminated},
             {"trace", trace_json(insertion_trace(result.steps))}};
    lines += rec.dump() + "\n";
  }
  const fs::path out_path(out);
  write_file(out_path, lines);
  const json config{{"checkpoint", checkpoint}, {"beam", beam}, {"max_len", max_len}};
  write_file(manifest_path_for(out_path), manifest("decode", config, 0, json{{"corpus", corpus_path}},
                                                   json{{"decoded", out_path.filename().string()}})
                                              .dump(2) +
                                              "\n");
  std::cout << "decoded " << corpus.episodes.size() << " episodes to " << out << "\n";
  return 0;
}

// analyze ----------------------------------------------------------------

std::vector<DecodedOrder> read_decoded(const fs::path& path, const Corpus& corpus) {
  std::vector<DecodedOrder> out;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    DecodedOrder d;
    d.y = rec.at("y").get<std::vector<int>>();
    d.z = Permutation(rec.at("z").get<std::vector<int>>());
    const auto i = rec.at("index").get<std::size_t>();
    // Tags follow the corpus target when the decode reproduced it.
    if (i < corpus.episodes.size() && corpus.episodes[i].y == d.y) d.tags = corpus.episodes[i].tags;
    out.push_back(std::move(d));
  }
  return out;
}

int run_analyze(const std::string& corpus_path, const std::string& encoder_path, const std::string& dist_name,
                const std::string& decoded_path, const std::vector<std::string>& masks, const std::string& out) {
  const Corpus corpus = load_corpus(corpus_path);
  DistributionKind kind;
  EncoderParams phi;
  try {
    kind = parse_distribution_kind(dist_name);
    phi = load_encoder(encoder_path, corpus.vocab);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  std::string orders_csv = "index,n,nld,orc\n";
  std::vector<DecodedOrder> modal;
  double nld_sum = 0.0, orc_sum = 0.0;
  int scored = 0;
  char buf[128];
  for (std::size_t i = 0; i < corpus.episodes.size(); ++i) {
    const auto& ep = corpus.episodes[i];
    const Permutation z = modal_order(phi, ep, kind);
    modal.push_back({ep.y, z, ep.tags});
    if (!ep.planted_z) continue;
    const double d = nld(z, *ep.planted_z);
    const double r = ep.length() > 1 ? orc(z, *ep.planted_z) : 1.0;
    nld_sum += d;
    orc_sum += r;
    ++scored;
    std::snprintf(buf, sizeof buf, "%zu,%d,%.10g,%.10g\n", i, static_cast<int>(ep.length()), d, r);
    orders_csv += buf;
  }
  if (scored > 0) {
    std::snprintf(buf, sizeof buf, "mean,,%.10g,%.10g\n", nld_sum / scored, orc_sum / scored);
    orders_csv += buf;
  }

  const auto stats = generation_index_stats(decoded_path.empty() ? modal : read_decoded(decoded_path, corpus));

  // Each --mask is a comma-separated list of tokens removed from the source.
  std::vector<std::vector<int>> mask_tokens;
  for (const auto& m : masks) {
    std::vector<int> ids;
    std::stringstream ss(m);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        ids.push_back(corpus.vocab.id(tok));
      } catch (const std::out_of_range&) {
        throw UsageError("mask token '" + tok + "' is not in the vocabulary");
      }
    }
    mask_tokens.push_back(ids);
  }
  std::string perturb;
  if (!mask_tokens.empty()) {
    for (std::size_t i = 0; i < corpus.episodes.size(); ++i) {
      const auto& ep = corpus.episodes[i];
      std::vector<std::vector<int>> positions;
      for (const auto& ids : mask_tokens) {
        std::vector<int> pos;
        for (std::size_t p = 0; p < ep.x.size(); ++p)
          if (std::find(ids.begin(), ids.end(), ep.x[p]) != ids.end()) pos.push_back(static_cast<int>(p));
        positions.push_back(pos);
      }
      json rec{{"index", i}, {"results", json::array()}};
      const auto results = perturbation_study(phi, ep, positions, kind);
      for (std::size_t m = 0; m < results.size(); ++m) {
        rec["results"].push_back({{"mask", masks[m]},
                                  {"masked_positions", results[m].masked},
                                  {"order", results[m].order.values()},
                                  {"nld", results[m].nld}});
      }
      perturb += rec.dump() + "\n";
    }
  }

  const fs::path prefix(out);
  const fs::path orders_path = prefix.string() + ".orders.csv";
  const fs::path tags_path = prefix.string() + ".tags.csv";
  const fs::path perturb_path = prefix.string() + ".perturbation.jsonl";
  write_file(orders_path, orders_csv);
  write_file(tags_path, to_csv(stats));
  json outputs{{"orders", orders_path.filename().string()}, {"tags", tags_path.filename().string()}};
  if (!perturb.empty()) {
    write_file(perturb_path, perturb);
    outputs["perturbation"] = perturb_path.filename().string();
  }
  const json config{{"encoder", encoder_path}, {"distribution", dist_name}, {"masks", masks}, {"decoded", decoded_path}};
  write_file(prefix.string() + ".manifest.json",
             manifest("analyze", config, 0, json{{"corpus", corpus_path}}, outputs).dump(2) + "\n");
  if (scored > 0) std::printf("mean nld %.6g, mean orc %.6g over %d episodes\n", nld_sum / scored, orc_sum / scored, scored);
  return 0;
}

// permcheck --------------------------------------------------------------

int run_permcheck(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : run_all_checks(seed)) {
    std::cout << format_check(r) << "\n";
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent generation orders for insertion-based decoders"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic corpus with planted orders");
  gen_cmd->add_option("--rule", gen.rule, "ltr, common_first, rare_first, random or content_first")->capture_default_str();
  gen_cmd->add_option("--size", gen.opts.size, "number of episodes")->capture_default_str();
  gen_cmd->add_option("--vocab_size", gen.opts.vocab_size, "content tokens")->capture_default_str();
  gen_cmd->add_option("--min_len", gen.opts.min_len)->capture_default_str();
  gen_cmd->add_option("--max_len", gen.opts.max_len)->capture_default_str();
  gen_cmd->add_option("--seed", gen.opts.seed)->capture_default_str();
  gen_cmd->add_option("--zipf_exponent", gen.opts.zipf_exponent)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "corpus path (.jsonl); the vocabulary goes next to it")->required();

  std::string train_config;
  auto* train_cmd = app.add_subcommand("train", "joint training of decoder and encoder");
  train_cmd->add_option("--config", train_config, "JSON config with corpus, out_dir and training keys")->required();
  auto train_keys = train_config_keys();
  train_keys.push_back("corpus");
  train_keys.push_back("out_dir");
  const ConfigFlags train_flags(train_cmd, train_keys);

  std::string ablate_kind, ablate_config, ablate_out;
  auto* ablate_cmd = app.add_subcommand("ablate", "order-recovery ablation tables");
  ablate_cmd->add_option("kind", ablate_kind, "table4 (distributions) or table5 (K sweep)")->required();
  ablate_cmd->add_option("--config", ablate_config, "JSON config")->required();
  ablate_cmd->add_option("--out", ablate_out, "CSV path")->required();
  auto ablate_keys = train_config_keys();
  ablate_keys.push_back("corpus");
  ablate_keys.push_back("seeds");
  const ConfigFlags ablate_flags(ablate_cmd, ablate_keys);

  std::string dec_ckpt, dec_corpus, dec_out;
  int beam = 1, max_len = 0;
  auto* decode_cmd = app.add_subcommand("decode", "beam-search decoding with insertion traces");
  decode_cmd->add_option("--checkpoint", dec_ckpt, "decoder checkpoint")->required();
  decode_cmd->add_option("--corpus", dec_corpus)->required();
  decode_cmd->add_option("--beam", beam)->capture_default_str();
  decode_cmd->add_option("--max_len", max_len, "0 means 2 |x| + 2")->capture_default_str();
  decode_cmd->add_option("--out", dec_out, "JSONL path")->required();

  std::string an_corpus, an_encoder, an_dist = "gumbel_matching", an_decoded, an_out;
  std::vector<std::string> an_masks;
  auto* analyze_cmd = app.add_subcommand("analyze", "order metrics, tag statistics and perturbations");
  analyze_cmd->add_option("--corpus", an_corpus)->required();
  analyze_cmd->add_option("--encoder", an_encoder, "encoder checkpoint")->required();
  analyze_cmd->add_option("--distribution", an_dist)->capture_default_str();
  analyze_cmd->add_option("--decoded", an_decoded, "decode output to take tag statistics from");
  analyze_cmd->add_option("--mask", an_masks, "comma-separated source tokens to remove; repeatable");
  analyze_cmd->add_option("--out", an_out, "output prefix")->required();

  std::uint64_t check_seed = 0;
  auto* check_cmd = app.add_subcommand("permcheck", "permanent, assignment and Sinkhorn self-checks");
  check_cmd->add_option("--seed", check_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) return run_gen_data(gen);
    if (*train_cmd) return run_train(train_config, train_flags);
    if (*ablate_cmd) return run_ablate(ablate_kind, ablate_config, ablate_out, ablate_flags);
    if (*decode_cmd) return run_decode(dec_ckpt, dec_corpus, beam, max_len, dec_out);
    if (*analyze_cmd) return run_analyze(an_corpus, an_encoder, an_dist, an_decoded, an_masks, an_out);
    if (*check_cmd) return run_permcheck(check_seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NonFiniteGradient& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
