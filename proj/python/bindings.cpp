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

// Python module order_infer._core. Orders cross the boundary as lists of
// 1-based positions; matrices as NumPy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "order_infer/ablation.hpp"
#include "order_infer/analysis.hpp"
#include "order_infer/assignment.hpp"
#include "order_infer/checks.hpp"
#include "order_infer/checkpoint.hpp"
#include "order_infer/corpus.hpp"
#include "order_infer/decoder.hpp"
#include "order_infer/distributions.hpp"
#include "order_infer/permanent.hpp"
#include "order_infer/sinkhorn.hpp"
#include "order_infer/trainer.hpp"
#include "order_infer/version.hpp"

namespace py = pybind11;
using namespace order_infer;

namespace {

using Order = std::vector<int>;

Order values(const Permutation& z) { return {z.values().begin(), z.values().end()}; }

DensityMode parse_mode(const std::string& name) {
  if (name == "bethe") return DensityMode::kBethe;
  if (name == "exact") return DensityMode::kExact;
  throw std::invalid_argument("density must be 'bethe' or 'exact'");
}

py::dict episode_dict(const Episode& ep) {
  py::dict d;
  d["x"] = ep.x;
  d["y"] = ep.y;
  d["tags"] = ep.tags;
  d["planted_z"] = ep.planted_z ? py::cast(values(*ep.planted_z)) : py::none();
  return d;
}

TrainConfig config_from(const py::dict& overrides) {
  const auto dumps = py::module_::import("json").attr("dumps");
  return train_config_from_json(nlohmann::json::parse(dumps(overrides).cast<std::string>()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Latent generation orders for insertion-based decoders";
  m.attr("__version__") = version();

  py::register_exception<NonFiniteGradient>(m, "NonFiniteGradient", PyExc_RuntimeError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);

  // Permutations.
  m.def("z_to_r", [](const Order& z) {
    const auto r = z_to_r(Permutation(z));
    return Order(r.values().begin(), r.values().end());
  }, py::arg("z"), "Insertion code r_t = #{s < t : z_s < z_t}.");
  m.def("r_to_z", [](const Order& r) { return values(r_to_z(InsertionCode(r))); }, py::arg("r"));
  m.def("to_matrix", [](const Order& z) { return to_matrix(Permutation(z)).matrix(); }, py::arg("z"));
  m.def("from_matrix", [](const Matrix& p) { return values(from_matrix(p)); }, py::arg("p"));

  // Sinkhorn and assignment.
  m.def("sinkhorn", [](const Matrix& x, int iterations) { return sinkhorn_operator(x, iterations).matrix; },
        py::arg("x"), py::arg("iterations") = 200, "Sinkhorn operator S(X) applied to exp(X).");
  m.def("log_sinkhorn", &log_sinkhorn, py::arg("log_a"), py::arg("iterations") = 200);
  m.def("gumbel_sinkhorn", [](const Matrix& x, double tau, int iterations, std::uint64_t seed, int count) {
    std::vector<Matrix> out;
    for (const auto& s : sample_gumbel_sinkhorn(x, SinkhornConfig{tau, iterations, seed}, count)) out.push_back(s.matrix);
    return out;
  }, py::arg("x"), py::arg("tau") = 1.0, py::arg("iterations") = 200, py::arg("seed") = 0, py::arg("count") = 1);
  m.def("hungarian_max", [](const Matrix& w) { return values(from_matrix(hungarian_max(w))); }, py::arg("weights"),
        "Maximum-weight assignment as an order; ties go to the lexicographically smallest.");

  // Permanents and densities.
  m.def("log_permanent_exp", &log_permanent_exp, py::arg("x"), "log perm(exp X), exact.");
  m.def("bethe_permanent_log", [](const Matrix& log_a, int max_iters, double tol, double damping) {
    const auto b = bethe_permanent_log(log_a, BetheOptions{max_iters, tol, damping});
    py::dict d;
    d["log_perm_b"] = b.log_perm_b;
    d["gamma"] = b.gamma;
    d["iterations_used"] = b.iterations_used;
    d["residual"] = b.residual;
    return d;
  }, py::arg("log_a"), py::arg("max_iters") = 1000, py::arg("tol") = 1e-8, py::arg("damping") = 0.0);
  m.def("log_q_density", [](const Matrix& x, const Order& z, const std::string& density) {
    return log_q_density(x, to_matrix(Permutation(z)), parse_mode(density));
  }, py::arg("x"), py::arg("z"), py::arg("density") = "bethe");
  m.def("grad_log_q", [](const Matrix& x, const Order& z, const std::string& density) {
    const auto p = to_matrix(Permutation(z));
    return parse_mode(density) == DensityMode::kExact ? grad_log_q_exact(x, p) : grad_log_q(x, p);
  }, py::arg("x"), py::arg("z"), py::arg("density") = "bethe");

  py::class_<OrderDistribution>(m, "OrderDistribution")
      .def_static("gumbel_matching", [](const Matrix& x, double tau, int iterations, const std::string& density) {
        return OrderDistribution::gumbel_matching(x, tau, iterations, parse_mode(density));
      }, py::arg("x"), py::arg("tau") = 1.0, py::arg("sinkhorn_iterations") = 200, py::arg("density") = "bethe")
      .def_static("plackett_luce", &OrderDistribution::plackett_luce, py::arg("s"))
      .def_property_readonly("kind", [](const OrderDistribution& d) { return to_string(d.kind()); })
      .def_property_readonly("size", &OrderDistribution::size)
      .def_property_readonly("log_normalizer", &OrderDistribution::log_normalizer)
      .def("log_density", [](const OrderDistribution& d, const Order& z) { return d.log_density(Permutation(z)); })
      .def("grad_log_density", [](const OrderDistribution& d, const Order& z) {
        return d.grad_log_density(Permutation(z));
      })
      .def("modal", [](const OrderDistribution& d) { return values(d.modal()); })
      .def("sample", [](const OrderDistribution& d, int count, std::uint64_t seed) {
        std::vector<std::pair<Order, double>> out;
        for (const auto& s : sample(d, count, seed)) out.emplace_back(values(s.z), s.log_density);
        return out;
      }, py::arg("count"), py::arg("seed") = 0, "List of (order, log density) pairs.");

  // Metrics.
  m.def("levenshtein", [](const Order& a, const Order& b) { return levenshtein(a, b); }, py::arg("a"), py::arg("b"));
  m.def("nld", [](const Order& w, const Order& z) { return nld(Permutation(w), Permutation(z)); }, py::arg("w"), py::arg("z"));
  m.def("orc", [](const Order& w, const Order& z) { return orc(Permutation(w), Permutation(z)); }, py::arg("w"), py::arg("z"));

  // Corpora.
  py::class_<Corpus>(m, "Corpus")
      .def_property_readonly("tokens", [](const Corpus& c) { return c.vocab.tokens; })
      .def_property_readonly("end_token", [](const Corpus& c) { return c.vocab.end_token; })
      .def_property_readonly("rule", [](const Corpus& c) { return c.meta.rule; })
      .def_property_readonly("seed", [](const Corpus& c) { return c.meta.seed; })
      .def("__len__", [](const Corpus& c) { return c.episodes.size(); })
      .def("episode", [](const Corpus& c, std::size_t i) { return episode_dict(c.episodes.at(i)); })
      .def("write", [](const Corpus& c, const std::string& path) { write_corpus(c, path); });
  m.def("gen_data", [](const std::string& rule, int size, int vocab_size, int min_len, int max_len, std::uint64_t seed) {
    GenDataOptions o;
    o.rule = parse_order_rule(rule);
    o.size = size;
    o.vocab_size = vocab_size;
    o.min_len = min_len;
    o.max_len = max_len;
    o.seed = seed;
    return gen_data(o);
  }, py::arg("rule") = "common_first", py::arg("size") = 64, py::arg("vocab_size") = 50, py::arg("min_len") = 5,
        py::arg("max_len") = 12, py::arg("seed") = 0);
  m.def("read_corpus", [](const std::string& path) { return read_corpus(path); }, py::arg("path"));

  // Decoder.
  py::class_<DecoderParams>(m, "DecoderParams")
      .def_static("random", &DecoderParams::random, py::arg("vocab_size"), py::arg("dim"), py::arg("seed") = 0,
                  py::arg("scale") = 0.1)
      .def_readonly("vocab_size", &DecoderParams::vocab_size)
      .def_readonly("dim", &DecoderParams::dim)
      .def_property_readonly("parameter_count", &DecoderParams::parameter_count);
  m.def("joint_log_prob", [](const DecoderParams& theta, const std::vector<int>& x, const std::vector<int>& y,
                             const Order& z) {
    return joint_log_prob(theta, Episode{x, y, {}, {}}, Permutation(z));
  }, py::arg("theta"), py::arg("x"), py::arg("y"), py::arg("z"), "log p(y, z | x) by teacher forcing.");
  m.def("decode", [](const DecoderParams& theta, const std::vector<int>& x, int beam, int max_len,
                     std::optional<int> end_token) {
    const auto r = decode(theta, x, beam, max_len, end_token);
    py::list trace;
    for (const auto& e : insertion_trace(r.steps)) {
      trace.append(py::make_tuple(e.kind == TraceEvent::Kind::kToken ? "token" : "slot", e.value, e.partial));
    }
    py::dict d;
    d["y"] = r.y;
    d["z"] = values(r.z);
    d["log_prob"] = r.log_prob;
    d["terminated"] = r.terminated;
    d["trace"] = trace;
    return d;
  }, py::arg("theta"), py::arg("x"), py::arg("beam") = 1, py::arg("max_len") = 16, py::arg("end_token") = py::none());

  // Training.
  m.def("train_config", [](const py::dict& overrides) {
    return to_json(config_from(overrides)).dump();
  }, py::arg("overrides") = py::dict(), "Validated training config as a JSON string.");
  m.def("recover_order", [](const Corpus& corpus, const py::dict& overrides) {
    const TrainConfig cfg = config_from(overrides);
    RecoveryResult r;
    {
      py::gil_scoped_release release;
      r = recover_order_experiment(corpus, parse_order_rule(corpus.meta.rule), cfg);
    }
    py::dict d;
    d["final_nld"] = r.final_nld;
    d["episode_nld"] = r.episode_nld;
    d["phase1_steps"] = r.phase1_steps;
    d["phase1_converged"] = r.phase1_converged;
    std::vector<double> elbo;
    for (const auto& s : r.history) elbo.push_back(s.elbo);
    d["elbo"] = elbo;
    return d;
  }, py::arg("corpus"), py::arg("config") = py::dict(),
        "Pretrain a decoder on the planted orders, then train an encoder against it.");

  m.def("run_checks", [](std::uint64_t seed) {
    std::vector<std::pair<std::string, bool>> out;
    for (const auto& r : run_all_checks(seed)) out.emplace_back(format_check(r), r.passed());
    return out;
  }, py::arg("seed") = 0);
}
