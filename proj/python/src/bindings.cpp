// Copyright 2026 The rachfl Authors. All Rights Reserved.
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
// =============================================================================

#include <pybind11/pybind11.h>
#include <pybind11/operators.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "rachfl/channel.hpp"
#include "rachfl/config.hpp"
#include "rachfl/fedloop.hpp"
#include "rachfl/metrics.hpp"
#include "rachfl/policy.hpp"
#include "rachfl/sparsify.hpp"

namespace py = pybind11;
using namespace rachfl;

namespace {

const char* slot_kind_name(SlotKind k) {
  switch (k) {
    case SlotKind::Idle:
      return "idle";
    case SlotKind::Success:
      return "success";
    case SlotKind::Collision:
      return "collision";
  }
  return "?";
}

py::dict outcome_to_dict(const FrameOutcome& o) {
  py::list slots;
  for (const auto& s : o.slots) slots.append(py::make_tuple(slot_kind_name(s.kind), s.users));
  py::dict d;
  d["slots"] = slots;
  d["received"] = o.received;
  return d;
}

py::dict metrics_to_dict(const FrameMetrics& m) {
  py::dict d;
  d["frame"] = m.frame;
  d["loss"] = m.loss;
  d["accuracy"] = m.accuracy ? py::cast(*m.accuracy) : py::none();
  d["active_users"] = m.active_users;
  d["received_users"] = m.received_users;
  d["success_slots"] = m.success_slots;
  d["collision_slots"] = m.collision_slots;
  d["idle_slots"] = m.idle_slots;
  d["mean_local_norm"] = m.mean_local_norm;
  d["global_grad_norm"] = m.global_grad_norm;
  return d;
}

ChannelConfig channel(int num_slots, double rate, double frame_duration) {
  ChannelConfig cfg{num_slots, rate, frame_duration};
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Federated SGD over a framed slotted-ALOHA channel";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<RunError> run_error(m, "RunError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const RunError& e) {
      run_error(e.what());
    }
  });

  // channel
  m.def(
      "slot_capacity",
      [](int num_slots, double rate, double frame_duration) {
        return slot_capacity(ChannelConfig{num_slots, rate, frame_duration});
      },
      py::arg("num_slots"), py::arg("rate"), py::arg("frame_duration") = 1.0,
      "Floats deliverable in one successful slot: floor(rate * frame_duration / num_slots).");
  m.def(
      "simulate_frame",
      [](const std::vector<UserId>& active, double tx_prob, int num_slots, std::optional<double> rate,
         double frame_duration, std::uint64_t seed) {
        Stream rng(seed);
        const auto cfg = channel(num_slots, rate.value_or(num_slots), frame_duration);
        return outcome_to_dict(simulate_frame(active, tx_prob, cfg, rng));
      },
      py::arg("active"), py::arg("tx_prob"), py::arg("num_slots"), py::arg("rate") = py::none(),
      py::arg("frame_duration") = 1.0, py::arg("seed") = 1,
      "One frame of contention. `rate` defaults to one float per slot.");
  m.def("expected_throughput", &expected_throughput, py::arg("num_active"), py::arg("tx_prob"));

  // sparsification
  py::class_<SparseUpdate>(m, "SparseUpdate")
      .def(py::init<>())
      .def(py::init([](std::size_t dim, std::vector<std::uint32_t> idx, std::vector<double> val) {
             SparseUpdate s{dim, std::move(idx), std::move(val)};
             check_sparse(s);
             return s;
           }),
           py::arg("dim"), py::arg("indices"), py::arg("values"))
      .def_readonly("dim", &SparseUpdate::dim)
      .def_readonly("indices", &SparseUpdate::indices)
      .def_readonly("values", &SparseUpdate::values)
      .def("dense", [](const SparseUpdate& s) { return densify(s); })
      .def("__len__", &SparseUpdate::size)
      .def(py::self == py::self)
      .def("__repr__", [](const SparseUpdate& s) {
        std::ostringstream out;
        out << "SparseUpdate(dim=" << s.dim << ", nnz=" << s.size() << ")";
        return out.str();
      });
  m.def(
      "top_k", [](const std::vector<double>& v, std::size_t k) { return top_k(v, k); }, py::arg("v"), py::arg("k"));
  m.def(
      "rand_k",
      [](const std::vector<double>& v, std::size_t k, std::uint64_t seed, bool rescale) {
        Stream rng(seed);
        return rand_k(v, k, rng, rescale);
      },
      py::arg("v"), py::arg("k"), py::arg("seed") = 1, py::arg("rescale") = false);
  m.def(
      "residual", [](const std::vector<double>& v, const SparseUpdate& s) { return residual(v, s); }, py::arg("v"),
      py::arg("s"));
  m.def(
      "scatter_add",
      [](std::vector<double> target, const SparseUpdate& s, double scale) {
        scatter_add(target, s, scale);
        return target;
      },
      py::arg("target"), py::arg("s"), py::arg("scale") = 1.0, "Returns target + scale * densify(s).");

  // policies
  m.def(
      "aog_broadcast",
      [](double global_norm, const std::vector<double>& norms, double slope, std::size_t min_active) {
        const auto bp = aog_broadcast(global_norm, norms, AogConfig{slope, min_active, false});
        py::dict d;
        d["threshold"] = bp.threshold;
        d["tx_prob"] = bp.tx_prob;
        d["target_active"] = bp.target_active;
        return d;
      },
      py::arg("global_norm"), py::arg("user_norms"), py::arg("slope"), py::arg("min_active") = 1);
  m.def("apply_threshold", &apply_threshold, py::arg("local_norm"), py::arg("threshold"));
  m.def(
      "select_fixed_random",
      [](std::size_t users, std::size_t active, std::uint64_t seed) {
        Stream rng(seed);
        const auto s = select_fixed_random(users, active, rng);
        return py::make_tuple(s.active, s.tx_prob);
      },
      py::arg("users"), py::arg("active"), py::arg("seed") = 1);

  // experiments
  m.def(
      "normalize_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
      py::arg("config_json"), "Validates a JSON config and returns it with every default filled in.");
  m.def(
      "run_experiment",
      [](const std::string& text, std::uint64_t seed) {
        const auto cfg = parse_config(text);
        RunResult run;
        {
          py::gil_scoped_release release;
          run = run_experiment(cfg, seed);
        }
        py::list frames;
        for (const auto& f : run.frames) frames.append(metrics_to_dict(f.metrics));
        py::dict d;
        d["seed"] = run.seed;
        d["policy"] = cfg.policy_label();
        d["metrics"] = frames;
        d["final_model"] = run.final_model;
        d["memories"] = [&] {
          std::vector<Vector> mem;
          for (const auto& u : run.users) mem.push_back(u.memory);
          return mem;
        }();
        return d;
      },
      py::arg("config_json"), py::arg("seed"));
  m.def(
      "metrics_csv",
      [](const std::string& text, std::uint64_t seed) {
        const auto cfg = parse_config(text);
        std::ostringstream out;
        {
          py::gil_scoped_release release;
          write_metrics(metrics_rows(cfg, run_experiment(cfg, seed)), out);
        }
        return out.str();
      },
      py::arg("config_json"), py::arg("seed"), "Per-frame metrics of one run as CSV text.");
}
