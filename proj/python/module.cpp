#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "degradekit/attack.hpp"
#include "degradekit/dh.hpp"
#include "degradekit/hnp.hpp"
#include "degradekit/leakage.hpp"
#include "degradekit/probe.hpp"
#include "degradekit/trace.hpp"
#include "degradekit/victim.hpp"

namespace py = pybind11;
using namespace degradekit;

namespace {

PyObject* g_error = nullptr;

// Python ints cross the boundary as hex text so arbitrary sizes survive.
Integer to_integer(const py::int_& v) {
  const auto text = py::str(py::module_::import("builtins").attr("hex")(v)).cast<std::string>();
  const bool neg = !text.empty() && text[0] == '-';
  Integer x = from_hex(text.substr(neg ? 3 : 2));
  return neg ? Integer(-x) : x;
}

py::int_ to_py(const Integer& x) {
  return py::reinterpret_steal<py::int_>(PyLong_FromString(x.get_str(16).c_str(), nullptr, 16));
}

py::list to_py(const std::vector<Integer>& xs) {
  py::list out;
  for (const auto& x : xs) out.append(to_py(x));
  return out;
}

dh::DhGroup resolve_group(const std::string& name) {
  if (name == "rfc5114") return dh::load_group(dh::default_group_path());
  if (name == "safe256") return dh::load_group(dh::safe_prime_256_path());
  return dh::load_group(name);
}

py::dict group_dict(const dh::DhGroup& g) {
  py::dict d;
  d["p"] = to_py(g.p);
  d["q"] = to_py(g.q);
  d["g"] = to_py(g.g);
  d["source"] = g.source;
  d["byte_len"] = g.byte_len();
  return d;
}

hnp::HnpInstance make_instance(const py::int_& p, std::size_t ell, const std::vector<py::int_>& t) {
  hnp::HnpInstance inst;
  inst.p = to_integer(p);
  inst.ell = ell;
  for (const auto& x : t) inst.samples.push_back(to_integer(x));
  inst.validate();
  return inst;
}

trace::TraceSet make_set(const std::vector<std::vector<std::uint64_t>>& traces,
                         const std::vector<int>& labels, const std::string& strategy,
                         std::uint32_t wait_r) {
  require(labels.empty() || labels.size() == traces.size(), ErrorKind::Length,
          "labels must match the number of traces");
  trace::TraceSet set;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    trace::Trace t;
    t.samples = trace::checked_latencies(traces[i]);
    t.meta.strategy = parse_strategy(strategy);
    t.meta.wait_r = wait_r;
    if (!labels.empty()) t.meta.class_label = labels[i];
    set.add(std::move(t));
  }
  return set;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "degradekit native core";

  // Leaked on purpose: the type must outlive interpreter teardown of the module.
  g_error = (new py::exception<Error>(m, "DegradekitError"))->ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::handle(g_error)(std::string(to_string(e.kind())) + ": " + e.what());
      err.attr("kind") = to_string(e.kind());
      err.attr("exit_code") = exit_code(e.kind());
      PyErr_SetObject(g_error, err.ptr());
    }
  });

  m.def("capabilities", [] {
    const auto c = probe::detect_capabilities();
    py::dict d;
    d["x86_64"] = c.x86_64;
    d["clflush"] = c.clflush;
    d["invariant_tsc"] = c.invariant_tsc;
    d["smt"] = c.smt;
    d["writable_exec"] = c.writable_exec;
    d["logical_cores"] = c.logical_cores;
    d["physical_cores"] = c.physical_cores;
    return d;
  });

  m.def("nicv",
        [](const std::vector<std::vector<std::uint64_t>>& traces, const std::vector<int>& labels,
           bool two_class) {
          const auto set = make_set(traces, labels, "nodegrade", 1);
          const auto c = two_class ? leakage::nicv_two_class(set) : leakage::nicv(set);
          return c.values;
        },
        py::arg("traces"), py::arg("labels"), py::arg("two_class") = false,
        "Per-point NICV of labelled traces.");
  m.def("max_correlation", [](const std::vector<double>& v) { return leakage::max_correlation(v); });

  m.def("detect_padding",
        [](const std::vector<std::uint32_t>& lat, std::uint32_t t, std::uint32_t d,
           const std::string& rule) { return attack::detect_padding(lat, t, d, attack::parse_closeness(rule)); },
        py::arg("latencies"), py::arg("t"), py::arg("d"), py::arg("rule") = "at-least-two");
  m.def("estimate_traces", &attack::estimate_traces, py::arg("tp_rate"), py::arg("pad_prob"),
        py::arg("d_required"));
  m.def("dimension_heuristic", &hnp::dimension_heuristic, py::arg("c"), py::arg("modulus_bits"),
        py::arg("ell"));
  m.def("signed_mod", [](const py::int_& x, const py::int_& p) {
    return to_py(hnp::signed_mod(to_integer(x), to_integer(p)));
  });

  m.def("group", [](const std::string& name) { return group_dict(resolve_group(name)); },
        py::arg("name") = "rfc5114", "Load a DH group: 'rfc5114', 'safe256' or a fixture path.");
  m.def("pad_probability", [](const std::string& name) { return dh::pad_probability(resolve_group(name)); },
        py::arg("group") = "rfc5114");

  m.def("aggregate_stats", [](std::vector<double> rows) {
    const auto a = victim::aggregate_stats(std::move(rows));
    py::dict d;
    d["median"] = a.median;
    d["min"] = a.min;
    d["max"] = a.max;
    d["mean"] = a.mean;
    d["stdev"] = a.stdev;
    return d;
  });

  m.def("synthetic_instance",
        [](const py::int_& p, std::size_t ell, std::size_t d, const py::int_& alpha, std::uint64_t seed) {
          Rng rng(seed);
          const auto inst = hnp::synthetic_instance(to_integer(p), ell, d, to_integer(alpha), rng);
          return to_py(inst.samples);
        },
        py::arg("p"), py::arg("ell"), py::arg("d"), py::arg("alpha"), py::arg("seed") = 0);

  m.def("solve_hnp",
        [](const py::int_& p, std::size_t ell, const std::vector<py::int_>& t, const std::string& algorithm,
           std::uint32_t beta) {
          const auto inst = make_instance(p, ell, t);
          hnp::SolveParams sp;
          sp.reduction.algorithm =
              algorithm == "bkz" ? lattice::ReductionAlgorithm::BKZ : lattice::ReductionAlgorithm::LLL;
          require(algorithm == "bkz" || algorithm == "lll", ErrorKind::Validation,
                  "algorithm must be lll or bkz");
          sp.reduction.beta = beta;
          hnp::SolveResult r;
          {
            py::gil_scoped_release release;
            r = hnp::solve(inst, sp);
          }
          py::dict d;
          d["alpha"] = r.alpha ? py::object(to_py(*r.alpha)) : py::none();
          d["satisfied"] = r.satisfied;
          d["candidates"] = r.candidates.size();
          d["reduction"] = r.reduction;
          d["wall_time"] = r.wall_time;
          return d;
        },
        py::arg("p"), py::arg("ell"), py::arg("samples"), py::arg("algorithm") = "lll",
        py::arg("beta") = 20);

  m.def("attack",
        [](const std::string& group, double tp, double fp, std::uint64_t seed, std::size_t ell,
           std::optional<std::size_t> d_required, bool voting, std::uint64_t budget) {
          attack::AttackRunConfig cfg;
          cfg.group = resolve_group(group);
          cfg.oracle.tp_rate = tp;
          cfg.oracle.fp_rate = fp;
          cfg.oracle.seed = seed;
          cfg.seed = seed;
          cfg.ell = ell;
          cfg.d_required = d_required;
          cfg.voting = voting;
          cfg.query_budget = budget;
          attack::AttackResult r;
          {
            py::gil_scoped_release release;
            r = attack::run_attack(cfg);
          }
          py::dict d;
          d["success"] = r.success;
          d["alpha"] = r.alpha ? py::object(to_py(*r.alpha)) : py::none();
          d["ground_truth"] = r.ground_truth ? py::object(to_py(*r.ground_truth)) : py::none();
          d["queries"] = r.stats.queries;
          d["observations"] = r.stats.observations;
          d["accepted"] = r.stats.accepted;
          d["selected"] = r.stats.selected;
          d["selected_false_positives"] = r.stats.selected_false_positives;
          d["satisfied"] = r.satisfied;
          d["samples"] = to_py(r.instance.samples);
          d["p"] = to_py(r.instance.p);
          return d;
        },
        py::arg("group") = "safe256", py::arg("tp") = 1.0, py::arg("fp") = 0.0, py::arg("seed") = 0,
        py::arg("ell") = 8, py::arg("d_required") = py::none(), py::arg("voting") = true,
        py::arg("budget") = 10'000'000, "Simulate-mode key recovery.");

  m.def("sweep_fixture",
        [](double pad_prob, std::uint64_t d_required, std::uint64_t seed) {
          attack::ParamGrid grid;
          std::vector<attack::LabeledTraces> corpus;
          attack::SweepFixture fx;
          for (auto r : grid.r) {
            fx.wait_r = r;
            fx.seed = ++seed;
            corpus.push_back(attack::simulate_sweep_corpus(fx));
          }
          const auto rep = attack::sweep(corpus, grid, pad_prob, d_required);
          return attack::sweep_json(rep);
        },
        py::arg("pad_prob") = 1.0 / 177, py::arg("d_required") = 173, py::arg("seed") = 1,
        "Sweep a synthetic HyperDegrade corpus; returns the report as JSON text.");

  m.def("save_traces",
        [](const std::string& path, const std::vector<std::vector<std::uint64_t>>& traces,
           const std::vector<int>& labels, const std::string& strategy, std::uint32_t wait_r) {
          trace::save_traces(make_set(traces, labels, strategy, wait_r), path);
        },
        py::arg("path"), py::arg("traces"), py::arg("labels") = std::vector<int>{},
        py::arg("strategy") = "nodegrade", py::arg("wait_r") = 256);
  m.def("load_traces", [](const std::string& path) {
    const auto set = trace::load_traces(path);
    py::list traces, labels;
    for (const auto& t : set.traces()) {
      traces.append(py::cast(t.samples));
      labels.append(t.meta.class_label ? py::object(py::int_(*t.meta.class_label)) : py::none());
    }
    py::dict d;
    d["traces"] = traces;
    d["labels"] = labels;
    d["strategy"] = set.empty() ? "nodegrade" : to_string(set.strategy());
    d["wait_r"] = set.empty() ? 0u : set.wait_r();
    return d;
  });
}
