#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dstat/cones.hpp"
#include "dstat/dcalc.hpp"
#include "dstat/io.hpp"
#include "dstat/penalty.hpp"
#include "dstat/repro.hpp"
#include "dstat/rnn.hpp"
#include "dstat/solver.hpp"
#include "dstat/stationarity.hpp"

namespace py = pybind11;
using namespace dstat;

namespace {

py::dict report_dict(const StationarityReport& r) {
  py::dict d;
  d["target"] = target_name(r.target);
  d["order"] = r.order;
  d["verdict"] = verdict_name(r.verdict);
  d["witness"] = r.witness ? py::cast(*r.witness) : py::none();
  d["witness_reduced"] = r.witness_reduced;
  d["witness_value"] = r.witness_value;
  d["min_value"] = r.min_value;
  d["mode"] = r.mode;
  d["pieces"] = r.pieces;
  d["samples"] = r.samples;
  d["note"] = r.note;
  return d;
}

CheckOptions options(const std::string& mode, double tol, int starts, std::uint64_t seed) {
  CheckOptions o;
  o.mode = mode_from_name(mode);
  o.tol = tol;
  o.starts = starts;
  o.seed = seed;
  return o;
}

py::dict dd_dict(const DDValue& v) {
  py::dict d;
  d["value"] = v.value;
  d["first"] = v.first;
  d["second"] = v.second ? py::cast(*v.second) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_dstat, m) {
  m.doc() = "Directional stationarity checks for multicomposite problems";
  m.attr("__version__") = DSTAT_VERSION;

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<InfeasiblePointError>(m, "InfeasiblePointError", PyExc_ValueError);

  py::class_<Blocks>(m, "Point")
      .def(py::init<>())
      .def(py::init([](std::vector<double> theta, std::vector<std::vector<double>> u) { return Blocks{theta, u}; }),
           py::arg("theta"), py::arg("u"))
      .def_readwrite("theta", &Blocks::theta)
      .def_readwrite("u", &Blocks::u)
      .def("__repr__", [](const Blocks& b) { return "Point(" + blocks_to_json(b).dump() + ")"; });

  py::class_<CompositeProblem>(m, "Problem")
      .def_static("from_json", [](const std::string& s) { return parse_problem(s); }, py::arg("text"))
      .def("to_json", [](const CompositeProblem& p) { return serialize_problem(p); })
      .def_readonly("n", &CompositeProblem::n)
      .def_readonly("dims", &CompositeProblem::dims)
      .def_readonly("lam", &CompositeProblem::lambda)
      .def_property_readonly("L", &CompositeProblem::L)
      .def("zeros", [](const CompositeProblem& p) { return zeros_like(p); })
      .def("eval_layers", &eval_layers, py::arg("theta"))
      .def("F", &eval_F, py::arg("z"))
      .def("Theta", &eval_Theta, py::arg("z"), py::arg("beta"))
      .def("objective", &eval_objective, py::arg("theta"))
      .def("max_residual", [](const CompositeProblem& p, const Point& z) { return residuals(p, z).max_abs; })
      .def("reference", [](const CompositeProblem& p, const std::vector<double>& beta) {
        return reference_point_and_level(p, beta);
      });

  m.def("ex2_problem", &ex2_problem);
  m.def("relu_gate_problem", &appendix_a_problem);
  m.def("rnn_desk_problem", [](std::uint64_t seed) { return build_problem(desk_spec(seed)); }, py::arg("seed") = 2024);

  m.def("dd_F", [](const CompositeProblem& p, const Point& z, const Direction& d, int order) {
    return dd_dict(dd_F(p, z, d, order));
  }, py::arg("p"), py::arg("z"), py::arg("d"), py::arg("order") = 1);
  m.def("dd_Theta", [](const CompositeProblem& p, const Point& z, const Direction& d, const std::vector<double>& beta,
                       int order) { return dd_dict(dd_Theta(p, z, d, beta, order)); },
        py::arg("p"), py::arg("z"), py::arg("d"), py::arg("beta"), py::arg("order") = 1);
  m.def("dd_Psi", [](const CompositeProblem& p, const std::vector<double>& theta, const std::vector<double>& dtheta,
                     int order) { return dd_dict(dd_Psi(p, theta, dtheta, order)); },
        py::arg("p"), py::arg("theta"), py::arg("dtheta"), py::arg("order") = 1);

  m.def("lift_direction", &lift_direction, py::arg("p"), py::arg("z"), py::arg("dtheta"));
  m.def("tangent_membership", [](const CompositeProblem& p, const Point& z, const Direction& d) {
    auto c = tangent_membership(p, z, d);
    py::dict out;
    out["in_tangent"] = c.in_tangent;
    out["in_radial"] = c.in_radial ? py::cast(*c.in_radial) : py::none();
    out["max_violation"] = c.max_violation;
    out["worst_layer"] = c.worst_layer;
    return out;
  }, py::arg("p"), py::arg("z"), py::arg("d"));

  m.def("thresholds", &thresholds, py::arg("K_g"), py::arg("K"));
  m.def("penalty_config", [](const CompositeProblem& p, const std::vector<double>& beta, int budget, std::uint64_t seed) {
    SamplerOptions o;
    o.budget = budget;
    o.seed = seed;
    PenaltyConfig c = make_penalty_config(p, beta, o);
    py::dict d;
    d["beta"] = c.beta;
    d["K_g"] = c.K_g;
    d["K"] = c.K;
    d["gamma_bar"] = c.gamma_bar;
    d["thresholds"] = c.thresholds;
    d["certified"] = c.certified;
    d["heuristic"] = c.heuristic;
    d["method"] = c.method;
    return d;
  }, py::arg("p"), py::arg("beta"), py::arg("budget") = 10000, py::arg("seed") = 1);
  m.def("rnn_thresholds", [](std::uint64_t seed) {
    RnnThresholds t = rnn_thresholds(desk_spec(seed));
    return py::dict(py::arg("gamma_y") = t.gamma_y, py::arg("gamma_1") = t.gamma_1, py::arg("t1") = t.t1,
                    py::arg("t2") = t.t2, py::arg("K_g") = t.K_g);
  }, py::arg("seed") = 2024);

  m.def("check", [](const CompositeProblem& p, const Point& z, const std::string& target, int order,
                    std::optional<std::vector<double>> beta, const std::string& mode, double tol, int starts,
                    std::uint64_t seed) {
    CheckOptions o = options(mode, tol, starts, seed);
    Target t = target_from_name(target);
    if (order == 2) return report_dict(check_second_order(p, z, t, beta, o));
    if (order != 1) throw std::invalid_argument("order must be 1 or 2");
    switch (t) {
      case Target::P:
        return report_dict(check_d_stationary_P(p, z.theta, o));
      case Target::P0:
        return report_dict(check_d_stationary_P0(p, z, o));
      case Target::P1:
        if (!beta) throw std::invalid_argument("target p1 needs beta");
        return report_dict(check_d_stationary_P1(p, z, *beta, o));
    }
    throw std::invalid_argument("unknown target");
  }, py::arg("p"), py::arg("z"), py::arg("target") = "p1", py::arg("order") = 1, py::arg("beta") = py::none(),
        py::arg("mode") = "auto", py::arg("tol") = 1e-8, py::arg("starts") = 64, py::arg("seed") = 7);

  m.def("solve", [](const CompositeProblem& p, const std::vector<double>& beta, int max_iters, const std::string& rule,
                    double step, double stop_tol, const std::string& init, std::optional<Point> init_point,
                    std::uint64_t seed) {
    SolveConfig c;
    c.max_iters = max_iters;
    c.rule = step_rule_from_name(rule);
    c.step = step;
    c.stop_tol = stop_tol;
    c.init = init_policy_from_name(init);
    c.init_point = init_point;
    c.seed = seed;
    auto [z, tr] = minimize_theta(p, beta, c);
    std::vector<py::tuple> rows;
    for (const auto& r : tr.rows) rows.push_back(py::make_tuple(r.iter, r.theta, r.max_residual, r.step));
    py::dict d;
    d["point"] = z;
    d["reason"] = tr.reason;
    d["iterations"] = tr.iterations;
    d["probe_min"] = tr.probe_min;
    d["trace"] = rows;
    return d;
  }, py::arg("p"), py::arg("beta"), py::arg("max_iters") = 500, py::arg("rule") = "armijo", py::arg("step") = 1.0,
        py::arg("stop_tol") = 1e-6, py::arg("init") = "zero", py::arg("init_point") = py::none(),
        py::arg("seed") = 1);

  m.def("repro_names", &repro_names);
  m.def("repro", [](const std::string& name) {
    ReproResult r = run_repro(name);
    py::dict d;
    d["name"] = r.name;
    d["pass"] = r.pass();
    d["lines"] = r.lines;
    d["seconds"] = r.seconds;
    return d;
  }, py::arg("name"));
}
