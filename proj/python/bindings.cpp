#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "hsp/dynamics.hpp"
#include "hsp/errors.hpp"
#include "hsp/pipeline.hpp"
#include "hsp/symbolic.hpp"

namespace py = pybind11;

namespace {

hsp::SymbolicModel model_of(const std::vector<std::size_t>& times, const std::vector<double>& weights) {
  return hsp::SymbolicModel::make_synthetic(times, weights);
}

std::vector<std::pair<double, double>> orbit(const std::string& system, std::pair<double, double> x, std::size_t n) {
  const auto sys = hsp::make_system(system);
  const auto seg = hsp::iterate(*sys, {x.first, x.second}, n);
  std::vector<std::pair<double, double>> out;
  for (const auto& p : seg.points()) out.emplace_back(p.x, p.y);
  return out;
}

py::dict lyapunov(const std::string& system, std::pair<double, double> x, std::size_t n) {
  const auto sys = hsp::make_system(system);
  const auto rep = hsp::finite_time_lyapunov(*sys, {x.first, x.second}, n);
  py::dict d;
  d["horizon"] = rep.horizon;
  d["exponents"] = rep.exponents;
  d["min_abs"] = rep.min_abs;
  d["direction_angles"] = rep.direction_angles;
  return d;
}

py::dict pressure(const std::vector<std::size_t>& times, const std::vector<double>& weights, std::size_t n_max) {
  const auto est = hsp::pressure_periodic(model_of(times, weights), n_max);
  py::dict d;
  d["value"] = est.value;
  d["lower"] = est.lower;
  d["upper"] = est.upper;
  d["n"] = est.n;
  d["method"] = hsp::to_string(est.method);
  return d;
}

std::string run_theorem_a(const std::string& config_json) {
  const auto cfg = hsp::parse_run_config(hsp::Json::parse(config_json));
  return hsp::run_theorem_a(cfg).json.dump(2);
}

std::vector<py::dict> validate(std::size_t n, double rho, std::optional<std::size_t> rectangles,
                               std::optional<double> delta, std::optional<double> max_lipschitz_psi,
                               std::optional<double> lipschitz_phi) {
  hsp::ValidationInput in;
  in.n = n;
  in.rho = rho;
  in.rectangles = rectangles;
  in.delta = delta;
  in.max_lipschitz_psi = max_lipschitz_psi;
  in.lipschitz_phi = lipschitz_phi;
  std::vector<py::dict> out;
  for (const auto& c : hsp::validate_constants(in)) {
    py::dict d;
    d["name"] = c.name;
    d["required"] = c.required;
    d["passed"] = c.passed;
    d["measured"] = c.measured;
    d["bound"] = c.bound;
    out.push_back(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Variable-return-time horseshoes and topological pressure";

  py::register_exception<hsp::Error>(m, "Error");
  py::register_exception<hsp::ConfigError>(m, "ConfigError");
  py::register_exception<hsp::OrbitEscaped>(m, "OrbitEscaped");
  py::register_exception<hsp::InfeasiblePeriod>(m, "InfeasiblePeriod");

  m.def("orbit", &orbit, py::arg("system"), py::arg("x"), py::arg("n"),
        "Forward orbit x, f(x), ..., f^{n-1}(x) of a built-in system.");
  m.def("lyapunov", &lyapunov, py::arg("system"), py::arg("x"), py::arg("n"),
        "Finite-time Lyapunov exponents at x over n iterates.");
  m.def("bowen_root",
        [](const std::vector<std::size_t>& t, const std::vector<double>& w) { return hsp::bowen_root(model_of(t, w)); },
        py::arg("return_times"), py::arg("weights"));
  m.def("pressure_periodic", &pressure, py::arg("return_times"), py::arg("weights"), py::arg("n_max") = 200);
  m.def("log_counts",
        [](const std::vector<std::size_t>& t, const std::vector<double>& w, std::size_t n_max) {
          return hsp::periodic_sum_table(model_of(t, w), n_max).log_c;
        },
        py::arg("return_times"), py::arg("weights"), py::arg("n_max"));
  m.def("admissible_periods",
        [](const std::vector<std::size_t>& t, std::size_t p) {
          return hsp::admissible_periods(model_of(t, std::vector<double>(t.size(), 0.0)), p).periods;
        },
        py::arg("return_times"), py::arg("p"));
  m.def("word_count_bounds", &hsp::word_count_bounds, py::arg("N"), py::arg("n"), py::arg("rho"));
  m.def("run_theorem_a", &run_theorem_a, py::arg("config_json"),
        "Runs the staged pipeline on a JSON config and returns the report as JSON text.");
  m.def("validate_constants", &validate, py::arg("n"), py::arg("rho"), py::arg("rectangles") = py::none(),
        py::arg("delta") = py::none(), py::arg("max_lipschitz_psi") = py::none(),
        py::arg("lipschitz_phi") = py::none());
}
