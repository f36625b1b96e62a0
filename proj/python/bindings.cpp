#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fisher/checks.hpp"
#include "fisher/equilibrium.hpp"
#include "fisher/io.hpp"
#include "fisher/scenario.hpp"
#include "fisher/tatonnement.hpp"
#include "fisher/theory.hpp"

namespace py = pybind11;
using namespace fisher;

namespace {

PriceVector prices(const std::vector<double>& p) { return PriceVector(p); }

std::string trace_csv(const Trace& trace) {
  std::ostringstream os;
  emit_trace(trace, os);
  return os.str();
}

std::string report_csv(const std::vector<BoundReport>& reports) {
  std::ostringstream os;
  emit_report(reports, os);
  return os.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fisher-market tatonnement with CES buyers";

  py::register_exception<TheoryInapplicable>(m, "TheoryInapplicable", PyExc_ValueError);
  py::register_exception<MarketFormatError>(m, "MarketFormatError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<CesBuyer>(m, "CesBuyer")
      .def_static("linear", &CesBuyer::linear, py::arg("budget"), py::arg("coeffs"))
      .def_static("cobb_douglas", &CesBuyer::cobb_douglas, py::arg("budget"), py::arg("coeffs"))
      .def_static("general", &CesBuyer::general, py::arg("budget"), py::arg("rho"), py::arg("coeffs"))
      .def_static("from_rho", &buyer_for_rho, py::arg("budget"), py::arg("rho"), py::arg("coeffs"))
      .def_property_readonly("budget", &CesBuyer::budget)
      .def_property_readonly("rho", &CesBuyer::rho)
      .def_property_readonly("coeffs", &CesBuyer::coeffs)
      .def_property_readonly("c", &CesBuyer::c);

  py::class_<Market>(m, "Market")
      .def(py::init([](std::vector<CesBuyer> buyers, std::vector<double> supplies, std::vector<double> reserves) {
             if (supplies.size() != reserves.size()) throw py::value_error("supplies and reserves differ in length");
             std::vector<Good> goods;
             for (std::size_t j = 0; j < supplies.size(); ++j) goods.push_back({supplies[j], reserves[j]});
             return Market(std::move(buyers), std::move(goods));
           }),
           py::arg("buyers"), py::arg("supplies"), py::arg("reserves"))
      .def_property_readonly("buyers", &Market::buyers)
      .def_property_readonly("supplies", &Market::supplies)
      .def_property_readonly("reserves", &Market::reserves)
      .def_property_readonly("total_budget", &Market::total_budget)
      .def("to_json", [](const Market& mk) { return emit_market(mk); });

  m.def("load_market", [](const std::string& path) { return load_market(path).market; }, py::arg("path"));
  m.def("parse_market", [](const std::string& text) { return parse_market(text).market; }, py::arg("text"));

  m.def("potential", [](const Market& mk, const std::vector<double>& p) { return potential(mk, prices(p)); });
  m.def("excess_demand", [](const Market& mk, const std::vector<double>& p) { return excess_demand(mk, prices(p)); });
  m.def("demand", [](const Market& mk, const std::vector<double>& p) { return demand(mk, prices(p)); });
  m.def("max_utility", [](const CesBuyer& b, const std::vector<double>& p) { return max_utility(b, prices(p)); });

  py::class_<TatConfig>(m, "TatConfig")
      .def(py::init<>())
      .def_readwrite("lambda_", &TatConfig::lambda)
      .def_readwrite("sigma", &TatConfig::sigma)
      .def_readwrite("theta", &TatConfig::theta)
      .def_readwrite("max_iters", &TatConfig::max_iters)
      .def_readwrite("stop_tol", &TatConfig::stop_tol)
      .def_readwrite("plateau_window", &TatConfig::plateau_window);

  py::class_<Trace>(m, "Trace")
      .def_readonly("plateau_reached", &Trace::plateau_reached)
      .def_property_readonly("num_steps", [](const Trace& t) { return t.steps.size(); })
      .def_property_readonly("prices", [](const Trace& t) {
        std::vector<std::vector<double>> out;
        for (const auto& p : t.price_path()) out.push_back(p.vec());
        return out;
      })
      .def_property_readonly("potentials", &Trace::potential_path)
      .def("to_csv", &trace_csv);

  m.def("run", [](const Market& mk, const std::vector<double>& p0, const TatConfig& cfg) { return run(mk, prices(p0), cfg); },
        py::arg("market"), py::arg("p0"), py::arg("config") = TatConfig{});

  py::class_<EqSolution>(m, "EqSolution")
      .def_property_readonly("p_star", [](const EqSolution& s) { return s.p_star.vec(); })
      .def_readonly("f_star", &EqSolution::f_star)
      .def_readonly("residual", &EqSolution::residual);

  m.def("solve_equilibrium", [](const Market& mk, double tol, std::size_t starts, std::uint64_t seed) {
        EqOptions o;
        o.tol = tol;
        o.starts = starts;
        o.seed = seed;
        return solve_equilibrium(mk, o);
      },
        py::arg("market"), py::arg("tol") = 1e-9, py::arg("starts") = 5, py::arg("seed") = 0);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("market", &Scenario::market)
      .def_property_readonly("p0", [](const Scenario& s) { return s.p0.vec(); })
      .def_readonly("config", &Scenario::config);
  m.def("scenario", &generate_scenario, py::arg("name"), py::arg("params") = ScenarioParams{}, py::arg("seed"));
  m.def("scenario_names", &scenario_names);

  m.def("h_c", &h_c, py::arg("kappa"), py::arg("c"));
  m.def("big_C", &big_C, py::arg("kappa"), py::arg("c"));

  py::class_<BoundReport>(m, "BoundReport")
      .def_readonly("check", &BoundReport::check)
      .def_readonly("t", &BoundReport::t)
      .def_readonly("good", &BoundReport::good)
      .def_readonly("lhs", &BoundReport::lhs)
      .def_readonly("rhs", &BoundReport::rhs)
      .def_readonly("slack", &BoundReport::slack)
      .def_readonly("note", &BoundReport::note)
      .def_property_readonly("status", [](const BoundReport& r) { return std::string(to_string(r.status)); });

  m.def("run_checks", [](const Market& mk, const Trace& tr, const TatConfig& cfg, const std::string& checks) {
        return run_checks(mk, tr, cfg, CheckSelection::parse(checks)).reports;
      },
        py::arg("market"), py::arg("trace"), py::arg("config") = TatConfig{}, py::arg("checks") = "all");
  m.def("report_csv", &report_csv);
}
