#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fisher/checks.hpp"
#include "fisher/dynamic.hpp"
#include "fisher/equilibrium.hpp"
#include "fisher/io.hpp"
#include "fisher/scenario.hpp"
#include "fisher/tatonnement.hpp"
#include "fisher/theory.hpp"

using namespace fisher;

namespace {

struct Options {
  std::string market_path;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> params;
  std::optional<double> lambda, sigma, theta, stop_tol;
  std::optional<std::size_t> max_iters, plateau_window;
  std::string p0;
  std::string trace_path;
  std::string report_path;
  std::string out_path;
  std::string checks = "all";
  std::optional<double> kappa, epsilon;
  std::string m_constant = "corrected";
  double tol = 1e-9;
  std::size_t starts = 5;
  std::size_t grid = 9;
  double budget_drift = 0.0;
  double supply_wave = 0.0, supply_period = 20.0;
  double coeff_wave = 0.0, coeff_period = 20.0;
};

struct Input {
  Market market;
  PriceVector p0;
  TatConfig config;
};

void add_source(CLI::App* app, Options& o) {
  app->add_option("--market", o.market_path, "Market JSON file")->check(CLI::ExistingFile);
  app->add_option("--scenario", o.scenario, "Generated scenario: example1, large-linear, random-ces");
  app->add_option("--seed", o.seed, "Seed for generated scenarios");
  app->add_option("--param", o.params, "Scenario parameter key=value (repeatable)");
  app->add_option("--p0", o.p0, "Initial prices: a,b,c | reserves | uniform:<value>");
}

void add_config(CLI::App* app, Options& o) {
  app->add_option("--lambda", o.lambda, "Step size in (0, 1]");
  app->add_option("--sigma", o.sigma, "Large-market threshold in (0, 1)");
  app->add_option("--theta", o.theta, "Analysis parameter in (0, 1)");
  app->add_option("--max-iters", o.max_iters, "Iteration (round) limit");
  app->add_option("--stop-tol", o.stop_tol, "Plateau tolerance");
  app->add_option("--plateau-window", o.plateau_window, "Consecutive flat steps that end a run");
}

ScenarioParams parse_params(const std::vector<std::string>& items) {
  ScenarioParams out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--param expects key=value, got '" + item + "'");
    out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return out;
}

PriceVector parse_p0(const std::string& spec, const Market& market) {
  const std::size_t n = market.num_goods();
  if (spec == "reserves") return PriceVector(market.reserves());
  if (spec.rfind("uniform:", 0) == 0) return PriceVector(std::vector<double>(n, std::stod(spec.substr(8))));
  std::vector<double> v;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  if (v.size() != n) throw std::invalid_argument("--p0 needs " + std::to_string(n) + " prices");
  return PriceVector(std::move(v));
}

Input resolve(const Options& o) {
  if (o.market_path.empty() == o.scenario.empty()) {
    throw std::invalid_argument("give exactly one of --market or --scenario");
  }
  std::optional<Input> in;
  if (!o.scenario.empty()) {
    if (!o.seed) throw std::invalid_argument("--seed is required for generated scenarios");
    auto sc = generate_scenario(o.scenario, parse_params(o.params), *o.seed);
    in = Input{std::move(sc.market), std::move(sc.p0), sc.config};
  } else {
    if (!o.params.empty()) throw std::invalid_argument("--param applies to generated scenarios only");
    auto loaded = load_market(o.market_path);
    for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
    PriceVector p0;
    if (loaded.initial_prices) {
      p0 = *loaded.initial_prices;
    } else {
      double u = loaded.market.total_budget() / static_cast<double>(loaded.market.num_goods());
      std::vector<double> v(loaded.market.num_goods());
      for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::max(u, loaded.market.reserve(j));
      p0 = PriceVector(std::move(v));
    }
    in = Input{std::move(loaded.market), std::move(p0), TatConfig{}};
  }
  if (!o.p0.empty()) in->p0 = parse_p0(o.p0, in->market);
  if (o.lambda) in->config.lambda = *o.lambda;
  if (o.sigma) in->config.sigma = *o.sigma;
  if (o.theta) in->config.theta = *o.theta;
  if (o.max_iters) in->config.max_iters = *o.max_iters;
  if (o.stop_tol) in->config.stop_tol = *o.stop_tol;
  if (o.plateau_window) in->config.plateau_window = *o.plateau_window;
  in->config.validate();
  return std::move(*in);
}

template <class Fn>
void write_or_stdout(const std::string& path, Fn&& fill) {
  std::ostringstream os;
  fill(os);
  if (path.empty() || path == "-") {
    std::cout << os.str();
  } else {
    write_file(path, os.str());
  }
}

void write_if(const std::string& path, const std::function<void(std::ostream&)>& fill) {
  if (!path.empty()) write_or_stdout(path, fill);
}

std::string join(const PriceVector& p) {
  std::string s;
  for (std::size_t j = 0; j < p.size(); ++j) s += (j ? "," : "") + format_double(p[j]);
  return s;
}

int finish(const std::vector<BoundReport>& reports) {
  std::map<std::string, CheckTally> by_name;
  for (const auto& r : reports) {
    auto& t = by_name[r.check];
    if (r.passed()) ++t.passed;
    if (r.failed()) ++t.failed;
    if (r.status == CheckStatus::Inapplicable) ++t.inapplicable;
  }
  for (const auto& [name, t] : by_name) {
    std::cout << "  " << name << ": " << t.passed << " pass, " << t.failed << " fail, "
              << t.inapplicable << " inapplicable\n";
  }
  std::map<std::string, std::string> reasons;
  for (const auto& r : reports) {
    if (r.status == CheckStatus::Inapplicable && !reasons.count(r.check)) reasons[r.check] = r.note;
  }
  for (const auto& [name, why] : reasons) std::cout << "  " << name << " inapplicable: " << why << "\n";

  CheckTally t = tally(reports);
  if (t.failed > 0) {
    std::cout << "FAILED " << t.failed << "/" << t.evaluated() << " checks\n";
    return 1;
  }
  std::cout << "OK " << t.passed << "/" << t.evaluated() << " checks passed\n";
  return 0;
}

int cmd_run(const Options& o) {
  Input in = resolve(o);
  Trace trace = run(in.market, in.p0, in.config);
  write_if(o.trace_path, [&](std::ostream& os) { emit_trace(trace, os); });
  std::cout << "steps " << trace.steps.size() << "\n"
            << "plateau " << (trace.plateau_reached ? "true" : "false") << "\n"
            << "final_prices " << join(trace.price_path().back()) << "\n"
            << "final_potential " << format_double(trace.potential_path().back()) << "\n";
  return 0;
}

int cmd_check(const Options& o) {
  Input in = resolve(o);
  Trace trace = run(in.market, in.p0, in.config);
  write_if(o.trace_path, [&](std::ostream& os) { emit_trace(trace, os); });
  CheckOptions copts;
  copts.kappa = o.kappa;
  copts.epsilon = o.epsilon;
  copts.eq.tol = o.tol;
  copts.eq.starts = o.starts;
  copts.m_constant = parse_m_constant(o.m_constant);
  CheckRun cr = run_checks(in.market, trace, in.config, CheckSelection::parse(o.checks), copts);
  write_if(o.report_path, [&](std::ostream& os) { emit_report(cr.reports, os); });

  std::cout << "steps " << trace.steps.size() << " plateau " << (trace.plateau_reached ? "true" : "false") << "\n";
  std::cout << "epsilon " << format_double(cr.epsilon) << " M " << format_double(cr.m_value) << "\n";
  if (cr.kappa) std::cout << "kappa " << format_double(*cr.kappa) << "\n";
  if (cr.theorem1) {
    std::cout << "alpha " << format_double(cr.theorem1->alpha.value)
              << (cr.theorem1->alpha.guaranteed ? "" : " (no-guarantee)") << " plateau "
              << format_double(cr.theorem1->plateau) << "\n";
  }
  return finish(cr.reports);
}

int cmd_solve(const Options& o) {
  Input in = resolve(o);
  EqOptions eq;
  eq.tol = o.tol;
  eq.starts = o.starts;
  EqSolution s = solve_equilibrium(in.market, eq);
  write_or_stdout(o.out_path, [&](std::ostream& os) {
    os << "{\n  \"p_star\": [" << join(s.p_star) << "],\n  \"f_star\": " << format_double(s.f_star)
       << ",\n  \"residual\": " << format_double(s.residual) << ",\n  \"iterations\": " << s.iterations;
    if (in.market.all_reserves_positive()) {
      os << ",\n  \"kappa\": " << format_double(kappa_of(s.p_star, in.market.reserves()));
    }
    os << "\n}\n";
  });
  return 0;
}

int cmd_epsilon(const Options& o) {
  Input in = resolve(o);
  Trace trace = run(in.market, in.p0, in.config);
  std::cout << "observed " << format_double(epsilon_observed(trace.steps, in.config.sigma, in.market))
            << " steps " << trace.steps.size() << "\n";
  bool all_linear = true;
  for (const auto& b : in.market.buyers()) all_linear = all_linear && b.kind() == UtilityKind::Linear;
  if (all_linear && in.market.all_reserves_positive()) {
    auto est = epsilon_apriori_linear(in.market, in.config.lambda, o.grid);
    std::cout << "apriori_estimate " << format_double(est.value) << " grid " << est.grid_resolution
              << " points " << est.grid_points;
    if (est.worst_good) std::cout << " worst_good " << *est.worst_good;
    std::cout << "\n";
  } else {
    std::cout << "apriori_estimate unavailable (needs an all-linear market with positive reserves)\n";
  }
  return 0;
}

int cmd_dynamic(const Options& o) {
  Input in = resolve(o);
  const std::size_t rounds = in.config.max_iters;
  auto schedule = PerturbationSchedule::identity();
  if (o.budget_drift != 0.0) schedule = schedule.combined(PerturbationSchedule::budget_drift(o.budget_drift, rounds));
  if (o.supply_wave != 0.0) schedule = schedule.combined(PerturbationSchedule::supply_wave(o.supply_wave, o.supply_period));
  if (o.coeff_wave != 0.0) schedule = schedule.combined(PerturbationSchedule::coefficient_wave(o.coeff_wave, o.coeff_period));

  EqOptions eq;
  eq.tol = o.tol;
  eq.starts = o.starts;
  DynamicTrace dt = dynamic_run(in.market, in.p0, schedule, in.config, eq);
  auto steps = dt.steps();
  write_if(o.trace_path, [&](std::ostream& os) { emit_trace(steps, os); });

  std::vector<BoundReport> reports;
  for (std::size_t t = 0; t < dt.rounds.size(); ++t) {
    reports.push_back(make_bound("gap_nonnegative", -dt.rounds[t].gap, 0.0, t));
  }
  EnvelopeSummary env;
  if (in.market.all_reserves_positive()) {
    TheoremParams params = dynamic_params(dt, in.market, in.config);
    if (o.kappa) params.kappa = *o.kappa;
    if (o.epsilon) params.epsilon = *o.epsilon;
    params.m_constant = parse_m_constant(o.m_constant);
    env = check_theorem2_envelope(dt, params);
    std::cout << "epsilon " << format_double(params.epsilon) << " kappa " << format_double(params.kappa) << "\n";
  } else {
    env.reports.push_back(inapplicable("theorem2_envelope", "reserve prices required for convergence constants"));
  }
  reports.insert(reports.end(), env.reports.begin(), env.reports.end());
  write_if(o.report_path, [&](std::ostream& os) { emit_report(reports, os); });

  std::cout << "rounds " << dt.rounds.size() << " D " << format_double(dt.max_disturbance()) << " M "
            << format_double(env.m_value) << " alpha " << format_double(env.alpha.value) << "\n";
  return finish(reports);
}

int cmd_scenario(const Options& o) {
  if (o.scenario.empty()) throw std::invalid_argument("--scenario is required");
  if (!o.seed) throw std::invalid_argument("--seed is required for generated scenarios");
  auto sc = generate_scenario(o.scenario, parse_params(o.params), *o.seed);
  write_or_stdout(o.out_path, [&](std::ostream& os) { os << emit_market(sc.market, sc.p0); });
  std::cerr << "suggested lambda " << format_double(sc.config.lambda) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tatonnement simulation and bound checking for Fisher markets with CES buyers"};
  app.require_subcommand(1);
  Options o;

  auto* run_cmd = app.add_subcommand("run", "Run tatonnement and write the trace");
  add_source(run_cmd, o);
  add_config(run_cmd, o);
  run_cmd->add_option("--trace", o.trace_path, "Trace CSV output (- for stdout)");

  auto* check = app.add_subcommand("check", "Run tatonnement and evaluate the bound checkers");
  add_source(check, o);
  add_config(check, o);
  check->add_option("--trace", o.trace_path, "Trace CSV output");
  check->add_option("--report", o.report_path, "Report CSV output (- for stdout)");
  check->add_option("--checks", o.checks, "Comma-separated checks or 'all'");
  check->add_option("--kappa", o.kappa, "Override kappa");
  check->add_option("--epsilon", o.epsilon, "Override epsilon (default: observed)");
  check->add_option("--m-constant", o.m_constant, "Price-sum coefficient: corrected | published");
  check->add_option("--tol", o.tol, "Equilibrium residual tolerance");
  check->add_option("--starts", o.starts, "Equilibrium multistart count");

  auto* solve = app.add_subcommand("solve-eq", "Compute equilibrium prices");
  add_source(solve, o);
  solve->add_option("--tol", o.tol, "Residual tolerance");
  solve->add_option("--starts", o.starts, "Multistart count");
  solve->add_option("--out", o.out_path, "JSON output (default stdout)");

  auto* eps = app.add_subcommand("epsilon", "Observed and a-priori large-market epsilon");
  add_source(eps, o);
  add_config(eps, o);
  eps->add_option("--grid", o.grid, "Grid points per coordinate for the a-priori estimate");

  auto* dyn = app.add_subcommand("dynamic", "Run a perturbed market and check the tracking envelope");
  add_source(dyn, o);
  add_config(dyn, o);
  dyn->add_option("--trace", o.trace_path, "Trace CSV output");
  dyn->add_option("--report", o.report_path, "Report CSV output");
  dyn->add_option("--budget-drift", o.budget_drift, "Budgets scale by 1 + rate t");
  dyn->add_option("--supply-wave", o.supply_wave, "Supply amplitude of 1 + a sin(t/period + j)");
  dyn->add_option("--supply-period", o.supply_period, "Supply wave period");
  dyn->add_option("--coeff-wave", o.coeff_wave, "Coefficient amplitude of 1 + a sin(t/period + i + j)");
  dyn->add_option("--coeff-period", o.coeff_period, "Coefficient wave period");
  dyn->add_option("--kappa", o.kappa, "Override kappa");
  dyn->add_option("--epsilon", o.epsilon, "Override epsilon");
  dyn->add_option("--m-constant", o.m_constant, "Price-sum coefficient: corrected | published");
  dyn->add_option("--tol", o.tol, "Equilibrium residual tolerance");
  dyn->add_option("--starts", o.starts, "Equilibrium multistart count");

  auto* scen = app.add_subcommand("scenario", "Write a generated market as JSON");
  scen->add_option("name", o.scenario, "example1, large-linear or random-ces")->required();
  scen->add_option("--seed", o.seed, "Generator seed");
  scen->add_option("--param", o.params, "Scenario parameter key=value (repeatable)");
  scen->add_option("--out", o.out_path, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(o);
    if (check->parsed()) return cmd_check(o);
    if (solve->parsed()) return cmd_solve(o);
    if (eps->parsed()) return cmd_epsilon(o);
    if (dyn->parsed()) return cmd_dynamic(o);
    if (scen->parsed()) return cmd_scenario(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
