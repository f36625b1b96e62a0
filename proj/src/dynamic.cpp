#include "fisher/dynamic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fisher {

namespace {

double apply(double base, double mult, const MultiplierBounds& bounds, const std::string& what) {
  if (!(std::isfinite(mult) && mult > 0.0)) {
    throw std::invalid_argument(what + " multiplier must be positive and finite");
  }
  const double slack = 1e-12;
  if (mult < bounds.lo * (1.0 - slack) || mult > bounds.hi * (1.0 + slack)) {
    throw std::invalid_argument(what + " multiplier outside its declared bounds");
  }
  return base * mult;
}

}  // namespace

PerturbationSchedule PerturbationSchedule::identity() { return {}; }

PerturbationSchedule PerturbationSchedule::budget_drift(double rate, std::size_t horizon) {
  PerturbationSchedule s;
  s.budget = [rate](std::size_t t, std::size_t) { return 1.0 + rate * static_cast<double>(t); };
  double end = 1.0 + rate * static_cast<double>(horizon);
  s.budget_bounds = {std::min(1.0, end), std::max(1.0, end)};
  return s;
}

PerturbationSchedule PerturbationSchedule::supply_wave(double amplitude, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("supply period must be positive");
  PerturbationSchedule s;
  s.supply = [amplitude, period](std::size_t t, std::size_t j) {
    return 1.0 + amplitude * std::sin(static_cast<double>(t) / period + static_cast<double>(j));
  };
  s.supply_bounds = {1.0 - std::abs(amplitude), 1.0 + std::abs(amplitude)};
  return s;
}

PerturbationSchedule PerturbationSchedule::coefficient_wave(double amplitude, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("coefficient period must be positive");
  PerturbationSchedule s;
  s.coeff = [amplitude, period](std::size_t t, std::size_t i, std::size_t j) {
    return 1.0 + amplitude * std::sin(static_cast<double>(t) / period + static_cast<double>(i + j));
  };
  s.coeff_bounds = {1.0 - std::abs(amplitude), 1.0 + std::abs(amplitude)};
  return s;
}

PerturbationSchedule PerturbationSchedule::combined(const PerturbationSchedule& other) const {
  auto mul2 = [](auto f, auto g) -> std::function<double(std::size_t, std::size_t)> {
    if (!f) return g;
    if (!g) return f;
    return [f, g](std::size_t t, std::size_t k) { return f(t, k) * g(t, k); };
  };
  auto bounds = [](MultiplierBounds a, MultiplierBounds b) {
    return MultiplierBounds{a.lo * b.lo, a.hi * b.hi};
  };
  PerturbationSchedule s;
  s.supply = mul2(supply, other.supply);
  s.budget = mul2(budget, other.budget);
  if (!coeff) {
    s.coeff = other.coeff;
  } else if (!other.coeff) {
    s.coeff = coeff;
  } else {
    s.coeff = [f = coeff, g = other.coeff](std::size_t t, std::size_t i, std::size_t j) {
      return f(t, i, j) * g(t, i, j);
    };
  }
  s.supply_bounds = bounds(supply_bounds, other.supply_bounds);
  s.budget_bounds = bounds(budget_bounds, other.budget_bounds);
  s.coeff_bounds = bounds(coeff_bounds, other.coeff_bounds);
  return s;
}

Market perturb(const Market& market, const PerturbationSchedule& schedule, std::size_t t) {
  if (!schedule.supply && !schedule.budget && !schedule.coeff) return market;
  std::vector<CesBuyer> buyers;
  buyers.reserve(market.num_buyers());
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    CesBuyer b = market.buyers()[i];
    if (schedule.budget) {
      b = b.with_budget(apply(b.budget(), schedule.budget(t, i), schedule.budget_bounds, "budget"));
    }
    if (schedule.coeff) {
      std::vector<double> a = b.coeffs();
      for (std::size_t j = 0; j < a.size(); ++j) {
        a[j] = apply(a[j], schedule.coeff(t, i, j), schedule.coeff_bounds, "coefficient");
      }
      b = b.with_coeffs(std::move(a));
    }
    buyers.push_back(std::move(b));
  }
  std::vector<Good> goods = market.goods();
  if (schedule.supply) {
    for (std::size_t j = 0; j < goods.size(); ++j) {
      goods[j].supply = apply(goods[j].supply, schedule.supply(t, j), schedule.supply_bounds, "supply");
    }
  }
  return Market(std::move(buyers), std::move(goods));
}

std::vector<StepRecord> DynamicTrace::steps() const {
  std::vector<StepRecord> out;
  out.reserve(rounds.size());
  for (const auto& r : rounds) out.push_back(r.step);
  return out;
}

std::vector<double> DynamicTrace::gaps() const {
  std::vector<double> out;
  out.reserve(rounds.size());
  for (const auto& r : rounds) out.push_back(r.gap);
  return out;
}

DynamicTrace dynamic_run(const Market& market0, const PriceVector& p0,
                         const PerturbationSchedule& schedule, const TatConfig& config,
                         const EqOptions& eq_options) {
  config.validate();
  for (std::size_t j = 0; j < market0.num_goods(); ++j) {
    if (p0[j] < market0.reserve(j)) throw std::invalid_argument("initial prices must be >= reserves");
  }
  DynamicTrace trace;
  trace.initial_prices = p0;

  const bool kappa_defined = market0.all_reserves_positive();
  Market current = perturb(market0, schedule, 0);
  trace.max_supplies = current.supplies();
  trace.max_total_money = current.total_budget();

  PriceVector p = p0;
  EqOptions eq = eq_options;
  double running = 0.0;
  for (std::size_t t = 0; t < config.max_iters; ++t) {
    DynamicRound round;
    round.step = tat_step(current, p, config.lambda, t);
    round.potential = round.step.potential_before;

    EqSolution sol = solve_equilibrium(current, eq);
    eq.warm_start = sol.p_star;
    round.p_star = sol.p_star;
    round.potential_star = sol.f_star;
    round.gap = round.potential - sol.f_star;
    if (kappa_defined) trace.max_kappa = std::max(trace.max_kappa, kappa_of(sol.p_star, current.reserves()));

    Market next = perturb(market0, schedule, t + 1);
    round.disturbance = std::abs(potential(next, round.step.prices_after) - round.step.potential_after);
    running = std::max(running, round.disturbance);
    round.running_max_disturbance = running;

    auto w = next.supplies();
    for (std::size_t j = 0; j < w.size(); ++j) trace.max_supplies[j] = std::max(trace.max_supplies[j], w[j]);
    trace.max_total_money = std::max(trace.max_total_money, next.total_budget());

    p = round.step.prices_after;
    trace.rounds.push_back(std::move(round));
    current = std::move(next);
  }
  return trace;
}

TheoremParams dynamic_params(const DynamicTrace& trace, const Market& market0,
                             const TatConfig& config) {
  auto steps = trace.steps();
  TheoremParams p = TheoremParams::from(market0, config, trace.max_kappa,
                                        epsilon_observed(steps, config.sigma, market0));
  p.total_money = trace.max_total_money;
  return p;
}

EnvelopeSummary check_theorem2_envelope(const DynamicTrace& trace, const TheoremParams& params) {
  EnvelopeSummary s;
  s.m_value = m_bound(trace.max_supplies, trace.initial_prices, params.total_money, params.reserves,
                      params.lambda, params.m_constant);
  try {
    s.alpha = alpha(params);
  } catch (const TheoryInapplicable& e) {
    s.reports.push_back(inapplicable("theorem2_envelope", e.what()));
    return s;
  }
  if (!s.alpha.guaranteed) {
    s.reports.push_back(inapplicable("theorem2_envelope", "no-guarantee: alpha <= 0"));
    return s;
  }
  double additive = 2.0 * params.lambda * params.epsilon * params.epsilon * s.m_value / params.theta +
                    trace.max_disturbance();
  s.plateau = additive / s.alpha.value;
  s.reports = check_envelope("theorem2", trace.gaps(), s.alpha.value, s.plateau, 2.0 * s.plateau);
  return s;
}

}  // namespace fisher
