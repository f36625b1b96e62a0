#include "fisher/checks.hpp"

#include <sstream>
#include <stdexcept>

namespace fisher {

const std::vector<std::string>& CheckSelection::names() {
  static const std::vector<std::string> n{"progress",         "log-utility", "claim",   "price-sum",
                                          "strong-convexity", "distance",    "theorem1"};
  return n;
}

CheckSelection CheckSelection::parse(const std::string& spec) {
  CheckSelection s{false, false, false, false, false, false, false};
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "all") {
      s = CheckSelection{};
    } else if (item == "progress") {
      s.progress = true;
    } else if (item == "log-utility") {
      s.log_utility = true;
    } else if (item == "claim") {
      s.claim = true;
    } else if (item == "price-sum") {
      s.price_sum = true;
    } else if (item == "strong-convexity") {
      s.strong_convexity = true;
    } else if (item == "distance") {
      s.distance = true;
    } else if (item == "theorem1") {
      s.theorem1 = true;
    } else if (!item.empty()) {
      throw std::invalid_argument("unknown check '" + item + "'");
    }
  }
  return s;
}

CheckRun run_checks(const Market& market, const Trace& trace, const TatConfig& config,
                    const CheckSelection& sel, const CheckOptions& options) {
  CheckRun out;
  auto& reps = out.reports;
  auto add = [&reps](std::vector<BoundReport> more) {
    for (auto& r : more) reps.push_back(std::move(r));
  };

  for (const auto& step : trace.steps) {
    if (sel.progress) reps.push_back(check_progress(step, market, config.sigma, config.lambda));
    if (sel.log_utility) {
      for (std::size_t i = 0; i < market.num_buyers(); ++i) {
        add(check_buyer_log_utility(market.buyers()[i], i, step, config.lambda));
      }
    }
    if (sel.claim) add(check_claim_lower_progress(step, market, config.lambda));
  }

  out.m_value = m_bound(market, trace.initial_prices, config.lambda, options.m_constant);
  auto supplies = market.supplies();
  if (sel.price_sum) add(check_price_sum(trace.steps, out.m_value, supplies));

  out.epsilon = options.epsilon.value_or(epsilon_observed(trace.steps, config.sigma, market));

  if (!(sel.strong_convexity || sel.distance || sel.theorem1)) return out;

  try {
    out.equilibrium = solve_equilibrium(market, options.eq);
  } catch (const std::exception& e) {
    out.oracle_error = e.what();
  }
  if (options.kappa) {
    out.kappa = options.kappa;
  } else if (out.equilibrium && market.all_reserves_positive()) {
    out.kappa = kappa_of(out.equilibrium->p_star, market.reserves());
  }

  auto unavailable = [&](const std::string& name) {
    std::string why = !out.equilibrium ? "no equilibrium: " + out.oracle_error
                                       : "kappa undefined without positive reserves";
    reps.push_back(inapplicable(name, why));
  };
  const bool ready = out.equilibrium && out.kappa;

  if (sel.strong_convexity) {
    if (!ready) {
      unavailable("strong_convexity");
    } else {
      auto path = trace.price_path();
      for (std::size_t t = 0; t < path.size(); ++t) {
        auto r = check_strong_convexity(market, path[t], out.equilibrium->p_star, *out.kappa);
        r.t = t;
        reps.push_back(std::move(r));
      }
    }
  }
  if (sel.distance) {
    if (!ready) {
      unavailable("distance_bound");
    } else {
      for (const auto& step : trace.steps) {
        add(check_distance_bound(market, step, out.equilibrium->p_star, *out.kappa, config.lambda));
      }
    }
  }
  if (sel.theorem1) {
    if (!ready) {
      unavailable("theorem1_envelope");
    } else if (!market.all_reserves_positive()) {
      reps.push_back(inapplicable("theorem1_envelope", "reserve prices required for convergence constants"));
    } else {
      auto params = TheoremParams::from(market, config, *out.kappa, out.epsilon);
      params.m_constant = options.m_constant;
      out.theorem1 = check_theorem1_envelope(trace, market, out.equilibrium->f_star, params);
      add(out.theorem1->reports);
    }
  }
  return out;
}

CheckTally tally(const std::vector<BoundReport>& reports) {
  CheckTally t;
  for (const auto& r : reports) {
    switch (r.status) {
      case CheckStatus::Pass:
        ++t.passed;
        break;
      case CheckStatus::Fail:
        ++t.failed;
        break;
      case CheckStatus::Inapplicable:
        ++t.inapplicable;
        break;
    }
  }
  return t;
}

}  // namespace fisher
