#include "fisher/tatonnement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fisher {

void TatConfig::validate() const {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in (0, 1]");
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("sigma must lie in (0, 1)");
  if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0, 1)");
  if (lambda * sigma / (1.0 - sigma) > 1.0) {
    throw std::invalid_argument("lambda * sigma / (1 - sigma) must not exceed 1");
  }
  if (stop_tol && !(*stop_tol >= 0.0)) throw std::invalid_argument("stop_tol must be >= 0");
  if (plateau_window == 0) throw std::invalid_argument("plateau_window must be positive");
}

std::vector<PriceVector> Trace::price_path() const {
  std::vector<PriceVector> path{initial_prices};
  for (const auto& s : steps) path.push_back(s.prices_after);
  return path;
}

std::vector<double> Trace::potential_path() const {
  std::vector<double> path{initial_potential};
  for (const auto& s : steps) path.push_back(s.potential_after);
  return path;
}

DeltaResult step_delta(double z, double price, double reserve, double lambda) {
  if (z == 0.0) return {0.0, false};
  double delta = lambda * std::min(z, 1.0);
  if (price * std::exp(delta) < reserve) return {std::log(reserve / price), true};
  return {delta, false};
}

StepRecord tat_step(const Market& market, const PriceVector& prices, double lambda,
                    std::size_t t) {
  const std::size_t n = market.num_goods();
  if (prices.size() != n) throw std::invalid_argument("price vector length does not match market");

  StepRecord rec;
  rec.t = t;
  rec.prices_before = prices;
  rec.spendings_before = spending_matrix(market, prices);
  rec.z = excess_demand(market, prices, rec.spendings_before);
  rec.delta.resize(n);
  rec.clamped.resize(n);

  std::vector<double> next(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto [delta, clamped] = step_delta(rec.z[j], prices[j], market.reserve(j), lambda);
    rec.delta[j] = delta;
    rec.clamped[j] = clamped;
    next[j] = clamped ? market.reserve(j) : prices[j] * std::exp(delta);
  }
  rec.prices_after = PriceVector(std::move(next));
  rec.spendings_after = spending_matrix(market, rec.prices_after);
  rec.potential_before = potential(market, prices);
  rec.potential_after = potential(market, rec.prices_after);
  return rec;
}

double first_order_progress(const Market& market, const StepRecord& step) {
  double b = 0.0;
  for (std::size_t j = 0; j < step.delta.size(); ++j) {
    double excess_spend = step.spendings_before.good_total(j) -
                          market.supply(j) * step.prices_before[j];
    b += excess_spend * step.delta[j];
  }
  return b;
}

Trace run(const Market& market, const PriceVector& p0, const TatConfig& config) {
  config.validate();
  for (std::size_t j = 0; j < market.num_goods(); ++j) {
    if (p0[j] < market.reserve(j)) throw std::invalid_argument("initial prices must be >= reserves");
  }

  Trace trace;
  trace.initial_prices = p0;
  trace.initial_potential = potential(market, p0);
  trace.stop_tol = config.stop_tol.value_or(1e-12 * std::max(1.0, std::abs(trace.initial_potential)));

  PriceVector p = p0;
  std::size_t flat = 0;
  for (std::size_t t = 0; t < config.max_iters; ++t) {
    StepRecord rec = tat_step(market, p, config.lambda, t);
    double change = std::abs(rec.potential_after - rec.potential_before);
    double progress = first_order_progress(market, rec);
    flat = (change < trace.stop_tol && progress < trace.stop_tol) ? flat + 1 : 0;
    p = rec.prices_after;
    trace.steps.push_back(std::move(rec));
    if (flat >= config.plateau_window) {
      trace.plateau_reached = true;
      break;
    }
  }
  return trace;
}

}  // namespace fisher
