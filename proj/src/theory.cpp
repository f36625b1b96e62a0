#include "fisher/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fisher {

namespace {

// Below this |k - 1| the closed forms lose digits to cancellation; series take over.
constexpr double kSeriesRadius = 1e-2;
constexpr int kSeriesTerms = 13;

// Slack allowed when testing the step premises (sign and magnitude of delta).
constexpr double kPremiseTol = 1e-12;

double rel_tol(double rhs) { return kCheckRelTol * std::max(1.0, std::abs(rhs)); }

// Generalized binomial coefficient binom(c, k) divided by c, i.e.
// (c-1)(c-2)...(c-k+1) / k!.
double binom_over_c(double c, int k) {
  double v = 1.0;
  for (int i = 1; i < k; ++i) v *= (c - i);
  for (int i = 2; i <= k; ++i) v /= i;
  return v;
}

double excess_spending(const Market& market, const StepRecord& step, std::size_t j) {
  return step.spendings_before.good_total(j) - market.supply(j) * step.prices_before[j];
}

// Delta premise of the progress bound: |delta| <= lambda |min(z,1)| with a
// matching sign (or no move at all).
bool delta_compliant(double z, double delta, double lambda) {
  double target = lambda * std::min(z, 1.0);
  if (std::abs(delta) > std::abs(target) * (1.0 + kPremiseTol) + kPremiseTol) return false;
  if (delta == 0.0) return true;
  return (delta > 0.0) == (target > 0.0);
}

std::string premise_failure(const StepRecord& step, double lambda) {
  for (std::size_t j = 0; j < step.delta.size(); ++j) {
    if (!delta_compliant(step.z[j], step.delta[j], lambda)) {
      return "delta premise violated at good " + std::to_string(j);
    }
  }
  return {};
}

double large_market_coeff(double lambda, double sigma) {
  return 1.0 - lambda - 2.0 * lambda * std::max(sigma / (1.0 - sigma), 1.0);
}

}  // namespace

BoundReport make_bound(std::string check, double lhs, double rhs, std::optional<std::size_t> t,
                       std::optional<std::size_t> good) {
  BoundReport r;
  r.check = std::move(check);
  r.t = t;
  r.good = good;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.status = r.slack >= -rel_tol(rhs) ? CheckStatus::Pass : CheckStatus::Fail;
  return r;
}

BoundReport inapplicable(std::string check, std::string why, std::optional<std::size_t> t,
                         std::optional<std::size_t> good) {
  BoundReport r;
  r.check = std::move(check);
  r.t = t;
  r.good = good;
  r.lhs = r.rhs = r.slack = std::numeric_limits<double>::quiet_NaN();
  r.status = CheckStatus::Inapplicable;
  r.note = std::move(why);
  return r;
}

const char* to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass:
      return "true";
    case CheckStatus::Fail:
      return "false";
    case CheckStatus::Inapplicable:
      return "inapplicable";
  }
  return "?";
}

// --- constants ---------------------------------------------------------------

double h_c(double kappa, double c) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  if (!(c < 1.0)) throw std::invalid_argument("c must be < 1");
  if (kappa == 1.0) return c * (1.0 - c) / 2.0;
  double d = kappa - 1.0;
  if (std::abs(d) < kSeriesRadius) {
    double s = 0.0, pw = 1.0;
    for (int k = 2; k <= kSeriesTerms; ++k, pw *= d) s -= c * binom_over_c(c, k) * pw;
    return s;
  }
  return (-std::expm1(c * std::log(kappa)) + c * d) / (d * d);
}

double h_c_over_c(double kappa, double c) {
  if (c == 0.0) return log_branch(kappa);
  if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  if (!(c < 1.0)) throw std::invalid_argument("c must be < 1");
  double d = kappa - 1.0;
  if (std::abs(d) < kSeriesRadius) {
    double s = 0.0, pw = 1.0;
    for (int k = 2; k <= kSeriesTerms; ++k, pw *= d) s -= binom_over_c(c, k) * pw;
    return s;
  }
  return (-std::expm1(c * std::log(kappa)) / c + d) / (d * d);
}

double log_branch(double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  double d = kappa - 1.0;
  if (std::abs(d) < kSeriesRadius) {
    double s = 0.0, pw = 1.0;
    for (int k = 2; k <= kSeriesTerms; ++k, pw *= -d) s += pw / k;
    return s;
  }
  return (d - std::log1p(d)) / (d * d);
}

double big_C(double kappa, double c) {
  double v = std::min(h_c_over_c(kappa, c), log_branch(kappa));
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << "C(kappa) = " << v << " <= 0 for kappa = " << kappa << ", c = " << c
       << ": theory-inapplicable";
    throw TheoryInapplicable(os.str());
  }
  return v;
}

double effective_c(const Market& market) { return market.max_c().value_or(0.0); }

TheoremParams TheoremParams::from(const Market& market, const TatConfig& config, double kappa,
                                  double epsilon) {
  TheoremParams p;
  p.lambda = config.lambda;
  p.sigma = config.sigma;
  p.theta = config.theta;
  p.kappa = kappa;
  p.epsilon = epsilon;
  p.total_money = market.total_budget();
  p.reserves = market.reserves();
  p.c_max = market.max_c();
  return p;
}

AlphaResult alpha(const TheoremParams& params) {
  if (params.reserves.empty()) throw std::invalid_argument("reserves required");
  double r_min = *std::min_element(params.reserves.begin(), params.reserves.end());
  if (!(r_min > 0.0)) {
    throw std::invalid_argument("reserve prices required for convergence constants");
  }
  double C = big_C(params.kappa, params.c_max.value_or(0.0));
  AlphaResult a;
  a.numerator = large_market_coeff(params.lambda, params.sigma) - 2.0 * params.epsilon -
                2.0 * params.theta;
  a.denominator = std::max(2.0, 1.0 / (2.0 * C)) * params.total_money / (params.lambda * r_min);
  a.value = a.numerator / a.denominator;
  a.guaranteed = a.numerator > 0.0;
  return a;
}

const char* to_string(MConstant which) {
  return which == MConstant::Published ? "published" : "corrected";
}

MConstant parse_m_constant(const std::string& name) {
  if (name == "published") return MConstant::Published;
  if (name == "corrected") return MConstant::Corrected;
  throw std::invalid_argument("unknown price-sum constant '" + name + "'");
}

double m_coefficient(double lambda, MConstant which) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must lie in (0, 1]");
  double el = std::exp(lambda);
  if (which == MConstant::Corrected) return lambda / (1.0 + 2.0 * lambda - el);
  return (el - 2.0 * lambda) * (1.0 + 2.0 * lambda - el) / lambda + lambda;
}

double m_bound(std::span<const double> max_supplies, const PriceVector& p0, double total_money,
               std::span<const double> reserves, double lambda, MConstant which) {
  if (max_supplies.size() != p0.size() || reserves.size() != p0.size()) {
    throw std::invalid_argument("supply/price size mismatch");
  }
  double weighted = 0.0, reserve_sum = 0.0;
  for (std::size_t j = 0; j < p0.size(); ++j) {
    weighted += max_supplies[j] * p0[j];
    reserve_sum += max_supplies[j] * reserves[j];
  }
  return std::max(weighted, m_coefficient(lambda, which) * (total_money + reserve_sum));
}

double m_bound(const Market& market, const PriceVector& p0, double lambda, MConstant which) {
  return m_bound(market.supplies(), p0, market.total_budget(), market.reserves(), lambda, which);
}

// --- epsilon -------------------------------------------------------------------

double epsilon_observed(std::span<const StepRecord> steps, double sigma, const Market& market) {
  std::vector<std::size_t> near_linear;
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    if (market.buyers()[i].rho() >= sigma) near_linear.push_back(i);
  }
  double eps = 0.0;
  if (near_linear.empty()) return eps;
  for (const auto& s : steps) {
    for (std::size_t j = 0; j < market.num_goods(); ++j) {
      double shift = 0.0;
      for (std::size_t i : near_linear) {
        shift += std::abs(s.spendings_before(i, j) - s.spendings_after(i, j));
      }
      if (shift == 0.0) continue;
      double base = s.spendings_before.good_total(j) + market.reserve(j);
      eps = std::max(eps, base > 0.0 ? shift / base : std::numeric_limits<double>::infinity());
    }
  }
  return eps;
}

EpsilonEstimate epsilon_apriori_linear(const Market& market, double lambda,
                                       std::size_t grid_resolution) {
  for (const auto& b : market.buyers()) {
    if (b.kind() != UtilityKind::Linear) {
      throw std::invalid_argument("a-priori epsilon requires an all-linear market");
    }
  }
  if (!market.all_reserves_positive()) {
    throw std::invalid_argument("a-priori epsilon requires positive reserves");
  }
  if (grid_resolution == 0) throw std::invalid_argument("grid_resolution must be positive");

  EpsilonEstimate est;
  est.grid_resolution = grid_resolution;
  const std::size_t n = market.num_goods();
  const std::size_t m = market.num_buyers();
  if (m == 0) return est;
  const double E = market.total_budget();

  // log a_ij; -inf marks a zero coefficient.
  std::vector<double> la(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double a = market.buyers()[i].coeffs()[j];
      la[i * n + j] = a > 0.0 ? std::log(a) : -std::numeric_limits<double>::infinity();
    }
  }

  // Log-uniform grid for each q_k over [r_k / E, E / r_k].
  std::vector<std::vector<double>> log_grid(n);
  for (std::size_t k = 0; k < n; ++k) {
    double lo = std::log(market.reserve(k) / E), hi = std::log(E / market.reserve(k));
    for (std::size_t g = 0; g < grid_resolution; ++g) {
      double frac = grid_resolution == 1 ? 0.5 : static_cast<double>(g) / (grid_resolution - 1);
      log_grid[k].push_back(lo + (hi - lo) * frac);
    }
  }

  std::vector<double> log_q(n, 0.0);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      for (std::size_t k = 0; k < n; ++k) log_q[k] = k == j ? 0.0 : log_grid[k][idx[k]];
      ++est.grid_points;

      double switching = 0.0, loyal = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double lij = la[i * n + j];
        if (std::isinf(lij)) continue;
        bool band = false, all_close = true, strict = true;
        for (std::size_t s = 0; s < n; ++s) {
          if (s == j) continue;
          double ratio = lij - la[i * n + s];  // +inf when a_is = 0
          band = band || (ratio >= log_q[s] - lambda && ratio <= log_q[s] + lambda);
          all_close = all_close && ratio >= log_q[s] - lambda;
          strict = strict && ratio > log_q[s];
        }
        double e = market.buyers()[i].budget();
        if (band && all_close) switching += e;
        if (strict) loyal += e;
      }
      double v = switching / (loyal + market.reserve(j));
      if (v > est.value) {
        est.value = v;
        est.worst_good = j;
      }

      // Odometer over the coordinates other than j.
      std::size_t k = 0;
      for (; k < n; ++k) {
        if (k == j) continue;
        if (++idx[k] < grid_resolution) break;
        idx[k] = 0;
      }
      if (k == n) break;
    }
  }
  return est;
}

// --- per-step checkers -----------------------------------------------------------

BoundReport check_progress(const StepRecord& step, const Market& market, double sigma,
                           double lambda) {
  const std::string name = "progress";
  if (lambda * sigma / (1.0 - sigma) > 1.0) {
    return inapplicable(name, "lambda * sigma / (1 - sigma) > 1", step.t);
  }
  if (auto why = premise_failure(step, lambda); !why.empty()) return inapplicable(name, why, step.t);

  double shift_term = 0.0;
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    double rho = market.buyers()[i].rho();
    if (rho < sigma) continue;
    for (std::size_t j = 0; j < market.num_goods(); ++j) {
      shift_term += rho * (step.spendings_before(i, j) - step.spendings_after(i, j)) * step.delta[j];
    }
  }
  double lower = large_market_coeff(lambda, sigma) * first_order_progress(market, step) - shift_term;
  double drop = step.potential_before - step.potential_after;
  return make_bound(name, lower, drop, step.t);
}

std::vector<BoundReport> check_buyer_log_utility(const CesBuyer& buyer, std::size_t buyer_index,
                                                 const StepRecord& step, double lambda) {
  std::vector<BoundReport> out;
  const auto b_now = step.spendings_before.row(buyer_index);
  const auto b_next = step.spendings_after.row(buyer_index);
  const auto& d = step.delta;
  const std::size_t n = d.size();

  auto tag = [&](BoundReport r) {
    r.note = "buyer " + std::to_string(buyer_index);
    return r;
  };

  double u_now = utility_of_spending(buyer, b_now, step.prices_before);
  double u_next = utility_of_spending(buyer, b_next, step.prices_after);
  std::string family;
  switch (buyer.kind()) {
    case UtilityKind::Linear:
      family = "log_utility_linear";
      break;
    case UtilityKind::CobbDouglas:
      family = "log_utility_complement";
      break;
    case UtilityKind::General:
      family = buyer.rho() > 0.0 ? "log_utility_substitute" : "log_utility_complement";
      break;
  }
  if (!(u_now > 0.0 && u_next > 0.0)) {
    out.push_back(tag(inapplicable(family, "zero utility", step.t)));
    return out;
  }
  const double lhs = buyer.budget() * std::log(u_next / u_now);

  double spend_move = 0.0;  // -sum_j b^t_j d_j
  double spend_next = 0.0;  // sum_j b^{t+1}_j d_j
  double curvature = 0.0;   // sum_j b^t_j d_j^2
  double max_abs_delta = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    spend_move -= b_now[j] * d[j];
    spend_next += b_next[j] * d[j];
    curvature += b_now[j] * d[j] * d[j];
    max_abs_delta = std::max(max_abs_delta, std::abs(d[j]));
  }

  if (buyer.kind() == UtilityKind::Linear) {
    // Holds for any split of the budget over tied goods, so tied buyers need
    // no separate treatment.
    double rhs = spend_move + (-spend_move - spend_next);
    out.push_back(tag(make_bound(family, lhs, rhs, step.t)));
    return out;
  }

  const double rho = buyer.rho();
  if (rho <= 0.0) {
    out.push_back(tag(make_bound(family, lhs, spend_move, step.t)));
    return out;
  }

  if (max_abs_delta > 1.0) {
    out.push_back(tag(inapplicable(family, "|delta| > 1", step.t)));
  } else {
    double rhs = spend_move + rho * curvature - rho * spend_next - rho * spend_move;
    out.push_back(tag(make_bound(family, lhs, rhs, step.t)));
  }

  const double c = buyer.c();
  const std::string curv_name = "log_utility_substitute_c";
  if (std::abs(lambda * c) > 1.0) {
    out.push_back(tag(inapplicable(curv_name, "|lambda c| > 1", step.t)));
  } else if (std::abs(c) * max_abs_delta > 1.0 + kPremiseTol) {
    out.push_back(tag(inapplicable(curv_name, "|c delta| > 1", step.t)));
  } else {
    out.push_back(tag(make_bound(curv_name, lhs, spend_move - c * curvature, step.t)));
  }
  return out;
}

std::vector<BoundReport> check_claim_lower_progress(const StepRecord& step, const Market& market,
                                                    double lambda) {
  std::vector<BoundReport> out;
  for (std::size_t j = 0; j < step.delta.size(); ++j) {
    const std::string name = "claim_lower_progress";
    if (!delta_compliant(step.z[j], step.delta[j], lambda)) {
      out.push_back(inapplicable(name, "delta premise violated", step.t, j));
      continue;
    }
    double d = step.delta[j];
    double lower = step.spendings_before.good_total(j) * d * d / (2.0 * lambda);
    out.push_back(make_bound(name, lower, excess_spending(market, step, j) * d, step.t, j));
  }
  return out;
}

BoundReport check_strong_convexity(const Market& market, const PriceVector& p,
                                   const PriceVector& p_star, double kappa) {
  const std::string name = "strong_convexity";
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p_star[j] / p[j] > kappa * (1.0 + kPremiseTol)) {
      return inapplicable(name, "p*_j / p_j exceeds kappa at good " + std::to_string(j));
    }
  }
  double C;
  try {
    C = big_C(kappa, effective_c(market));
  } catch (const TheoryInapplicable& e) {
    return inapplicable(name, e.what());
  }
  auto x = demand(market, p);
  double bregman = potential(market, p_star) - potential(market, p);
  double quad = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    double step = p_star[j] - p[j];
    bregman -= (market.supply(j) - x[j]) * step;
    quad += x[j] * step * step / p[j];
  }
  return make_bound(name, C * quad, bregman);
}

std::vector<BoundReport> check_distance_bound(const Market& market, const StepRecord& step,
                                              const PriceVector& p_star, double kappa,
                                              double lambda) {
  const std::string name = "distance_bound";
  const std::size_t n = market.num_goods();
  if (!market.all_reserves_positive()) {
    return {inapplicable(name, "positive reserves required", step.t)};
  }
  const double E = market.total_budget();
  for (std::size_t j = 0; j < n; ++j) {
    if (p_star[j] / market.reserve(j) > kappa * (1.0 + kPremiseTol)) {
      return {inapplicable(name, "kappa below p*_j / r_j at good " + std::to_string(j), step.t)};
    }
    if (E < market.reserve(j)) return {inapplicable(name, "total money below a reserve", step.t)};
  }
  double C;
  try {
    C = big_C(kappa, effective_c(market));
  } catch (const TheoryInapplicable& e) {
    return {inapplicable(name, e.what(), step.t)};
  }

  std::vector<BoundReport> per_good;
  double total = 0.0;
  const double scale = std::max(2.0, 1.0 / (2.0 * C));
  for (std::size_t j = 0; j < n; ++j) {
    const double p = step.prices_before[j];
    const double r = market.reserve(j);
    const double w = market.supply(j);
    const double x = step.spendings_before.good_total(j) / p;
    const double term = scale * E / (lambda * r) * excess_spending(market, step, j) * step.delta[j];
    total += term;

    // max over p' >= r of (x - w)(p' - p) - C x (p' - p)^2 / p
    double best;
    if (x == 0.0) {
      best = -w * (r - p);
    } else {
      double q = std::max(r, p + (x - w) * p / (2.0 * C * x));
      best = (x - w) * (q - p) - C * x * (q - p) * (q - p) / p;
    }
    BoundReport rep = make_bound("distance_bound_good", best, term, step.t, j);
    if (step.clamped[j]) rep.note = "reserve-clamped";
    per_good.push_back(std::move(rep));
  }

  double gap = step.potential_before - potential(market, p_star);
  std::vector<BoundReport> out{make_bound(name, gap, total, step.t)};
  out.insert(out.end(), per_good.begin(), per_good.end());
  return out;
}

std::vector<BoundReport> check_price_sum(std::span<const StepRecord> steps, double m_value,
                                         std::span<const double> supplies) {
  std::vector<BoundReport> out;
  for (const auto& s : steps) {
    double sum = 0.0;
    for (std::size_t j = 0; j < s.prices_after.size(); ++j) {
      sum += (supplies.empty() ? 1.0 : supplies[j]) * s.prices_after[j];
    }
    out.push_back(make_bound("price_sum", sum, m_value, s.t));
  }
  return out;
}

std::vector<BoundReport> check_envelope(const std::string& name, std::span<const double> gaps,
                                        double alpha_value, double plateau, double threshold) {
  std::vector<BoundReport> out;
  if (gaps.empty()) return out;
  for (std::size_t t = 0; t < gaps.size(); ++t) {
    double rhs = std::pow(1.0 - alpha_value, static_cast<double>(t)) * gaps[0] + plateau;
    out.push_back(make_bound(name + "_envelope", gaps[t], rhs, t));
  }
  for (std::size_t t = 0; t + 1 < gaps.size(); ++t) {
    if (gaps[t] < threshold) continue;
    out.push_back(make_bound(name + "_contraction", gaps[t + 1], (1.0 - alpha_value / 2.0) * gaps[t], t));
  }
  return out;
}

EnvelopeSummary check_theorem1_envelope(const Trace& trace, const Market& market, double f_star,
                                        const TheoremParams& params) {
  EnvelopeSummary s;
  s.m_value = m_bound(market, trace.initial_prices, params.lambda, params.m_constant);
  try {
    s.alpha = alpha(params);
  } catch (const TheoryInapplicable& e) {
    s.reports.push_back(inapplicable("theorem1_envelope", e.what()));
    return s;
  }
  if (!s.alpha.guaranteed) {
    s.reports.push_back(inapplicable("theorem1_envelope", "no-guarantee: alpha <= 0"));
    return s;
  }
  s.plateau = 2.0 * params.lambda * params.epsilon * params.epsilon * s.m_value /
              (s.alpha.value * params.theta);
  std::vector<double> gaps = trace.potential_path();
  for (double& g : gaps) g -= f_star;
  s.reports = check_envelope("theorem1", gaps, s.alpha.value, s.plateau, 2.0 * s.plateau);
  return s;
}

}  // namespace fisher
