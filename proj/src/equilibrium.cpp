#include "fisher/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "fisher/scenario.hpp"

namespace fisher {

namespace {

using Mask = std::uint64_t;

// Tie tolerance used when certifying a solution; looser than the demand rule so
// that prices accurate to ~1e-12 still see the tie they converged to.
constexpr double kResidualTieTol = 1e-9;
constexpr double kSearchTieTol = 1e-12;
constexpr std::size_t kMaxSubsetGoods = 10;
constexpr std::size_t kMaxFlowGoods = 20;

bool valued(const Market& market, std::size_t j) {
  for (const auto& b : market.buyers()) {
    if (b.coeffs()[j] > 0.0) return true;
  }
  return false;
}

Mask tie_mask(const CesBuyer& buyer, const std::vector<double>& p, double tol) {
  const auto& a = buyer.coeffs();
  double best = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) best = std::max(best, a[j] / p[j]);
  Mask m = 0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (a[j] > 0.0 && a[j] / p[j] >= best * (1.0 - tol)) m |= Mask{1} << j;
  }
  return m;
}

struct Box {
  std::vector<double> lo, hi;
};

class PatternSearch {
 public:
  PatternSearch(const Market& market, Box box, std::vector<Mask> directions, double threshold)
      : market_(market), box_(std::move(box)), dirs_(std::move(directions)), thr_(threshold) {}

  std::size_t run(std::vector<double>& p, std::size_t max_sweeps) {
    std::size_t searches = 0;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
      bool moved = false;
      for (Mask dir : dirs_) {
        ++searches;
        moved = line_search(p, dir) || moved;
      }
      if (!moved) return searches;
    }
    return searches;
  }

 private:
  // One-sided derivatives of s -> F(p with goods in S scaled by e^s) at s = 0.
  // right: W_S - nonlinear spending on S - budgets of linear buyers tied only within S.
  // left:  the same with buyers tied to any good of S.
  std::pair<double, double> derivatives(const std::vector<double>& p, Mask dir) const {
    double base = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (dir >> j & 1) base += market_.supply(j) * p[j];
    }
    double forced = 0.0, reach = 0.0;
    PriceVector pv(p);
    for (const auto& b : market_.buyers()) {
      if (b.kind() == UtilityKind::Linear) {
        Mask t = tie_mask(b, p, kSearchTieTol);
        if ((t & ~dir) == 0) forced += b.budget();
        if (t & dir) reach += b.budget();
      } else {
        auto s = best_response_spending(b, pv);
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (dir >> j & 1) base -= s[j];
        }
      }
    }
    return {base - forced, base - reach};
  }

  std::vector<double> scaled(const std::vector<double>& p, Mask dir, double s) const {
    std::vector<double> q = p;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (dir >> j & 1) q[j] = std::clamp(p[j] * std::exp(s), box_.lo[j], box_.hi[j]);
    }
    return q;
  }

  bool line_search(std::vector<double>& p, Mask dir) {
    double s_lo = -std::numeric_limits<double>::infinity();
    double s_hi = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!(dir >> j & 1)) continue;
      s_lo = std::max(s_lo, std::log(box_.lo[j] / p[j]));
      s_hi = std::min(s_hi, std::log(box_.hi[j] / p[j]));
    }
    auto [right, left] = derivatives(p, dir);
    double s;
    if (right < -thr_ && s_hi > 0.0) {
      s = bisect(p, dir, 0.0, s_hi, true);
    } else if (left > thr_ && s_lo < 0.0) {
      s = bisect(p, dir, s_lo, 0.0, false);
    } else {
      return false;
    }
    std::vector<double> q = scaled(p, dir, s);
    if (q == p) return false;
    p = std::move(q);
    return true;
  }

  // Upward: lo has right derivative < 0; returns the first point with right
  // derivative >= 0, or hi. Downward: hi has left derivative > 0; returns the
  // last point with left derivative <= 0, or lo.
  double bisect(const std::vector<double>& p, Mask dir, double lo, double hi, bool upward) const {
    auto rd = [&](double s) { return derivatives(scaled(p, dir, s), dir).first; };
    auto ld = [&](double s) { return derivatives(scaled(p, dir, s), dir).second; };
    if (upward && rd(hi) < 0.0) return hi;
    if (!upward && ld(lo) > 0.0) return lo;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      bool below = upward ? rd(mid) < 0.0 : ld(mid) <= 0.0;
      (below ? lo : hi) = mid;
    }
    return upward ? hi : lo;
  }

  const Market& market_;
  Box box_;
  std::vector<Mask> dirs_;
  double thr_;
};

// Feasibility of a spending split with good totals inside [l_j, u_j], via the
// Hall-type conditions forced(S) <= u(S) and reach(S) >= l(S) for all S.
bool split_feasible(const std::vector<double>& forced, double linear_total,
                    const std::vector<double>& l, const std::vector<double>& u) {
  const std::size_t n = l.size();
  const Mask full = (Mask{1} << n) - 1;
  for (Mask s = 1; s <= full; ++s) {
    double us = 0.0, ls = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (s >> j & 1) {
        us += u[j];
        ls += l[j];
      }
    }
    double reach = linear_total - forced[full & ~s];
    if (forced[s] > us || reach < ls) return false;
  }
  return true;
}

}  // namespace

double equilibrium_residual(const Market& market, const PriceVector& prices) {
  const std::size_t n = market.num_goods();
  std::vector<bool> clamped(n);
  for (std::size_t j = 0; j < n; ++j) {
    clamped[j] = market.reserve(j) > 0.0 && prices[j] <= market.reserve(j) * (1.0 + 1e-12);
  }

  if (!market.has_linear_buyers() || n > kMaxFlowGoods) {
    auto z = excess_demand(market, prices);
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r = std::max(r, clamped[j] ? std::max(z[j], 0.0) : std::abs(z[j]));
    return r;
  }

  const Mask full = (Mask{1} << n) - 1;
  std::vector<double> forced(full + 1, 0.0);  // budget per tie set, then subset sums
  std::vector<double> fixed(n, 0.0);
  double linear_total = 0.0;
  for (const auto& b : market.buyers()) {
    if (b.kind() == UtilityKind::Linear) {
      forced[tie_mask(b, prices.vec(), kResidualTieTol)] += b.budget();
      linear_total += b.budget();
    } else {
      auto s = best_response_spending(b, prices);
      for (std::size_t j = 0; j < n; ++j) fixed[j] += s[j];
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (Mask s = 0; s <= full; ++s) {
      if (s >> j & 1) forced[s] += forced[s ^ (Mask{1} << j)];
    }
  }

  auto feasible = [&](double eta) {
    std::vector<double> l(n), u(n);
    for (std::size_t j = 0; j < n; ++j) {
      double target = market.supply(j) * prices[j];
      l[j] = clamped[j] ? 0.0 : std::max(target * (1.0 - eta) - fixed[j], 0.0);
      u[j] = target * (1.0 + eta) - fixed[j];
    }
    return split_feasible(forced, linear_total, l, u);
  };

  if (feasible(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (!feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return hi;
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

EqSolution solve_equilibrium(const Market& market, const EqOptions& options) {
  const std::size_t n = market.num_goods();
  if (n == 0) throw std::invalid_argument("market has no goods");
  if (n > 63) throw std::invalid_argument("equilibrium oracle supports at most 63 goods");
  if (options.starts == 0 && !options.warm_start) throw std::invalid_argument("starts must be positive");
  const double E = market.total_budget();

  Box box;
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < n; ++j) {
    double r = market.reserve(j);
    if (r == 0.0 && market.has_linear_buyers()) {
      throw std::invalid_argument("equilibrium oracle needs positive reserves when linear buyers are present");
    }
    if (!valued(market, j)) {
      if (r == 0.0) {
        throw std::invalid_argument("good " + std::to_string(j) + " has no buyer and a zero reserve");
      }
      box.lo.push_back(r);
      box.hi.push_back(r);
      continue;
    }
    active.push_back(j);
    box.lo.push_back(r > 0.0 ? r : 1e-12 * E / market.supply(j));
    box.hi.push_back(r + E / market.supply(j));
  }

  std::vector<Mask> dirs;
  if (active.size() <= kMaxSubsetGoods) {
    const Mask count = Mask{1} << active.size();
    for (Mask s = 1; s < count; ++s) {
      Mask d = 0;
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (s >> k & 1) d |= Mask{1} << active[k];
      }
      dirs.push_back(d);
    }
    // Coordinates first.
    std::stable_sort(dirs.begin(), dirs.end(),
                     [](Mask a, Mask b) { return __builtin_popcountll(a) < __builtin_popcountll(b); });
  } else {
    Mask all = 0;
    for (std::size_t j : active) {
      dirs.push_back(Mask{1} << j);
      all |= Mask{1} << j;
    }
    dirs.push_back(all);
  }

  std::vector<std::vector<double>> starts;
  if (options.warm_start) {
    if (options.warm_start->size() != n) throw std::invalid_argument("warm start has wrong length");
    starts.push_back(options.warm_start->vec());
  }
  Rng rng(options.seed);
  {
    // Spending at unit prices, read as prices.
    PriceVector unit(std::vector<double>(n, 1.0));
    auto sm = spending_matrix(market, unit);
    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = sm.good_total(j) / market.supply(j);
    if (starts.size() < std::max<std::size_t>(options.starts, 1)) starts.push_back(p);
  }
  while (starts.size() < options.starts) {
    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = box.lo[j] == box.hi[j] ? box.lo[j] : rng.log_uniform(box.lo[j], box.hi[j]);
    }
    starts.push_back(p);
  }

  PatternSearch search(market, box, dirs, 1e-12 * std::max(E, 1e-300));
  std::vector<EqSolution> results;
  for (auto p : starts) {
    for (std::size_t j = 0; j < n; ++j) p[j] = std::clamp(p[j], box.lo[j], box.hi[j]);
    std::size_t iters = search.run(p, options.max_sweeps);
    EqSolution sol;
    sol.p_star = PriceVector(p);
    sol.f_star = potential(market, sol.p_star);
    sol.residual = equilibrium_residual(market, sol.p_star);
    sol.iterations = iters;
    results.push_back(std::move(sol));
  }

  const EqSolution* best = nullptr;
  double best_residual = std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    best_residual = std::min(best_residual, r.residual);
    if (r.residual > options.tol) continue;
    if (!best || r.f_star < best->f_star) best = &r;
  }
  if (!best) {
    std::ostringstream os;
    os << "equilibrium oracle did not converge: best residual " << best_residual
       << " > tol " << options.tol;
    throw SolverError(os.str(), best_residual);
  }
  return *best;
}

double kappa_of(const PriceVector& p_star, std::span<const double> reserves) {
  if (reserves.size() != p_star.size()) throw std::invalid_argument("reserve/price size mismatch");
  double k = 0.0;
  for (std::size_t j = 0; j < reserves.size(); ++j) {
    if (!(reserves[j] > 0.0)) throw std::invalid_argument("kappa requires positive reserves");
    k = std::max(k, p_star[j] / reserves[j]);
  }
  return k;
}

}  // namespace fisher
