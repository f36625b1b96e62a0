#ifndef FISHER_DYNAMIC_HPP
#define FISHER_DYNAMIC_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include "fisher/equilibrium.hpp"
#include "fisher/market.hpp"
#include "fisher/tatonnement.hpp"
#include "fisher/theory.hpp"

namespace fisher {

struct MultiplierBounds {
  double lo = 1.0;
  double hi = 1.0;
};

/// Per-round multipliers applied to a base market. Each function gets the
/// round and the index (good for supplies, buyer for budgets, buyer then good
/// for coefficients). Null functions mean "always 1".
struct PerturbationSchedule {
  std::function<double(std::size_t t, std::size_t j)> supply;
  std::function<double(std::size_t t, std::size_t i)> budget;
  std::function<double(std::size_t t, std::size_t i, std::size_t j)> coeff;
  MultiplierBounds supply_bounds;
  MultiplierBounds budget_bounds;
  MultiplierBounds coeff_bounds;

  static PerturbationSchedule identity();
  /// e_i^t = e_i (1 + rate t), declared over [0, horizon].
  static PerturbationSchedule budget_drift(double rate, std::size_t horizon);
  /// w_j^t = w_j (1 + amplitude sin(t / period + j)).
  static PerturbationSchedule supply_wave(double amplitude, double period);
  /// a_ij^t = a_ij (1 + amplitude sin(t / period + i + j)).
  static PerturbationSchedule coefficient_wave(double amplitude, double period);
  /// Product of the multipliers of both schedules.
  PerturbationSchedule combined(const PerturbationSchedule& other) const;
};

/// Applies round t of the schedule. Cobb-Douglas coefficients are renormalized.
/// Throws when a multiplier is non-positive, non-finite or outside its declared bounds.
Market perturb(const Market& market, const PerturbationSchedule& schedule, std::size_t t);

struct DynamicRound {
  StepRecord step;
  /// F^t(p^t)
  double potential = 0.0;
  PriceVector p_star;
  /// F^t(p^{t,*})
  double potential_star = 0.0;
  double gap = 0.0;
  /// |F^{t+1}(p^{t+1}) - F^t(p^{t+1})|
  double disturbance = 0.0;
  double running_max_disturbance = 0.0;
};

struct DynamicTrace {
  std::vector<DynamicRound> rounds;
  PriceVector initial_prices;
  /// Largest supply of each good over rounds 0..T.
  std::vector<double> max_supplies;
  /// Largest total budget over rounds 0..T.
  double max_total_money = 0.0;
  /// max_t p^{t,*}_j / r_j, or 0 when some reserve is zero.
  double max_kappa = 0.0;

  double max_disturbance() const {
    return rounds.empty() ? 0.0 : rounds.back().running_max_disturbance;
  }
  std::vector<StepRecord> steps() const;
  std::vector<double> gaps() const;
};

/// Runs config.max_iters rounds: perturb, one update against the round's
/// market, re-solve the round's equilibrium (warm-started), record gap and
/// disturbance.
DynamicTrace dynamic_run(const Market& market0, const PriceVector& p0,
                         const PerturbationSchedule& schedule, const TatConfig& config,
                         const EqOptions& eq_options = {});

/// Tracking constants for a dynamic trace: E is the largest total budget,
/// kappa the largest ratio to reserves over the rounds, epsilon observed.
TheoremParams dynamic_params(const DynamicTrace& trace, const Market& market0,
                             const TatConfig& config);

/// Envelope gap_t <= (1-a)^t gap_0 + (2 l eps^2 M / theta + D) / a and the
/// (1 - a/2) contraction wherever gap_t >= twice the additive term.
EnvelopeSummary check_theorem2_envelope(const DynamicTrace& trace, const TheoremParams& params);

}  // namespace fisher

#endif  // FISHER_DYNAMIC_HPP
