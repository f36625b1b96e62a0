#ifndef FISHER_TATONNEMENT_HPP
#define FISHER_TATONNEMENT_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "fisher/market.hpp"

namespace fisher {

struct TatConfig {
  double lambda = 0.1;
  /// Large-market threshold on rho.
  double sigma = 0.5;
  double theta = 0.05;
  std::size_t max_iters = 1000;
  /// Plateau tolerance; defaults to 1e-12 * max(1, |F(p0)|) when unset.
  std::optional<double> stop_tol;
  /// Consecutive flat steps required to declare a plateau.
  std::size_t plateau_window = 10;

  /// Throws unless lambda in (0, 1], sigma and theta in (0, 1) and
  /// lambda * sigma / (1 - sigma) <= 1.
  void validate() const;
};

/// One synchronous price update.
struct StepRecord {
  std::size_t t = 0;
  PriceVector prices_before;
  PriceVector prices_after;
  SpendingMatrix spendings_before;
  SpendingMatrix spendings_after;
  /// Excess demand at prices_before.
  std::vector<double> z;
  std::vector<double> delta;
  std::vector<bool> clamped;
  double potential_before = 0.0;
  double potential_after = 0.0;
};

struct Trace {
  std::vector<StepRecord> steps;
  PriceVector initial_prices;
  double initial_potential = 0.0;
  bool plateau_reached = false;
  /// Tolerance the plateau test used.
  double stop_tol = 0.0;

  /// Price vectors p^0, p^1, ..., p^T.
  std::vector<PriceVector> price_path() const;
  /// Potential values F(p^0), ..., F(p^T).
  std::vector<double> potential_path() const;
};

/// Log price change for one good: lambda * min(z, 1), unless that would
/// take the price below the reserve, in which case the change lands exactly on it.
struct DeltaResult {
  double delta;
  bool clamped;
};
DeltaResult step_delta(double z, double price, double reserve, double lambda);

/// Applies one update to every good from the same excess-demand snapshot.
StepRecord tat_step(const Market& market, const PriceVector& prices, double lambda,
                    std::size_t t = 0);

/// Progress measure sum_j (sum_i b_ij - w_j p_j) * delta_j. Nonnegative for
/// any step satisfying the sign condition.
double first_order_progress(const Market& market, const StepRecord& step);

/// Iterates tat_step until max_iters or a plateau: plateau_window consecutive
/// steps whose potential change and first-order progress are both below stop_tol.
Trace run(const Market& market, const PriceVector& p0, const TatConfig& config);

}  // namespace fisher

#endif  // FISHER_TATONNEMENT_HPP
