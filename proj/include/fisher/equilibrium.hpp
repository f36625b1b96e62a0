#ifndef FISHER_EQUILIBRIUM_HPP
#define FISHER_EQUILIBRIUM_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "fisher/market.hpp"

namespace fisher {

struct EqSolution {
  PriceVector p_star;
  double f_star = 0.0;
  /// Largest clearing violation: |z_j| where p_j > r_j, max(z_j, 0) where p_j = r_j.
  double residual = 0.0;
  /// Line searches performed by the winning start.
  std::size_t iterations = 0;
};

struct EqOptions {
  double tol = 1e-9;
  std::size_t starts = 5;
  std::uint64_t seed = 0;
  std::size_t max_sweeps = 20000;
  /// Used as the first start point when present.
  std::optional<PriceVector> warm_start;
};

/// Thrown when no start reaches the residual tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

/// Minimizes the potential over {p >= r} by pattern search over
/// subset-scaling directions with exact one-dimensional line searches.
/// Markets with linear buyers need positive reserves.
EqSolution solve_equilibrium(const Market& market, const EqOptions& options = {});

/// Clearing violation at p. Spending of linear buyers tied between goods may be
/// split in any way; the best split is used.
double equilibrium_residual(const Market& market, const PriceVector& prices);

/// max_j p*_j / r_j. Throws when a reserve is zero.
double kappa_of(const PriceVector& p_star, std::span<const double> reserves);

}  // namespace fisher

#endif  // FISHER_EQUILIBRIUM_HPP
