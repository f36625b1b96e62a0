#ifndef FISHER_SCENARIO_HPP
#define FISHER_SCENARIO_HPP

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fisher/market.hpp"
#include "fisher/tatonnement.hpp"

namespace fisher {

/// Seeded generator with platform-independent uniform draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi);
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

struct Scenario {
  Market market;
  PriceVector p0;
  TatConfig config;
};

/// Numeric knobs keyed by name. Unknown keys are rejected.
///   example1:     lambda (0.2)
///   large-linear: m (1000), n (4), total_money (n), reserve_frac (0.05), lambda (0.1)
///   random-ces:   m (6), n (3), rho (mixed when absent), reserve_frac (0.05), lambda (0.1)
using ScenarioParams = std::map<std::string, double>;

const std::vector<std::string>& scenario_names();

Scenario generate_scenario(const std::string& name, const ScenarioParams& params,
                           std::uint64_t seed);

/// The exponents random-ces draws from when no point mass is given; 0 is
/// Cobb-Douglas and 1 is linear.
const std::vector<double>& default_rho_mix();

/// Builds a buyer of the right kind for rho (1 linear, 0 Cobb-Douglas).
CesBuyer buyer_for_rho(double budget, double rho, std::vector<double> coeffs);

}  // namespace fisher

#endif  // FISHER_SCENARIO_HPP
