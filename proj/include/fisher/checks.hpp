#ifndef FISHER_CHECKS_HPP
#define FISHER_CHECKS_HPP

#include <optional>
#include <string>
#include <vector>

#include "fisher/equilibrium.hpp"
#include "fisher/market.hpp"
#include "fisher/tatonnement.hpp"
#include "fisher/theory.hpp"

namespace fisher {

struct CheckSelection {
  bool progress = true;
  bool log_utility = true;
  bool claim = true;
  bool price_sum = true;
  bool strong_convexity = true;
  bool distance = true;
  bool theorem1 = true;

  /// Comma-separated subset of: progress, log-utility, claim, price-sum,
  /// strong-convexity, distance, theorem1, all.
  static CheckSelection parse(const std::string& spec);
  static const std::vector<std::string>& names();
};

struct CheckOptions {
  std::optional<double> kappa;
  std::optional<double> epsilon;
  EqOptions eq;
  MConstant m_constant = MConstant::Corrected;
};

struct CheckRun {
  std::vector<BoundReport> reports;
  std::optional<EqSolution> equilibrium;
  /// Why the oracle could not be used, when it could not.
  std::string oracle_error;
  std::optional<double> kappa;
  double epsilon = 0.0;
  double m_value = 0.0;
  std::optional<EnvelopeSummary> theorem1;
};

/// Evaluates the selected checkers along a recorded run.
CheckRun run_checks(const Market& market, const Trace& trace, const TatConfig& config,
                    const CheckSelection& selection, const CheckOptions& options = {});

struct CheckTally {
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t inapplicable = 0;
  std::size_t evaluated() const { return passed + failed; }
};

CheckTally tally(const std::vector<BoundReport>& reports);

}  // namespace fisher

#endif  // FISHER_CHECKS_HPP
