#ifndef FISHER_THEORY_HPP
#define FISHER_THEORY_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fisher/market.hpp"
#include "fisher/tatonnement.hpp"

namespace fisher {

/// Raised when a convergence constant is undefined or vacuous for the inputs.
class TheoryInapplicable : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class CheckStatus { Pass, Fail, Inapplicable };

/// One evaluated inequality lhs <= rhs. slack = rhs - lhs.
struct BoundReport {
  std::string check;
  std::optional<std::size_t> t;
  std::optional<std::size_t> good;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  CheckStatus status = CheckStatus::Pass;
  std::string note;

  bool passed() const { return status == CheckStatus::Pass; }
  bool failed() const { return status == CheckStatus::Fail; }
};

/// Relative tolerance applied to every inequality: slack >= -tol * max(1, |rhs|).
inline constexpr double kCheckRelTol = 1e-9;

BoundReport make_bound(std::string check, double lhs, double rhs,
                       std::optional<std::size_t> t = std::nullopt,
                       std::optional<std::size_t> good = std::nullopt);
BoundReport inapplicable(std::string check, std::string why,
                         std::optional<std::size_t> t = std::nullopt,
                         std::optional<std::size_t> good = std::nullopt);

const char* to_string(CheckStatus status);

// --- constants ---------------------------------------------------------------

/// (1 - k^c + c(k-1)) / (k-1)^2, continuous at k = 1 with value c(1-c)/2.
double h_c(double kappa, double c);
/// h_c(k) / c, with its c -> 0 limit at c = 0.
double h_c_over_c(double kappa, double c);
/// (k - 1 - log k) / (k - 1)^2, continuous at k = 1 with value 1/2.
double log_branch(double kappa);
/// min{h_c(k)/c, log_branch(k)}. Throws TheoryInapplicable when the result is <= 0.
double big_C(double kappa, double c);
/// The c entering big_C for a market: the largest c over non-linear buyers,
/// or 0 when every buyer is linear.
double effective_c(const Market& market);

/// Which coefficient multiplies (E + sum_j w_j r_j) in the price-sum bound.
///   Published: (e^l - 2l)(1 + 2l - e^l)/l + l. Below 1 for small l, so it
///              undercuts the equilibrium price sum when reserves are small.
///   Corrected: l / (1 + 2l - e^l), the fixed point of
///              S' <= (e^l - 2l) S + l (E + R).
enum class MConstant { Published, Corrected };

struct TheoremParams {
  double lambda = 0.1;
  double sigma = 0.5;
  double theta = 0.05;
  double kappa = 1.0;
  double epsilon = 0.0;
  double total_money = 0.0;
  std::vector<double> reserves;
  /// Largest c over non-linear buyers; empty for all-linear markets.
  std::optional<double> c_max;
  MConstant m_constant = MConstant::Corrected;

  static TheoremParams from(const Market& market, const TatConfig& config, double kappa,
                            double epsilon);
};

struct AlphaResult {
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  /// False when the numerator is not positive: no rate is guaranteed.
  bool guaranteed = false;
};

/// Throws when any reserve is zero.
AlphaResult alpha(const TheoremParams& params);

const char* to_string(MConstant which);
MConstant parse_m_constant(const std::string& name);

double m_coefficient(double lambda, MConstant which = MConstant::Published);
/// max{sum_j w_j p0_j, coefficient * (E + sum_j w_j r_j)}.
double m_bound(const Market& market, const PriceVector& p0, double lambda,
               MConstant which = MConstant::Published);
/// Variant weighting initial prices and reserves by the largest supply each good reaches.
double m_bound(std::span<const double> max_supplies, const PriceVector& p0, double total_money,
               std::span<const double> reserves, double lambda,
               MConstant which = MConstant::Published);

// --- large-market epsilon ----------------------------------------------------

/// Smallest epsilon for which the near-linear buyers' spending shifts satisfy
/// the large-market inequality along the recorded steps. +inf when a good with
/// no spending and no reserve sees any shift.
double epsilon_observed(std::span<const StepRecord> steps, double sigma, const Market& market);

struct EpsilonEstimate {
  double value = 0.0;
  std::size_t grid_resolution = 0;
  std::size_t grid_points = 0;
  std::optional<std::size_t> worst_good;
};

/// Grid estimate of the a-priori epsilon for all-linear markets.
EpsilonEstimate epsilon_apriori_linear(const Market& market, double lambda,
                                       std::size_t grid_resolution);

// --- per-step inequality checkers ----------------------------------------------

/// Potential drop versus the progress lower bound.
BoundReport check_progress(const StepRecord& step, const Market& market, double sigma,
                           double lambda);

/// Bounds on e_i log(u^{t+1}/u^t), dispatched on the buyer's utility shape.
/// Check names: log_utility_linear, log_utility_substitute,
/// log_utility_substitute_c, log_utility_complement.
std::vector<BoundReport> check_buyer_log_utility(const CesBuyer& buyer, std::size_t buyer_index,
                                                 const StepRecord& step, double lambda);

/// Per good: (1/2l) (sum_i b_ij) delta_j^2 <= (sum_i b_ij - w_j p_j) delta_j.
std::vector<BoundReport> check_claim_lower_progress(const StepRecord& step, const Market& market,
                                                    double lambda);

/// Bregman lower bound of the potential around p towards p_star.
BoundReport check_strong_convexity(const Market& market, const PriceVector& p,
                                   const PriceVector& p_star, double kappa);

/// Distance-to-optimum bound. The first report is the summed inequality; the
/// rest are the per-good bounds it is assembled from (reserve-clamped goods
/// are tagged in the note).
std::vector<BoundReport> check_distance_bound(const Market& market, const StepRecord& step,
                                              const PriceVector& p_star, double kappa,
                                              double lambda);

/// sum_j w_j p_j^{t+1} <= M per step; unweighted when supplies is empty.
std::vector<BoundReport> check_price_sum(std::span<const StepRecord> steps, double m_value,
                                         std::span<const double> supplies = {});

/// Envelope gap_t <= (1-a)^t gap_0 + plateau and, wherever gap_t >= threshold,
/// gap_{t+1} <= (1 - a/2) gap_t.
std::vector<BoundReport> check_envelope(const std::string& name, std::span<const double> gaps,
                                        double alpha_value, double plateau, double threshold);

struct EnvelopeSummary {
  AlphaResult alpha;
  double m_value = 0.0;
  /// 2 l eps^2 M / (a theta)
  double plateau = 0.0;
  std::vector<BoundReport> reports;
};

EnvelopeSummary check_theorem1_envelope(const Trace& trace, const Market& market,
                                        double f_star, const TheoremParams& params);

}  // namespace fisher

#endif  // FISHER_THEORY_HPP
