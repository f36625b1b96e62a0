#ifndef FISHER_MARKET_HPP
#define FISHER_MARKET_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fisher {

/// Shape of a buyer's CES utility. Linear and Cobb-Douglas are tagged
/// special forms; everything else carries an explicit exponent.
enum class UtilityKind { Linear, CobbDouglas, General };

/// A budget-constrained buyer with utility (sum_j a_j x_j^rho)^(1/rho).
class CesBuyer {
 public:
  static CesBuyer linear(double budget, std::vector<double> coeffs);
  /// Coefficients are rescaled to sum to one.
  static CesBuyer cobb_douglas(double budget, std::vector<double> coeffs);
  /// rho must lie in (-inf, 0) or (0, 1).
  static CesBuyer general(double budget, double rho, std::vector<double> coeffs);

  double budget() const { return budget_; }
  UtilityKind kind() const { return kind_; }
  /// 1 for linear buyers, 0 for Cobb-Douglas buyers.
  double rho() const { return rho_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  std::size_t num_goods() const { return coeffs_.size(); }

  /// Substitution parameter rho/(rho-1). Throws for linear buyers.
  double c() const;

  CesBuyer with_budget(double budget) const;
  CesBuyer with_coeffs(std::vector<double> coeffs) const;

  friend bool operator==(const CesBuyer&, const CesBuyer&) = default;

 private:
  CesBuyer(double budget, UtilityKind kind, double rho, std::vector<double> coeffs);

  double budget_;
  UtilityKind kind_;
  double rho_;
  std::vector<double> coeffs_;
};

/// Strictly positive, finite prices.
class PriceVector {
 public:
  PriceVector() = default;
  explicit PriceVector(std::vector<double> prices);

  std::size_t size() const { return prices_.size(); }
  double operator[](std::size_t j) const { return prices_[j]; }
  std::span<const double> values() const { return prices_; }
  const std::vector<double>& vec() const { return prices_; }
  double sum() const;

  /// Copy with coordinate j replaced.
  PriceVector with(std::size_t j, double price) const;

  friend bool operator==(const PriceVector&, const PriceVector&) = default;

 private:
  std::vector<double> prices_;
};

/// Per-buyer, per-good spending b_ij, stored row-major by buyer.
class SpendingMatrix {
 public:
  SpendingMatrix() = default;
  SpendingMatrix(std::size_t buyers, std::size_t goods);

  std::size_t buyers() const { return buyers_; }
  std::size_t goods() const { return goods_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * goods_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * goods_ + j]; }
  std::span<const double> row(std::size_t i) const;
  std::span<double> row(std::size_t i);
  /// Total spending on good j.
  double good_total(std::size_t j) const;

  friend bool operator==(const SpendingMatrix&, const SpendingMatrix&) = default;

 private:
  std::size_t buyers_ = 0;
  std::size_t goods_ = 0;
  std::vector<double> data_;
};

struct Good {
  double supply = 1.0;
  double reserve = 0.0;
  friend bool operator==(const Good&, const Good&) = default;
};

class Market {
 public:
  Market(std::vector<CesBuyer> buyers, std::vector<Good> goods);
  /// Unit supplies, given reserves.
  Market(std::vector<CesBuyer> buyers, std::vector<double> reserves);

  const std::vector<CesBuyer>& buyers() const { return buyers_; }
  const std::vector<Good>& goods() const { return goods_; }
  std::size_t num_goods() const { return goods_.size(); }
  std::size_t num_buyers() const { return buyers_.size(); }

  double supply(std::size_t j) const { return goods_[j].supply; }
  double reserve(std::size_t j) const { return goods_[j].reserve; }
  std::vector<double> supplies() const;
  std::vector<double> reserves() const;

  double total_budget() const;
  bool all_reserves_positive() const;
  /// Largest c over non-linear buyers; empty when every buyer is linear.
  std::optional<double> max_c() const;
  bool has_linear_buyers() const;

  /// Non-fatal problems: total money below the largest reserve, goods no buyer values.
  std::vector<std::string> warnings() const;

  friend bool operator==(const Market&, const Market&) = default;

 private:
  std::vector<CesBuyer> buyers_;
  std::vector<Good> goods_;
};

double c_of_rho(double rho);

std::vector<double> best_response_spending(const CesBuyer& buyer, const PriceVector& prices);
SpendingMatrix spending_matrix(const Market& market, const PriceVector& prices);

double utility_of_spending(const CesBuyer& buyer, std::span<const double> spending,
                           const PriceVector& prices);
double max_utility(const CesBuyer& buyer, const PriceVector& prices);
/// log of max_utility, evaluated without forming the utility itself.
double log_max_utility(const CesBuyer& buyer, const PriceVector& prices);

/// Relative excess demand (sum_i x_ij - w_j) / w_j.
std::vector<double> excess_demand(const Market& market, const PriceVector& prices);
std::vector<double> excess_demand(const Market& market, const PriceVector& prices,
                                  const SpendingMatrix& spending);
/// Aggregate demand sum_i x_ij.
std::vector<double> demand(const Market& market, const PriceVector& prices);

/// Eisenberg-Gale dual: sum_j w_j p_j + sum_i e_i log max u_i(p).
double potential(const Market& market, const PriceVector& prices);

/// Central differences of the potential.
std::vector<double> potential_gradient_fd(const Market& market, const PriceVector& prices,
                                          double h);
/// Exact gradient w_j - x_j.
std::vector<double> potential_gradient(const Market& market, const PriceVector& prices);

/// Relative distance from a demand tie for linear buyers; infinity when there are none.
double linear_tie_margin(const Market& market, const PriceVector& prices);

}  // namespace fisher

#endif  // FISHER_MARKET_HPP
