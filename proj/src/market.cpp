#include "fisher/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fisher {

namespace {

// Linear buyers split their budget over every good within this relative
// distance of the best bang-per-buck.
constexpr double kLinearTieTol = 1e-12;

// Cobb-Douglas coefficients further than this from summing to one are rescaled.
constexpr double kCobbDouglasNormTol = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_coeffs(const std::vector<double>& coeffs) {
  require(!coeffs.empty(), "buyer must have at least one coefficient");
  bool any_positive = false;
  for (double a : coeffs) {
    require(std::isfinite(a) && a >= 0.0, "coefficients must be finite and nonnegative");
    any_positive = any_positive || a > 0.0;
  }
  require(any_positive, "buyer must value at least one good");
}

void check_sizes(const CesBuyer& buyer, const PriceVector& prices) {
  if (buyer.num_goods() != prices.size()) {
    throw std::invalid_argument("price vector length does not match buyer coefficients");
  }
}

double coeff_sum(const CesBuyer& buyer) {
  return std::accumulate(buyer.coeffs().begin(), buyer.coeffs().end(), 0.0);
}

// log(a_j^(1-c) p_j^c) for every good with a_j > 0; -inf otherwise.
std::vector<double> log_weights(const CesBuyer& buyer, const PriceVector& prices, double c) {
  const auto& a = buyer.coeffs();
  std::vector<double> lw(a.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] > 0.0) lw[j] = (1.0 - c) * std::log(a[j]) + c * std::log(prices[j]);
  }
  return lw;
}

double log_sum_exp(const std::vector<double>& v, double* shift_out = nullptr) {
  double shift = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) {
    if (std::isfinite(x)) s += std::exp(x - shift);
  }
  if (shift_out) *shift_out = shift;
  return shift + std::log(s);
}

}  // namespace

// --- CesBuyer ---------------------------------------------------------------

CesBuyer::CesBuyer(double budget, UtilityKind kind, double rho, std::vector<double> coeffs)
    : budget_(budget), kind_(kind), rho_(rho), coeffs_(std::move(coeffs)) {
  require(std::isfinite(budget_) && budget_ > 0.0, "budget must be positive and finite");
  check_coeffs(coeffs_);
}

CesBuyer CesBuyer::linear(double budget, std::vector<double> coeffs) {
  return CesBuyer(budget, UtilityKind::Linear, 1.0, std::move(coeffs));
}

CesBuyer CesBuyer::cobb_douglas(double budget, std::vector<double> coeffs) {
  check_coeffs(coeffs);
  double s = std::accumulate(coeffs.begin(), coeffs.end(), 0.0);
  if (std::abs(s - 1.0) > kCobbDouglasNormTol) {
    for (double& a : coeffs) a /= s;
  }
  return CesBuyer(budget, UtilityKind::CobbDouglas, 0.0, std::move(coeffs));
}

CesBuyer CesBuyer::general(double budget, double rho, std::vector<double> coeffs) {
  require(!std::isnan(rho), "rho must be a number");
  require(std::isfinite(rho), "rho = -inf (Leontief) is not supported");
  require(rho < 1.0, "rho must be < 1 or the linear tag");
  require(rho != 0.0, "rho = 0 must use the cobb-douglas tag");
  return CesBuyer(budget, UtilityKind::General, rho, std::move(coeffs));
}

double CesBuyer::c() const {
  if (kind_ == UtilityKind::Linear) {
    throw std::domain_error("substitution parameter is undefined for linear buyers");
  }
  return c_of_rho(rho_);
}

CesBuyer CesBuyer::with_budget(double budget) const {
  CesBuyer b = *this;
  require(std::isfinite(budget) && budget > 0.0, "budget must be positive and finite");
  b.budget_ = budget;
  return b;
}

CesBuyer CesBuyer::with_coeffs(std::vector<double> coeffs) const {
  switch (kind_) {
    case UtilityKind::Linear:
      return linear(budget_, std::move(coeffs));
    case UtilityKind::CobbDouglas:
      return cobb_douglas(budget_, std::move(coeffs));
    case UtilityKind::General:
      break;
  }
  return general(budget_, rho_, std::move(coeffs));
}

double c_of_rho(double rho) {
  if (std::isnan(rho) || std::isinf(rho)) throw std::domain_error("rho must be finite");
  if (rho >= 1.0) throw std::domain_error("c is undefined for rho >= 1");
  if (rho == 0.0) return 0.0;
  return rho / (rho - 1.0);
}

// --- PriceVector / SpendingMatrix ----------------------------------------------

PriceVector::PriceVector(std::vector<double> prices) : prices_(std::move(prices)) {
  for (std::size_t j = 0; j < prices_.size(); ++j) {
    if (!(std::isfinite(prices_[j]) && prices_[j] > 0.0)) {
      std::ostringstream os;
      os << "price " << j << " must be positive and finite (got " << prices_[j] << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

double PriceVector::sum() const { return std::accumulate(prices_.begin(), prices_.end(), 0.0); }

PriceVector PriceVector::with(std::size_t j, double price) const {
  std::vector<double> p = prices_;
  p.at(j) = price;
  return PriceVector(std::move(p));
}

SpendingMatrix::SpendingMatrix(std::size_t buyers, std::size_t goods)
    : buyers_(buyers), goods_(goods), data_(buyers * goods, 0.0) {}

std::span<const double> SpendingMatrix::row(std::size_t i) const {
  return std::span<const double>(data_).subspan(i * goods_, goods_);
}

std::span<double> SpendingMatrix::row(std::size_t i) {
  return std::span<double>(data_).subspan(i * goods_, goods_);
}

double SpendingMatrix::good_total(std::size_t j) const {
  double s = 0.0;
  for (std::size_t i = 0; i < buyers_; ++i) s += (*this)(i, j);
  return s;
}

// --- Market --------------------------------------------------------------------

Market::Market(std::vector<CesBuyer> buyers, std::vector<Good> goods)
    : buyers_(std::move(buyers)), goods_(std::move(goods)) {
  require(!goods_.empty(), "market must have at least one good");
  for (std::size_t j = 0; j < goods_.size(); ++j) {
    const Good& g = goods_[j];
    require(std::isfinite(g.supply) && g.supply > 0.0,
            "goods[" + std::to_string(j) + "].supply must be positive");
    require(std::isfinite(g.reserve) && g.reserve >= 0.0,
            "goods[" + std::to_string(j) + "].reserve must be nonnegative");
  }
  for (std::size_t i = 0; i < buyers_.size(); ++i) {
    require(buyers_[i].num_goods() == goods_.size(),
            "buyers[" + std::to_string(i) + "].coeffs must have one entry per good");
  }
}

Market::Market(std::vector<CesBuyer> buyers, std::vector<double> reserves)
    : Market(std::move(buyers), [&] {
        std::vector<Good> goods;
        for (double r : reserves) goods.push_back(Good{1.0, r});
        return goods;
      }()) {}

std::vector<double> Market::supplies() const {
  std::vector<double> w;
  for (const auto& g : goods_) w.push_back(g.supply);
  return w;
}

std::vector<double> Market::reserves() const {
  std::vector<double> r;
  for (const auto& g : goods_) r.push_back(g.reserve);
  return r;
}

double Market::total_budget() const {
  double e = 0.0;
  for (const auto& b : buyers_) e += b.budget();
  return e;
}

bool Market::all_reserves_positive() const {
  return std::all_of(goods_.begin(), goods_.end(), [](const Good& g) { return g.reserve > 0.0; });
}

std::optional<double> Market::max_c() const {
  std::optional<double> c;
  for (const auto& b : buyers_) {
    if (b.kind() == UtilityKind::Linear) continue;
    double ci = b.c();
    if (!c || ci > *c) c = ci;
  }
  return c;
}

bool Market::has_linear_buyers() const {
  return std::any_of(buyers_.begin(), buyers_.end(),
                     [](const CesBuyer& b) { return b.kind() == UtilityKind::Linear; });
}

std::vector<std::string> Market::warnings() const {
  std::vector<std::string> out;
  double max_r = 0.0;
  for (const auto& g : goods_) max_r = std::max(max_r, g.reserve);
  if (total_budget() < max_r) {
    std::ostringstream os;
    os << "total money " << total_budget() << " is below the largest reserve " << max_r
       << "; convergence constants are not guaranteed";
    out.push_back(os.str());
  }
  for (std::size_t j = 0; j < goods_.size(); ++j) {
    bool valued = std::any_of(buyers_.begin(), buyers_.end(),
                              [j](const CesBuyer& b) { return b.coeffs()[j] > 0.0; });
    if (!valued) out.push_back("good " + std::to_string(j) + " is not valued by any buyer");
  }
  return out;
}

// --- demand and utility ------------------------------------------------------

std::vector<double> best_response_spending(const CesBuyer& buyer, const PriceVector& prices) {
  check_sizes(buyer, prices);
  const auto& a = buyer.coeffs();
  const std::size_t n = a.size();
  const double e = buyer.budget();
  std::vector<double> b(n, 0.0);

  switch (buyer.kind()) {
    case UtilityKind::Linear: {
      double best = 0.0;
      for (std::size_t j = 0; j < n; ++j) best = std::max(best, a[j] / prices[j]);
      std::vector<std::size_t> winners;
      for (std::size_t j = 0; j < n; ++j) {
        if (a[j] > 0.0 && a[j] / prices[j] >= best * (1.0 - kLinearTieTol)) winners.push_back(j);
      }
      for (std::size_t j : winners) b[j] = e / static_cast<double>(winners.size());
      return b;
    }
    case UtilityKind::CobbDouglas: {
      double s = coeff_sum(buyer);
      for (std::size_t j = 0; j < n; ++j) b[j] = e * a[j] / s;
      return b;
    }
    case UtilityKind::General:
      break;
  }

  auto lw = log_weights(buyer, prices, buyer.c());
  double shift = *std::max_element(lw.begin(), lw.end());
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (a[j] > 0.0) {
      b[j] = std::exp(lw[j] - shift);
      total += b[j];
    }
  }
  for (double& x : b) x = e * x / total;
  return b;
}

SpendingMatrix spending_matrix(const Market& market, const PriceVector& prices) {
  SpendingMatrix m(market.num_buyers(), market.num_goods());
  for (std::size_t i = 0; i < market.num_buyers(); ++i) {
    auto b = best_response_spending(market.buyers()[i], prices);
    std::copy(b.begin(), b.end(), m.row(i).begin());
  }
  return m;
}

double utility_of_spending(const CesBuyer& buyer, std::span<const double> spending,
                           const PriceVector& prices) {
  check_sizes(buyer, prices);
  if (spending.size() != prices.size()) {
    throw std::invalid_argument("spending vector length does not match prices");
  }
  const auto& a = buyer.coeffs();
  const std::size_t n = a.size();

  switch (buyer.kind()) {
    case UtilityKind::Linear: {
      double u = 0.0;
      for (std::size_t j = 0; j < n; ++j) u += a[j] * spending[j] / prices[j];
      return u;
    }
    case UtilityKind::CobbDouglas: {
      double s = coeff_sum(buyer);
      double log_u = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (a[j] == 0.0) continue;
        if (spending[j] <= 0.0) return 0.0;
        log_u += (a[j] / s) * std::log(spending[j] / prices[j]);
      }
      return std::exp(log_u);
    }
    case UtilityKind::General:
      break;
  }

  const double rho = buyer.rho();
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (a[j] == 0.0) continue;
    double x = spending[j] / prices[j];
    if (x <= 0.0) {
      // x^rho blows up for complements, which drives the utility to zero.
      if (rho < 0.0) return 0.0;
      continue;
    }
    sum += a[j] * std::pow(x, rho);
  }
  return std::pow(sum, 1.0 / rho);
}

double log_max_utility(const CesBuyer& buyer, const PriceVector& prices) {
  check_sizes(buyer, prices);
  const auto& a = buyer.coeffs();
  const std::size_t n = a.size();
  const double log_e = std::log(buyer.budget());

  switch (buyer.kind()) {
    case UtilityKind::Linear: {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (a[j] > 0.0) best = std::max(best, std::log(a[j]) - std::log(prices[j]));
      }
      return log_e + best;
    }
    case UtilityKind::CobbDouglas: {
      double s = coeff_sum(buyer);
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (a[j] == 0.0) continue;
        double w = a[j] / s;
        v += w * (log_e + std::log(w) - std::log(prices[j]));
      }
      return v;
    }
    case UtilityKind::General:
      break;
  }

  const double c = buyer.c();
  return log_e - log_sum_exp(log_weights(buyer, prices, c)) / c;
}

double max_utility(const CesBuyer& buyer, const PriceVector& prices) {
  return std::exp(log_max_utility(buyer, prices));
}

std::vector<double> excess_demand(const Market& market, const PriceVector& prices,
                                  const SpendingMatrix& spending) {
  std::vector<double> z(market.num_goods());
  for (std::size_t j = 0; j < z.size(); ++j) {
    double x = spending.good_total(j) / prices[j];
    z[j] = (x - market.supply(j)) / market.supply(j);
  }
  return z;
}

std::vector<double> excess_demand(const Market& market, const PriceVector& prices) {
  return excess_demand(market, prices, spending_matrix(market, prices));
}

std::vector<double> demand(const Market& market, const PriceVector& prices) {
  auto s = spending_matrix(market, prices);
  std::vector<double> x(market.num_goods());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = s.good_total(j) / prices[j];
  return x;
}

double potential(const Market& market, const PriceVector& prices) {
  if (prices.size() != market.num_goods()) {
    throw std::invalid_argument("price vector length does not match market");
  }
  double f = 0.0;
  for (std::size_t j = 0; j < market.num_goods(); ++j) f += market.supply(j) * prices[j];
  for (const auto& b : market.buyers()) {
    double lu = log_max_utility(b, prices);
    if (!std::isfinite(lu)) throw std::domain_error("buyer has zero maximum utility");
    f += b.budget() * lu;
  }
  return f;
}

std::vector<double> potential_gradient_fd(const Market& market, const PriceVector& prices,
                                          double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  std::vector<double> g(market.num_goods());
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (prices[j] - h <= 0.0) throw std::invalid_argument("step too large for price");
    double up = potential(market, prices.with(j, prices[j] + h));
    double down = potential(market, prices.with(j, prices[j] - h));
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<double> potential_gradient(const Market& market, const PriceVector& prices) {
  auto x = demand(market, prices);
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = market.supply(j) - x[j];
  return x;
}

double linear_tie_margin(const Market& market, const PriceVector& prices) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& b : market.buyers()) {
    if (b.kind() != UtilityKind::Linear || b.num_goods() < 2) continue;
    double first = 0.0, second = 0.0;
    for (std::size_t j = 0; j < b.num_goods(); ++j) {
      double r = b.coeffs()[j] / prices[j];
      if (r > first) {
        second = first;
        first = r;
      } else if (r > second) {
        second = r;
      }
    }
    margin = std::min(margin, (first - second) / first);
  }
  return margin;
}

}  // namespace fisher
