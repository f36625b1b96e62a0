#include <cmath>

#include "doctest.h"
#include "fisher/market.hpp"
#include "fisher/scenario.hpp"
#include "oracles.hpp"

using namespace fisher;
using doctest::Approx;

namespace {

Market example1_market() { return Market({CesBuyer::linear(2.0, {1.0, 1.0})}, std::vector<double>{0.0, 0.0}); }

}  // namespace

TEST_CASE("c_of_rho") {
  CHECK(c_of_rho(0.5) == -1.0);
  CHECK(c_of_rho(-1.0) == 0.5);
  CHECK(c_of_rho(0.0) == 0.0);
  CHECK_THROWS_AS(c_of_rho(1.0), std::domain_error);
  CHECK_THROWS_AS(c_of_rho(-INFINITY), std::domain_error);
  CHECK(CesBuyer::cobb_douglas(1.0, {0.5, 0.5}).c() == 0.0);
  CHECK_THROWS_AS(CesBuyer::linear(1.0, {1.0}).c(), std::domain_error);
}

TEST_CASE("buyer validation") {
  CHECK_THROWS(CesBuyer::linear(0.0, {1.0}));
  CHECK_THROWS(CesBuyer::linear(-1.0, {1.0}));
  CHECK_THROWS(CesBuyer::linear(1.0, {0.0, 0.0}));
  CHECK_THROWS(CesBuyer::linear(1.0, {-1.0, 2.0}));
  CHECK_THROWS(CesBuyer::general(1.0, 1.5, {1.0}));
  CHECK_THROWS(CesBuyer::general(1.0, 1.0, {1.0}));
  CHECK_THROWS(CesBuyer::general(1.0, 0.0, {1.0}));
  CHECK_THROWS(CesBuyer::general(1.0, -INFINITY, {1.0}));
  auto cd = CesBuyer::cobb_douglas(1.0, {1.0, 3.0});
  CHECK(cd.coeffs()[0] == Approx(0.25));
  CHECK(cd.coeffs()[1] == Approx(0.75));
}

TEST_CASE("best response spending") {
  SUBCASE("cobb-douglas ignores prices") {
    auto b = best_response_spending(CesBuyer::cobb_douglas(1.0, {0.3, 0.7}), PriceVector({5.0, 0.1}));
    CHECK(b[0] == Approx(0.3).epsilon(1e-14));
    CHECK(b[1] == Approx(0.7).epsilon(1e-14));
  }
  SUBCASE("linear buyer of the oscillating market buys only the cheaper good") {
    auto b = best_response_spending(CesBuyer::linear(2.0, {1.0, 1.0}), PriceVector({std::exp(0.1), std::exp(-0.1)}));
    CHECK(b[0] == 0.0);
    CHECK(b[1] == 2.0);
  }
  SUBCASE("linear ties split equally") {
    auto b = best_response_spending(CesBuyer::linear(1.0, {1.0, 2.0, 1.0}), PriceVector({1.0, 2.0, 3.0}));
    CHECK(b[0] == Approx(0.5));
    CHECK(b[1] == Approx(0.5));
    CHECK(b[2] == 0.0);
  }
  SUBCASE("general rho against a brute-force split grid") {
    CesBuyer buyer = CesBuyer::general(3.0, 0.5, {1.0, 1.0});
    std::vector<double> p{1.0, 2.0};
    auto b = best_response_spending(buyer, PriceVector(p));
    // Grid argmax of the reference utility.
    double best = -1.0, arg = 0.0;
    for (int k = 0; k <= 10000; ++k) {
      double b1 = 3.0 * k / 10000.0;
      double u = oracle::utility(buyer, {b1, 3.0 - b1}, p);
      if (u > best) {
        best = u;
        arg = b1;
      }
    }
    CHECK(b[0] == Approx(arg).epsilon(1e-3));
    CHECK(b[0] == Approx(2.0).epsilon(1e-12));
    CHECK(b[1] == Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("zero coefficient gets nothing") {
    auto b = best_response_spending(CesBuyer::general(1.0, -0.5, {0.0, 1.0, 2.0}), PriceVector({1.0, 1.0, 1.0}));
    CHECK(b[0] == 0.0);
  }
}

TEST_CASE("utility of spending") {
  CHECK(utility_of_spending(CesBuyer::linear(2.0, {1.0, 1.0}), std::vector<double>{0.0, 2.0},
                            PriceVector({1.0, std::exp(-0.1)})) == Approx(2.0 * std::exp(0.1)));
  CHECK(utility_of_spending(CesBuyer::general(1.0, 0.5, {1.0, 1.0}), std::vector<double>{0.5, 0.5},
                            PriceVector({1.0, 1.0})) == Approx(2.0));
  CHECK(utility_of_spending(CesBuyer::cobb_douglas(1.0, {0.5, 0.5}), std::vector<double>{0.5, 0.5},
                            PriceVector({1.0, 1.0})) == Approx(0.5));
  CHECK(utility_of_spending(CesBuyer::cobb_douglas(1.0, {0.5, 0.5}), std::vector<double>{0.0, 1.0},
                            PriceVector({1.0, 1.0})) == 0.0);
}

TEST_CASE("max utility") {
  CHECK(max_utility(CesBuyer::linear(2.0, {1.0, 1.0}), PriceVector({std::exp(0.1), std::exp(-0.1)})) ==
        Approx(2.0 * std::exp(0.1)));
  CHECK(max_utility(CesBuyer::general(1.0, 0.5, {1.0, 1.0}), PriceVector({1.0, 1.0})) == Approx(2.0));
  CHECK(max_utility(CesBuyer::cobb_douglas(1.0, {0.5, 0.5}), PriceVector({1.0, 1.0})) == Approx(0.5));
}

TEST_CASE("excess demand") {
  auto z = excess_demand(example1_market(), PriceVector({std::exp(0.1), std::exp(-0.1)}));
  CHECK(z[0] == -1.0);
  CHECK(z[1] == Approx(2.0 * std::exp(0.1) - 1.0));

  Market cd({CesBuyer::cobb_douglas(2.0, {0.5, 0.5})}, std::vector<double>{0.0, 0.0});
  auto zc = excess_demand(cd, PriceVector({1.0, 1.0}));
  CHECK(zc[0] == Approx(0.0));
  CHECK(zc[1] == Approx(0.0));

  Market sym({CesBuyer::linear(1.0, {1.0, 1.0}), CesBuyer::linear(1.0, {1.0, 1.0})}, std::vector<double>{0.0, 0.0});
  auto zs = excess_demand(sym, PriceVector({1.0, 1.0}));
  CHECK(zs[0] == Approx(0.0));
  CHECK(zs[1] == Approx(0.0));

  Market supplied({CesBuyer::cobb_douglas(2.0, {0.5, 0.5})}, std::vector<Good>{{2.0, 0.0}, {0.5, 0.0}});
  auto zw = excess_demand(supplied, PriceVector({1.0, 1.0}));
  CHECK(zw[0] == Approx((1.0 - 2.0) / 2.0));
  CHECK(zw[1] == Approx((1.0 - 0.5) / 0.5));
}

TEST_CASE("potential") {
  Market cd({CesBuyer::cobb_douglas(2.0, {0.5, 0.5})}, std::vector<double>{0.0, 0.0});
  CHECK(potential(cd, PriceVector({1.0, 1.0})) == Approx(2.0));
  CHECK(potential(example1_market(), PriceVector({1.0, 1.0})) == Approx(2.0 + 2.0 * std::log(2.0)));

  // Against the grid-maximized utility.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Market m = oracle::random_market(seed, 3, 2, 0.1);
    std::vector<double> p{0.7, 1.3};
    CHECK(potential(m, PriceVector(p)) == Approx(oracle::potential_2(m, p, 20000)).epsilon(1e-6));
  }
}

TEST_CASE("gradient identity") {
  Market cd({CesBuyer::cobb_douglas(2.0, {0.5, 0.5})}, std::vector<double>{0.0, 0.0});
  auto g = potential_gradient_fd(cd, PriceVector({1.0, 1.0}), 1e-6);
  CHECK(std::abs(g[0]) < 1e-6);
  CHECK(std::abs(g[1]) < 1e-6);

  PriceVector p1({std::exp(0.1), std::exp(-0.1)});
  auto g1 = potential_gradient_fd(example1_market(), p1, 1e-6);
  auto z1 = excess_demand(example1_market(), p1);
  CHECK(g1[0] == Approx(-z1[0]).epsilon(1e-6));
  CHECK(g1[1] == Approx(-z1[1]).epsilon(1e-6));

  CHECK_THROWS(potential_gradient_fd(cd, PriceVector({1.0, 1.0}), 0.0));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Market m = oracle::random_market(100 + seed, 5, 3, 0.0);
    std::vector<double> p{0.8, 1.1, 1.7};
    if (linear_tie_margin(m, PriceVector(p)) < 1e-4) continue;
    auto fd = oracle::central_difference([&](const std::vector<double>& x) { return potential(m, PriceVector(x)); }, p, 1e-6);
    auto x = demand(m, PriceVector(p));
    for (std::size_t j = 0; j < p.size(); ++j) CHECK(std::abs(fd[j] - (m.supply(j) - x[j])) <= 1e-5);
  }
}

TEST_CASE("demand properties on random buyers") {
  Rng rng(42);
  const std::vector<double> rhos{-2.0, -0.5, 0.0, 0.3, 0.7, 1.0};
  for (int k = 0; k < 60; ++k) {
    std::vector<double> a{rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0)};
    CesBuyer buyer = buyer_for_rho(rng.uniform(0.5, 5.0), rhos[k % rhos.size()], a);
    PriceVector p({rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)});
    auto b = best_response_spending(buyer, p);

    double s = b[0] + b[1] + b[2];
    CHECK(s == Approx(buyer.budget()).epsilon(1e-12));

    std::vector<double> scaled = a;
    for (double& x : scaled) x *= 7.5;
    auto b2 = best_response_spending(buyer.with_coeffs(scaled), p);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(b2[j] - b[j]) <= 1e-12 * buyer.budget());

    double u = utility_of_spending(buyer, b, p);
    CHECK(max_utility(buyer, p) == Approx(u).epsilon(1e-10));
    CHECK(oracle::utility(buyer, b, p.vec()) == Approx(u).epsilon(1e-10));
  }
}

TEST_CASE("market validation and warnings") {
  CHECK_THROWS(Market({CesBuyer::linear(1.0, {1.0, 1.0})}, std::vector<double>{0.0}));
  CHECK_THROWS(Market({CesBuyer::linear(1.0, {1.0})}, std::vector<Good>{{0.0, 0.0}}));
  CHECK_THROWS(Market({CesBuyer::linear(1.0, {1.0})}, std::vector<double>{-1.0}));
  Market rich({CesBuyer::linear(1.0, {1.0, 0.0})}, std::vector<double>{2.0, 0.1});
  CHECK(rich.warnings().size() == 2);
  CHECK_THROWS(PriceVector({1.0, 0.0}));
  CHECK_THROWS(PriceVector({1.0, NAN}));
}
