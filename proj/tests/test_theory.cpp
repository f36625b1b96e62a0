#include <cmath>
#include <map>

#include "doctest.h"
#include "fisher/equilibrium.hpp"
#include "fisher/scenario.hpp"
#include "fisher/tatonnement.hpp"
#include "fisher/theory.hpp"
#include "oracles.hpp"

using namespace fisher;
using doctest::Approx;

namespace {

// Direct evaluation in extended precision.
double h_ref(long double k, long double c) {
  long double d = k - 1.0L;
  return static_cast<double>((1.0L - std::pow(k, c) + c * d) / (d * d));
}

double g_ref(long double k) {
  long double d = k - 1.0L;
  return static_cast<double>((d - std::log(k)) / (d * d));
}

}  // namespace

TEST_CASE("h_c values") {
  for (double c : {-1.0, 0.2, 0.5}) CHECK(h_c(1.0, c) == c * (1.0 - c) / 2.0);
  CHECK(h_c(1.0, 0.5) == 0.125);
  CHECK(h_c(2.0, 0.5) == Approx(1.5 - std::sqrt(2.0)).epsilon(1e-14));
  CHECK(h_c(0.0, 0.5) == Approx(0.5));
  CHECK_THROWS(h_c(-1.0, 0.5));
  CHECK_THROWS(h_c(2.0, 1.0));
}

TEST_CASE("h_c continuity at one") {
  for (double c : {-1.0, -0.5, 0.2, 0.5, 0.9}) {
    double limit = c * (1.0 - c) / 2.0;
    double prev = INFINITY;
    for (int k = 1; k <= 12; ++k) {
      double d = std::pow(10.0, -k);
      double err = std::max(std::abs(h_c(1.0 + d, c) - limit), std::abs(h_c(1.0 - d, c) - limit));
      CHECK(err <= prev * 1.0000001);
      prev = err;
    }
    CHECK(prev < 1e-11);
  }
}

TEST_CASE("h_c and the log branch against extended precision") {
  for (double c : {-3.0, -1.0, -0.5, 0.2, 0.5, 0.9}) {
    for (double k : {1.0 + 5e-5, 1.0 - 5e-5, 1.0 + 2e-4, 1.001, 0.999, 1.5, 3.0, 20.0}) {
      CHECK(h_c(k, c) == Approx(h_ref(k, c)).epsilon(1e-8));
      CHECK(h_c_over_c(k, c) == Approx(h_ref(k, c) / c).epsilon(1e-8));
    }
  }
  for (double k : {1.0 + 5e-5, 1.0 - 5e-5, 1.001, 2.0, 10.0}) CHECK(log_branch(k) == Approx(g_ref(k)).epsilon(1e-8));
  CHECK(log_branch(1.0) == 0.5);
}

TEST_CASE("big C") {
  CHECK(big_C(2.0, 0.5) == Approx(0.171573).epsilon(1e-5 / 0.171573));
  CHECK(big_C(2.0, 0.5) == Approx(2.0 * (1.5 - std::sqrt(2.0))).epsilon(1e-14));
  for (double k : {1.5, 2.0, 5.0}) {
    double g = (k - 1.0 - std::log(k)) / ((k - 1.0) * (k - 1.0));
    CHECK(std::abs(h_c_over_c(k, 1e-8) - g) <= 1e-6);
    CHECK(std::abs(h_c_over_c(k, -1e-8) - g) <= 1e-6);
    CHECK(big_C(k, 0.0) == Approx(g).epsilon(1e-14));
  }
  // c < 0 with a large kappa is where h_c / c can turn non-positive.
  bool threw = false;
  try {
    big_C(1e6, 0.99);
  } catch (const TheoryInapplicable&) {
    threw = true;
  }
  CHECK((threw || big_C(1e6, 0.99) > 0.0));
}

TEST_CASE("alpha") {
  TheoremParams p;
  p.lambda = 0.1;
  p.sigma = 0.5;
  p.theta = 0.05;
  p.epsilon = 0.01;
  p.kappa = 1.0;
  p.total_money = 1.0;
  p.reserves = {1.0};
  auto a = alpha(p);
  CHECK(a.numerator == Approx(0.58));
  CHECK(a.denominator == Approx(20.0));
  CHECK(a.value == Approx(0.58 / 20.0));
  CHECK(a.guaranteed);

  TheoremParams z = p;
  z.epsilon = 0.0;
  z.theta = 0.35;  // 1 - 0.1 - 0.2 - 0.7 = 0
  auto az = alpha(z);
  CHECK(az.value == Approx(0.0));
  CHECK_FALSE(az.guaranteed);

  TheoremParams nr = p;
  nr.reserves = {0.0};
  CHECK_THROWS_AS(alpha(nr), std::invalid_argument);

  double prev_eps = INFINITY, prev_theta = INFINITY;
  for (double x : {0.0, 0.05, 0.1, 0.2}) {
    TheoremParams q = p;
    q.epsilon = x;
    CHECK(alpha(q).value <= prev_eps);
    prev_eps = alpha(q).value;
    q = p;
    q.theta = 0.01 + x;
    CHECK(alpha(q).value <= prev_theta);
    prev_theta = alpha(q).value;
  }
}

TEST_CASE("price-sum bound") {
  CHECK(m_coefficient(1e-6) == Approx(1.0).epsilon(1e-5));
  CHECK(m_coefficient(1e-6, MConstant::Corrected) == Approx(1.0).epsilon(1e-5));
  double coef = (std::exp(0.2) - 0.4) * (1.4 - std::exp(0.2)) / 0.2 + 0.2;
  std::vector<double> w{1.0, 1.0}, r{1.0, 1.0};
  CHECK(m_bound(w, PriceVector({2.5, 2.5}), 10.0, r, 0.2) == Approx(std::max(5.0, coef * 12.0)));
  CHECK(m_bound(w, PriceVector({500.0, 500.0}), 10.0, r, 0.2) == 1000.0);
  CHECK(m_coefficient(0.1, MConstant::Corrected) == Approx(0.1 / (1.2 - std::exp(0.1))));
  // Supplies weight both the initial prices and the reserves.
  std::vector<double> w2{2.0, 0.5};
  CHECK(m_bound(w2, PriceVector({1.0, 1.0}), 1.0, r, 0.2, MConstant::Corrected) ==
        Approx(std::max(2.5, 0.2 / (1.4 - std::exp(0.2)) * 3.5)));
  CHECK_THROWS(m_coefficient(0.0));
  CHECK(parse_m_constant("published") == MConstant::Published);
  CHECK_THROWS(parse_m_constant("other"));
}

TEST_CASE("published price-sum coefficient undercuts a converging run") {
  // Prices climb from tiny reserves to p* = e a, so the sum approaches e = 1.
  Market m({CesBuyer::cobb_douglas(1.0, {0.5, 0.5})}, std::vector<double>{0.001, 0.001});
  TatConfig cfg;
  cfg.max_iters = 1000;
  PriceVector p0({0.001, 0.001});
  Trace tr = run(m, p0, cfg);
  double last = tr.steps.back().prices_after.sum();
  CHECK(last == Approx(1.0).epsilon(1e-4));
  double published = m_bound(m, p0, cfg.lambda, MConstant::Published);
  double corrected = m_bound(m, p0, cfg.lambda, MConstant::Corrected);
  CHECK(published < last);
  CHECK(corrected >= last);
  for (const auto& rep : check_price_sum(tr.steps, corrected, m.supplies())) CHECK(rep.passed());
}

TEST_CASE("weighted price sum") {
  Market m({CesBuyer::cobb_douglas(1.0, {0.5, 0.5})}, std::vector<Good>{{2.0, 0.1}, {0.5, 0.1}});
  StepRecord s;
  s.prices_after = PriceVector({1.0, 4.0});
  std::vector<StepRecord> steps{s};
  CHECK(check_price_sum(steps, 10.0)[0].lhs == 5.0);
  CHECK(check_price_sum(steps, 10.0, m.supplies())[0].lhs == 4.0);
}

TEST_CASE("observed epsilon") {
  SUBCASE("no near-linear buyers") {
    Market m({CesBuyer::general(1.0, 0.3, {1.0, 2.0})}, std::vector<double>{0.1, 0.1});
    TatConfig cfg;
    Trace tr = run(m, PriceVector({1.0, 1.0}), cfg);
    CHECK(epsilon_observed(tr.steps, 0.5, m) == 0.0);
  }
  SUBCASE("stationary prices") {
    Market m({CesBuyer::linear(1.0, {1.0, 1.0}), CesBuyer::linear(1.0, {1.0, 1.0})}, std::vector<double>{0.1, 0.1});
    TatConfig cfg;
    Trace tr = run(m, PriceVector({1.0, 1.0}), cfg);
    CHECK(epsilon_observed(tr.steps, 0.5, m) == 0.0);
  }
  SUBCASE("oscillating market") {
    auto sc = generate_scenario("example1", {{"lambda", 0.2}}, 0);
    auto step = tat_step(sc.market, sc.p0, 0.2);
    // Good 2 loses the whole budget; good 1 had no spending and no reserve.
    CHECK(epsilon_observed(std::span(&step, 1), 0.5, sc.market) == INFINITY);
    Market reserved({CesBuyer::linear(2.0, {1.0, 1.0})}, std::vector<double>{0.5, 0.25});
    auto s2 = tat_step(reserved, sc.p0, 0.2);
    CHECK(epsilon_observed(std::span(&s2, 1), 0.5, reserved) == Approx(std::max(2.0 / 0.5, 2.0 / (2.0 + 0.25))));
  }
  SUBCASE("monotone in the trace length") {
    Market m = oracle::random_market(3, 6, 3, 0.05);
    TatConfig cfg;
    cfg.max_iters = 60;
    Trace tr = run(m, PriceVector({1.5, 0.5, 2.0}), cfg);
    double prev = 0.0;
    for (std::size_t k = 1; k <= tr.steps.size(); ++k) {
      double e = epsilon_observed(std::span(tr.steps.data(), k), 0.5, m);
      CHECK(e >= prev);
      prev = e;
    }
  }
}

TEST_CASE("a-priori epsilon estimate") {
  Market single({CesBuyer::linear(1.0, {1.0, 1.0})}, std::vector<double>{0.5, 0.5});
  auto est = epsilon_apriori_linear(single, 0.1, 9);
  CHECK(est.value == Approx(1.0 / 0.5));
  CHECK(est.grid_points == 2 * 9);

  auto sc = generate_scenario("large-linear", {{"m", 50}, {"n", 3}}, 1);
  auto coarse = epsilon_apriori_linear(sc.market, 0.1, 5);
  auto fine = epsilon_apriori_linear(sc.market, 0.1, 9);  // nested grid
  CHECK(fine.value >= coarse.value);
  CHECK(fine.grid_points == 3 * 81);

  Market empty(std::vector<CesBuyer>{}, std::vector<double>{0.5, 0.5});
  CHECK(epsilon_apriori_linear(empty, 0.1, 5).value == 0.0);

  Market mixed({CesBuyer::linear(1.0, {1.0, 1.0}), CesBuyer::cobb_douglas(1.0, {0.5, 0.5})}, std::vector<double>{0.5, 0.5});
  CHECK_THROWS(epsilon_apriori_linear(mixed, 0.1, 5));
}

TEST_CASE("progress and buyer bounds on the oscillating market") {
  auto sc = generate_scenario("example1", {{"lambda", 0.2}}, 0);
  auto step = tat_step(sc.market, sc.p0, 0.2);
  auto pr = check_progress(step, sc.market, 0.5, 0.2);
  double e1 = std::exp(0.1);
  double hand_lower = 0.4 * 0.2 * (e1 + 2.0 - 1.0 / e1) - 0.8;
  CHECK(pr.lhs == Approx(hand_lower));
  CHECK(pr.rhs == Approx(0.0).epsilon(1e-12));
  CHECK(pr.passed());

  auto lu = check_buyer_log_utility(sc.market.buyers()[0], 0, step, 0.2);
  REQUIRE(lu.size() == 1);
  CHECK(lu[0].check == "log_utility_linear");
  CHECK(lu[0].lhs == Approx(0.0).epsilon(1e-12));
  CHECK(lu[0].rhs == Approx(0.4));
}

TEST_CASE("zero step") {
  Market cd({CesBuyer::cobb_douglas(2.0, {0.5, 0.5})}, std::vector<double>{0.1, 0.1});
  auto step = tat_step(cd, PriceVector({1.0, 1.0}), 0.1);
  auto pr = check_progress(step, cd, 0.5, 0.1);
  CHECK(pr.lhs == 0.0);
  CHECK(pr.rhs == 0.0);
  for (const auto& r : check_claim_lower_progress(step, cd, 0.1)) {
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
  }
  auto lu = check_buyer_log_utility(cd.buyers()[0], 0, step, 0.1);
  CHECK(lu[0].slack == Approx(0.0));
}

TEST_CASE("claim is tight at unit excess") {
  Market one({CesBuyer::cobb_douglas(2.0, {1.0})}, std::vector<double>{0.0});
  auto step = tat_step(one, PriceVector({1.0}), 0.1);
  CHECK(step.z[0] == Approx(1.0));
  auto r = check_claim_lower_progress(step, one, 0.1)[0];
  CHECK(r.lhs == Approx(0.1));
  CHECK(r.rhs == Approx(0.1));
  CHECK(r.passed());

  Market none({CesBuyer::linear(1.0, {0.0, 1.0})}, std::vector<double>{0.0, 0.0});
  auto s2 = tat_step(none, PriceVector({1.0, 1.0}), 0.1);
  auto c2 = check_claim_lower_progress(s2, none, 0.1)[0];
  CHECK(c2.lhs == 0.0);
  CHECK(c2.rhs >= 0.0);
}

TEST_CASE("strong convexity") {
  Market cd({CesBuyer::cobb_douglas(2.0, {0.5, 0.5})}, std::vector<double>{0.1, 0.1});
  PriceVector ps({1.0, 1.0});
  auto same = check_strong_convexity(cd, ps, ps, 10.0);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == Approx(0.0).epsilon(1e-14));

  PriceVector p({1.2, 1.2});
  auto r = check_strong_convexity(cd, p, ps, 10.0);
  // Closed form of the potential for one Cobb-Douglas buyer.
  auto F = [](double p1, double p2) { return p1 + p2 + 2.0 * (0.5 * std::log(1.0 / p1) + 0.5 * std::log(1.0 / p2)); };
  double x = 1.0 / 1.2;
  double bregman = F(1.0, 1.0) - F(1.2, 1.2) - 2.0 * (1.0 - x) * (1.0 - 1.2);
  double C = (9.0 - std::log(10.0)) / 81.0;
  CHECK(r.rhs == Approx(bregman));
  CHECK(r.lhs == Approx(C * 2.0 * x * 0.04 / 1.2));
  CHECK(r.passed());

  auto bad = check_strong_convexity(cd, PriceVector({0.1, 1.0}), ps, 2.0);
  CHECK(bad.status == CheckStatus::Inapplicable);
}

TEST_CASE("distance bound with a clamped good") {
  Market m({CesBuyer::cobb_douglas(1.0, {0.1, 0.9})}, std::vector<double>{0.5, 0.1});
  PriceVector ps({0.5, 0.9});
  auto step = tat_step(m, PriceVector({0.55, 0.9}), 0.5);
  REQUIRE(step.clamped[0]);
  auto reps = check_distance_bound(m, step, ps, 9.0, 0.5);
  REQUIRE(reps.size() == 3);
  double gap = 0.05 - 0.1 * std::log(1.1);
  double C = (8.0 - std::log(9.0)) / 64.0;
  double K1 = std::max(2.0, 1.0 / (2.0 * C)) * 1.0 / (0.5 * 0.5);
  double term = K1 * (0.1 - 0.55) * std::log(0.5 / 0.55);
  CHECK(reps[0].lhs == Approx(gap));
  CHECK(reps[0].rhs == Approx(term));
  CHECK(reps[0].passed());
  CHECK(reps[1].note == "reserve-clamped");
  for (const auto& r : reps) CHECK(r.passed());

  auto at_star = tat_step(m, ps, 0.5);
  auto r2 = check_distance_bound(m, at_star, ps, 9.0, 0.5);
  CHECK(r2[0].lhs == Approx(0.0).epsilon(1e-14));
  CHECK(r2[0].rhs >= 0.0);

  auto too_small = check_distance_bound(m, step, ps, 2.0, 0.5);
  CHECK(too_small[0].status == CheckStatus::Inapplicable);
}

TEST_CASE("envelope helper") {
  std::vector<double> gaps{1.0, 0.5, 0.3, 0.3};
  auto reps = check_envelope("demo", gaps, 0.5, 0.01, 0.02);
  CHECK(reps[0].slack == Approx(0.01));
  std::size_t contraction = 0;
  for (const auto& r : reps) {
    if (r.check == "demo_contraction") ++contraction;
  }
  CHECK(contraction == 3);
  CHECK(reps.back().failed());  // 0.3 -> 0.3 is no contraction
}

TEST_CASE("all checkers hold along random trajectories") {
  std::map<std::string, int> seen;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Market m = oracle::random_market(500 + seed, 6, 3, 0.05);
    TatConfig cfg;
    cfg.lambda = 0.2;
    cfg.max_iters = 25;
    Trace tr = run(m, PriceVector({2.0, 0.4, 1.0}), cfg);
    auto sol = solve_equilibrium(m);
    double kappa = kappa_of(sol.p_star, m.reserves());
    for (const auto& s : tr.steps) {
      std::vector<BoundReport> reps{check_progress(s, m, cfg.sigma, cfg.lambda)};
      for (std::size_t i = 0; i < m.num_buyers(); ++i) {
        for (auto& r : check_buyer_log_utility(m.buyers()[i], i, s, cfg.lambda)) reps.push_back(r);
      }
      for (auto& r : check_claim_lower_progress(s, m, cfg.lambda)) reps.push_back(r);
      for (auto& r : check_distance_bound(m, s, sol.p_star, kappa, cfg.lambda)) reps.push_back(r);
      reps.push_back(check_strong_convexity(m, s.prices_before, sol.p_star, kappa));
      for (const auto& r : reps) {
        if (r.status == CheckStatus::Pass) ++seen[r.check];
        CHECK_MESSAGE(!r.failed(), r.check << " t=" << s.t << " slack=" << r.slack);
      }
    }
  }
  for (const char* name : {"log_utility_linear", "log_utility_substitute", "log_utility_substitute_c",
                           "log_utility_complement", "progress", "claim_lower_progress", "distance_bound",
                           "strong_convexity"}) {
    CHECK_MESSAGE(seen[name] >= 10, name);
  }
}
