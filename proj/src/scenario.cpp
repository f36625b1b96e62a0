#include "fisher/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace fisher {

double Rng::uniform() {
  // 53 random mantissa bits; identical on every platform for a given seed.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::log_uniform(double lo, double hi) {
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

std::size_t Rng::index(std::size_t n) {
  return static_cast<std::size_t>(uniform() * static_cast<double>(n));
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"example1", "large-linear", "random-ces"};
  return names;
}

const std::vector<double>& default_rho_mix() {
  static const std::vector<double> mix{-2.0, -0.5, 0.0, 0.3, 0.7, 1.0};
  return mix;
}

CesBuyer buyer_for_rho(double budget, double rho, std::vector<double> coeffs) {
  if (rho == 1.0) return CesBuyer::linear(budget, std::move(coeffs));
  if (rho == 0.0) return CesBuyer::cobb_douglas(budget, std::move(coeffs));
  return CesBuyer::general(budget, rho, std::move(coeffs));
}

namespace {

class ParamReader {
 public:
  ParamReader(const ScenarioParams& params, std::vector<std::string> known)
      : params_(params) {
    for (const auto& [key, value] : params) {
      bool ok = false;
      for (const auto& k : known) ok = ok || k == key;
      if (!ok) throw std::invalid_argument("unknown scenario parameter '" + key + "'");
    }
  }

  double get(const std::string& key, double fallback) const {
    auto it = params_.find(key);
    return it == params_.end() ? fallback : it->second;
  }

  bool has(const std::string& key) const { return params_.count(key) > 0; }

  std::size_t count(const std::string& key, double fallback) const {
    double v = get(key, fallback);
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw std::invalid_argument("scenario parameter '" + key + "' must be a positive integer");
    }
    return static_cast<std::size_t>(v);
  }

 private:
  const ScenarioParams& params_;
};

TatConfig config_with_lambda(double lambda) {
  TatConfig config;
  config.lambda = lambda;
  config.validate();
  return config;
}

Scenario example1(const ScenarioParams& params) {
  ParamReader p(params, {"lambda"});
  double lambda = p.get("lambda", 0.2);
  Market market({CesBuyer::linear(2.0, {1.0, 1.0})}, std::vector<double>{0.0, 0.0});
  PriceVector p0({std::exp(lambda / 2.0), std::exp(-lambda / 2.0)});
  return {std::move(market), std::move(p0), config_with_lambda(lambda)};
}

Scenario large_linear(const ScenarioParams& params, std::uint64_t seed) {
  ParamReader p(params, {"m", "n", "total_money", "reserve_frac", "lambda"});
  std::size_t m = p.count("m", 1000);
  std::size_t n = p.count("n", 4);
  double total = p.get("total_money", static_cast<double>(n));
  double reserve_frac = p.get("reserve_frac", 0.05);
  Rng rng(seed);

  std::vector<CesBuyer> buyers;
  buyers.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> a(n);
    for (double& x : a) x = rng.log_uniform(1.0, 10.0);
    buyers.push_back(CesBuyer::linear(total / static_cast<double>(m), std::move(a)));
  }
  double r = reserve_frac * total / static_cast<double>(n);
  Market market(std::move(buyers), std::vector<double>(n, r));
  PriceVector p0(std::vector<double>(n, total / static_cast<double>(n)));
  return {std::move(market), std::move(p0), config_with_lambda(p.get("lambda", 0.1))};
}

Scenario random_ces(const ScenarioParams& params, std::uint64_t seed) {
  ParamReader p(params, {"m", "n", "rho", "reserve_frac", "lambda"});
  std::size_t m = p.count("m", 6);
  std::size_t n = p.count("n", 3);
  double reserve_frac = p.get("reserve_frac", 0.05);
  Rng rng(seed);

  std::vector<CesBuyer> buyers;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double rho = p.has("rho") ? p.get("rho", 0.0) : default_rho_mix()[rng.index(default_rho_mix().size())];
    double budget = rng.uniform(0.5, 1.5);
    std::vector<double> a(n);
    for (double& x : a) x = rng.uniform(0.5, 2.0);
    total += budget;
    buyers.push_back(buyer_for_rho(budget, rho, std::move(a)));
  }
  double r = reserve_frac * total / static_cast<double>(n);
  Market market(std::move(buyers), std::vector<double>(n, r));
  PriceVector p0(std::vector<double>(n, total / static_cast<double>(n)));
  return {std::move(market), std::move(p0), config_with_lambda(p.get("lambda", 0.1))};
}

}  // namespace

Scenario generate_scenario(const std::string& name, const ScenarioParams& params,
                           std::uint64_t seed) {
  if (name == "example1") return example1(params);
  if (name == "large-linear") return large_linear(params, seed);
  if (name == "random-ces") return random_ces(params, seed);
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

}  // namespace fisher
