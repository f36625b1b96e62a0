#include "fisher/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace fisher {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw MarketFormatError(path + ": " + msg);
}

double number_at(const json& node, const std::string& path) {
  if (!node.is_number()) fail(path, "expected a number");
  return node.get<double>();
}

double optional_number(const json& obj, const char* key, double fallback, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  return number_at(*it, path + "." + key);
}

const json& require_key(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? std::string(key) : path + "." + key, "missing");
  return *it;
}

std::vector<double> number_list(const json& node, const std::string& path) {
  if (!node.is_array()) fail(path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < node.size(); ++k) {
    out.push_back(number_at(node[k], path + "[" + std::to_string(k) + "]"));
  }
  return out;
}

constexpr double kCobbDouglasWarnTol = 1e-9;

void warn_unnormalized(const std::vector<double>& coeffs, const std::string& path,
                       std::vector<std::string>& warnings) {
  double s = 0.0;
  for (double a : coeffs) s += a;
  if (std::abs(s - 1.0) > kCobbDouglasWarnTol && s > 0.0) {
    warnings.push_back(path + ".coeffs: cobb-douglas coefficients normalized to sum 1");
  }
}

}  // namespace

LoadedMarket parse_market(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("<document>", e.what());
  }
  if (!doc.is_object()) fail("<document>", "expected an object");

  const json& goods_node = require_key(doc, "goods", "");
  if (!goods_node.is_array() || goods_node.empty()) fail("goods", "expected a non-empty list");
  std::vector<Good> goods;
  for (std::size_t j = 0; j < goods_node.size(); ++j) {
    const std::string path = "goods[" + std::to_string(j) + "]";
    const json& g = goods_node[j];
    if (!g.is_object()) fail(path, "expected an object");
    Good good;
    good.supply = optional_number(g, "supply", 1.0, path);
    good.reserve = optional_number(g, "reserve", 0.0, path);
    if (!(std::isfinite(good.supply) && good.supply > 0.0)) fail(path + ".supply", "must be positive");
    if (!(std::isfinite(good.reserve) && good.reserve >= 0.0)) fail(path + ".reserve", "must be >= 0");
    goods.push_back(good);
  }

  std::vector<std::string> warnings;
  const json& buyers_node = require_key(doc, "buyers", "");
  if (!buyers_node.is_array()) fail("buyers", "expected a list");
  std::vector<CesBuyer> buyers;
  for (std::size_t i = 0; i < buyers_node.size(); ++i) {
    const std::string path = "buyers[" + std::to_string(i) + "]";
    const json& b = buyers_node[i];
    if (!b.is_object()) fail(path, "expected an object");
    double budget = number_at(require_key(b, "budget", path), path + ".budget");
    std::vector<double> coeffs = number_list(require_key(b, "coeffs", path), path + ".coeffs");
    if (coeffs.size() != goods.size()) {
      fail(path + ".coeffs", "expected " + std::to_string(goods.size()) + " entries");
    }
    const json& rho = require_key(b, "rho", path);
    try {
      if (rho.is_string()) {
        auto tag = rho.get<std::string>();
        if (tag == "linear") {
          buyers.push_back(CesBuyer::linear(budget, coeffs));
        } else if (tag == "cobb-douglas") {
          warn_unnormalized(coeffs, path, warnings);
          buyers.push_back(CesBuyer::cobb_douglas(budget, coeffs));
        } else {
          fail(path + ".rho", "unknown tag '" + tag + "'");
        }
      } else if (rho.is_number()) {
        double r = rho.get<double>();
        if (r == 1.0) {
          buyers.push_back(CesBuyer::linear(budget, coeffs));
        } else if (r == 0.0) {
          warn_unnormalized(coeffs, path, warnings);
          buyers.push_back(CesBuyer::cobb_douglas(budget, coeffs));
        } else {
          buyers.push_back(CesBuyer::general(budget, r, coeffs));
        }
      } else {
        fail(path + ".rho", "expected a number, \"linear\" or \"cobb-douglas\"");
      }
    } catch (const MarketFormatError&) {
      throw;
    } catch (const std::exception& e) {
      std::string what = e.what();
      std::string field = what.find("rho") != std::string::npos      ? ".rho"
                          : what.find("budget") != std::string::npos ? ".budget"
                                                                     : ".coeffs";
      fail(path + field, what);
    }
  }

  LoadedMarket out{Market(std::move(buyers), std::move(goods)), std::nullopt, std::move(warnings)};
  if (auto it = doc.find("initial_prices"); it != doc.end()) {
    auto p = number_list(*it, "initial_prices");
    if (p.size() != out.market.num_goods()) fail("initial_prices", "length does not match goods");
    try {
      out.initial_prices = PriceVector(p);
    } catch (const std::exception& e) {
      fail("initial_prices", e.what());
    }
  }
  for (auto& w : out.market.warnings()) out.warnings.push_back(std::move(w));
  return out;
}

LoadedMarket load_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open market file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_market(ss.str());
}

std::string emit_market(const Market& market, const std::optional<PriceVector>& initial_prices) {
  json doc;
  doc["goods"] = json::array();
  for (const auto& g : market.goods()) doc["goods"].push_back({{"supply", g.supply}, {"reserve", g.reserve}});
  doc["buyers"] = json::array();
  for (const auto& b : market.buyers()) {
    json node;
    node["budget"] = b.budget();
    switch (b.kind()) {
      case UtilityKind::Linear:
        node["rho"] = "linear";
        break;
      case UtilityKind::CobbDouglas:
        node["rho"] = "cobb-douglas";
        break;
      case UtilityKind::General:
        node["rho"] = b.rho();
        break;
    }
    node["coeffs"] = b.coeffs();
    doc["buyers"].push_back(std::move(node));
  }
  if (initial_prices) doc["initial_prices"] = initial_prices->vec();
  return doc.dump(2) + "\n";
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void emit_trace(std::span<const StepRecord> steps, std::ostream& out) {
  out << "t,good,price_before,price_after,z,delta,clamped,F_after\n";
  for (const auto& s : steps) {
    for (std::size_t j = 0; j < s.delta.size(); ++j) {
      out << s.t << ',' << j << ',' << format_double(s.prices_before[j]) << ','
          << format_double(s.prices_after[j]) << ',' << format_double(s.z[j]) << ','
          << format_double(s.delta[j]) << ',' << (s.clamped[j] ? "true" : "false") << ','
          << format_double(s.potential_after) << '\n';
    }
  }
}

void emit_trace(const Trace& trace, std::ostream& out) { emit_trace(std::span(trace.steps), out); }

void emit_report(std::span<const BoundReport> reports, std::ostream& out) {
  out << "check,t,good,lhs,rhs,slack,pass\n";
  for (const auto& r : reports) {
    out << r.check << ',';
    if (r.t) out << *r.t;
    out << ',';
    if (r.good) out << *r.good;
    out << ',' << format_double(r.lhs) << ',' << format_double(r.rhs) << ','
        << format_double(r.slack) << ',' << to_string(r.status) << '\n';
  }
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace fisher
