#ifndef FISHER_IO_HPP
#define FISHER_IO_HPP

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fisher/market.hpp"
#include "fisher/tatonnement.hpp"
#include "fisher/theory.hpp"

namespace fisher {

/// Raised for malformed market documents; the message starts with the field path.
class MarketFormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LoadedMarket {
  Market market;
  /// Optional "initial_prices" entry of the document.
  std::optional<PriceVector> initial_prices;
  std::vector<std::string> warnings;
};

LoadedMarket parse_market(const std::string& text);
LoadedMarket load_market(const std::string& path);

/// JSON document accepted by parse_market.
std::string emit_market(const Market& market,
                        const std::optional<PriceVector>& initial_prices = std::nullopt);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

void emit_trace(const Trace& trace, std::ostream& out);
void emit_trace(std::span<const StepRecord> steps, std::ostream& out);
void emit_report(std::span<const BoundReport> reports, std::ostream& out);

void write_file(const std::string& path, const std::string& contents);

}  // namespace fisher

#endif  // FISHER_IO_HPP
