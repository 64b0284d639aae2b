#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace wvar {

/// Calendar date, ISO-8601 `YYYY-MM-DD`.
struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  auto operator<=>(const Date&) const = default;

  /// Parses a strict `YYYY-MM-DD` string; throws std::invalid_argument on
  /// malformed text or an impossible calendar date.
  static Date parse(const std::string& text);

  std::string to_string() const;

  /// Calendar-correct day arithmetic.
  Date plus_days(int days) const;
};

/// Ordered closing prices. Dates strictly increasing, prices > 0, length >= 2.
struct PriceSeries {
  std::vector<Date> dates;
  std::vector<double> prices;

  std::size_t size() const { return prices.size(); }
  void validate() const;
};

/// Log returns; one fewer entry than the price series it came from. Each
/// return carries the date of the later price in its ratio.
struct ReturnSeries {
  std::vector<Date> dates;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Header names expected in a price CSV. Extra columns are ignored.
struct CsvSchema {
  std::string date_column = "date";
  std::string price_column = "close";
};

/// Reads a UTF-8, comma-separated CSV with a header row into a PriceSeries
/// sorted ascending by date. Throws std::runtime_error naming the offending
/// row for: missing file, missing columns, unparsable dates or prices,
/// non-positive prices, duplicate dates, or fewer than two data rows.
PriceSeries load_prices(const std::filesystem::path& path, const CsvSchema& schema = {});

/// r[t] = ln(prices[t+1]) - ln(prices[t]).
ReturnSeries to_log_returns(const PriceSeries& prices);

/// Writes the load_prices schema (date,close).
void write_prices_csv(const std::filesystem::path& path, const PriceSeries& prices,
                      const CsvSchema& schema = {});

}  // namespace wvar
