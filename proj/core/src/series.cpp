#include "wvar/series.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace wvar {

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    fields.push_back(trim(field));
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

}  // namespace

Date Date::parse(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
      !all_digits(std::string_view(text).substr(0, 4)) ||
      !all_digits(std::string_view(text).substr(5, 2)) ||
      !all_digits(std::string_view(text).substr(8, 2))) {
    throw std::invalid_argument("malformed date (expected YYYY-MM-DD): '" + text + "'");
  }
  Date d;
  d.year = std::stoi(text.substr(0, 4));
  d.month = static_cast<unsigned>(std::stoi(text.substr(5, 2)));
  d.day = static_cast<unsigned>(std::stoi(text.substr(8, 2)));
  const std::chrono::year_month_day ymd{std::chrono::year{d.year}, std::chrono::month{d.month},
                                        std::chrono::day{d.day}};
  if (!ymd.ok()) {
    throw std::invalid_argument("impossible calendar date: '" + text + "'");
  }
  return d;
}

std::string Date::to_string() const {
  char buf[11];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year, month, day);
  return buf;
}

Date Date::plus_days(int days) const {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  const auto shifted =
      std::chrono::year_month_day{std::chrono::sys_days{ymd} + std::chrono::days{days}};
  return Date{int(shifted.year()), unsigned(shifted.month()), unsigned(shifted.day())};
}

void PriceSeries::validate() const {
  if (dates.size() != prices.size()) {
    throw std::invalid_argument("price series: dates and prices differ in length");
  }
  if (prices.size() < 2) {
    throw std::invalid_argument("price series: need at least 2 observations");
  }
  for (std::size_t i = 0; i < prices.size(); ++i) {
    if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) {
      throw std::invalid_argument("price series: non-positive price at index " +
                                  std::to_string(i));
    }
    if (i > 0 && !(dates[i - 1] < dates[i])) {
      throw std::invalid_argument("price series: dates not strictly increasing at index " +
                                  std::to_string(i));
    }
  }
}

PriceSeries load_prices(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path.string() + "'");
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("'" + path.string() + "': empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // Strip a UTF-8 BOM if present.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

  const auto header = split_csv_line(line);
  std::ptrdiff_t date_col = -1, price_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == schema.date_column) date_col = static_cast<std::ptrdiff_t>(i);
    if (header[i] == schema.price_column) price_col = static_cast<std::ptrdiff_t>(i);
  }
  if (date_col < 0 || price_col < 0) {
    throw std::runtime_error("'" + path.string() + "': header must name columns '" +
                             schema.date_column + "' and '" + schema.price_column + "'");
  }

  PriceSeries series;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      throw std::runtime_error("'" + path.string() + "': blank row " + std::to_string(row));
    }
    const auto fields = split_csv_line(line);
    const auto need = static_cast<std::size_t>(std::max(date_col, price_col)) + 1;
    if (fields.size() < need) {
      throw std::runtime_error("'" + path.string() + "': row " + std::to_string(row) +
                               " has too few fields");
    }
    Date date;
    try {
      date = Date::parse(fields[static_cast<std::size_t>(date_col)]);
    } catch (const std::exception& e) {
      throw std::runtime_error("'" + path.string() + "': row " + std::to_string(row) + ": " +
                               e.what());
    }
    const std::string& raw = fields[static_cast<std::size_t>(price_col)];
    double price = 0.0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), price);
    if (ec != std::errc{} || ptr != raw.data() + raw.size()) {
      throw std::runtime_error("'" + path.string() + "': row " + std::to_string(row) +
                               ": non-numeric price '" + raw + "'");
    }
    if (!(price > 0.0) || !std::isfinite(price)) {
      throw std::runtime_error("'" + path.string() + "': row " + std::to_string(row) +
                               ": non-positive price '" + raw + "'");
    }
    series.dates.push_back(date);
    series.prices.push_back(price);
  }

  if (series.size() < 2) {
    throw std::runtime_error("'" + path.string() + "': need at least 2 data rows");
  }

  std::vector<std::size_t> order(series.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return series.dates[a] < series.dates[b]; });
  PriceSeries sorted;
  sorted.dates.reserve(order.size());
  sorted.prices.reserve(order.size());
  for (std::size_t idx : order) {
    sorted.dates.push_back(series.dates[idx]);
    sorted.prices.push_back(series.prices[idx]);
  }
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted.dates[i - 1] == sorted.dates[i]) {
      throw std::runtime_error("'" + path.string() + "': duplicate date " +
                               sorted.dates[i].to_string());
    }
  }
  sorted.validate();
  return sorted;
}

ReturnSeries to_log_returns(const PriceSeries& prices) {
  prices.validate();
  ReturnSeries r;
  r.dates.reserve(prices.size() - 1);
  r.values.reserve(prices.size() - 1);
  for (std::size_t t = 0; t + 1 < prices.size(); ++t) {
    r.dates.push_back(prices.dates[t + 1]);
    r.values.push_back(std::log(prices.prices[t + 1]) - std::log(prices.prices[t]));
  }
  return r;
}

void write_prices_csv(const std::filesystem::path& path, const PriceSeries& prices,
                      const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  out << schema.date_column << ',' << schema.price_column << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < prices.size(); ++i) {
    out << prices.dates[i].to_string() << ',' << prices.prices[i] << '\n';
  }
  if (!out) {
    throw std::runtime_error("write failed for '" + path.string() + "'");
  }
}

}  // namespace wvar
