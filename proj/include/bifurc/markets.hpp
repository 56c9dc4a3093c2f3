#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bifurc/encoding.hpp"
#include "bifurc/errors.hpp"
#include "bifurc/matrix.hpp"

namespace bifurc::markets {

// Closing prices, one row per trading date (ascending), one column per ticker.
struct PriceSeries {
  std::vector<std::string> tickers;
  std::vector<std::string> dates;  // ISO-8601, strictly increasing
  Matrix prices;

  std::size_t assets() const noexcept { return tickers.size(); }
  std::size_t days() const noexcept { return dates.size(); }
};

struct IngestResult {
  PriceSeries series;
  std::size_t dropped_rows = 0;
};

// Daily simple returns, (days - 1) x assets.
struct ReturnsMatrix {
  std::vector<std::string> tickers;
  Matrix returns;
};

enum class MuMode { mean, last_day };

struct Moments {
  Vector mu;
  Matrix sigma;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool is_missing(std::string_view cell) {
  if (cell.empty()) return true;
  std::string lower(cell);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "na" || lower == "nan" || lower == "null" || lower == "n/a" || lower == ".";
}

// Parses YYYY-MM-DD; returns nullopt for anything else or an impossible date.
inline std::optional<std::chrono::sys_days> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto num = [&](std::string_view part, auto& out) {
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc{} && p == part.data() + part.size();
  };
  if (!num(s.substr(0, 4), y) || !num(s.substr(5, 2), m) || !num(s.substr(8, 2), d)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

}  // namespace detail

// Reads `date,TICKER1,TICKER2,...` CSV. Dates with any missing price are
// dropped and counted; rows are sorted by date.
inline IngestResult ingest_prices(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("price file is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = detail::split(line);
  if (header.size() < 2) throw IngestError("header needs a date column and at least one ticker");

  IngestResult out;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw IngestError("empty ticker name in header column " + std::to_string(c + 1));
    out.series.tickers.emplace_back(header[c]);
  }
  const std::size_t assets = out.series.tickers.size();

  struct Row {
    std::chrono::sys_days day;
    std::string date;
    std::vector<double> prices;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() > header.size())
      throw IngestError("line " + std::to_string(line_no) + " has more cells than the header");
    const auto day = detail::parse_date(cells[0]);
    if (!day) throw IngestError("line " + std::to_string(line_no) + ": bad date '" + std::string(cells[0]) + "'");

    Row r{*day, std::string(cells[0]), {}};
    bool missing = cells.size() < header.size();
    for (std::size_t c = 1; c < cells.size() && !missing; ++c) {
      if (detail::is_missing(cells[c])) {
        missing = true;
        break;
      }
      double v = 0.0;
      const auto cell = cells[c];
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || p != cell.data() + cell.size() || !std::isfinite(v))
        throw IngestError("line " + std::to_string(line_no) + ": bad price '" + std::string(cell) + "'");
      if (v <= 0.0) throw IngestError("line " + std::to_string(line_no) + ": prices must be positive");
      r.prices.push_back(v);
    }
    if (missing) {
      ++out.dropped_rows;
      continue;
    }
    rows.push_back(std::move(r));
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.day < b.day; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].day == rows[i - 1].day) throw IngestError("duplicate date " + rows[i].date);
  if (rows.empty()) throw EmptyDataError("no complete price rows after dropping missing values");

  out.series.prices = Matrix(rows.size(), assets);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    out.series.dates.push_back(rows[t].date);
    std::copy(rows[t].prices.begin(), rows[t].prices.end(), out.series.prices.row(t).begin());
  }
  return out;
}

inline IngestResult ingest_prices(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path);
  return ingest_prices(in);
}

// Restricts to dates in [from, to] (inclusive, either optional), then keeps
// only the trailing `last` rows when given.
inline PriceSeries select_window(const PriceSeries& p, const std::optional<std::string>& from,
                                 const std::optional<std::string>& to, std::optional<std::size_t> last) {
  auto bound = [](const std::optional<std::string>& s) -> std::optional<std::chrono::sys_days> {
    if (!s) return std::nullopt;
    auto d = detail::parse_date(*s);
    if (!d) throw ConfigError("bad window date '" + *s + "'");
    return d;
  };
  const auto lo = bound(from);
  const auto hi = bound(to);
  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < p.days(); ++t) {
    const auto d = *detail::parse_date(p.dates[t]);
    if ((lo && d < *lo) || (hi && d > *hi)) continue;
    keep.push_back(t);
  }
  if (last && keep.size() > *last) keep.erase(keep.begin(), keep.end() - static_cast<std::ptrdiff_t>(*last));

  PriceSeries out{p.tickers, {}, Matrix(keep.size(), p.assets())};
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.dates.push_back(p.dates[keep[r]]);
    std::copy(p.prices.row(keep[r]).begin(), p.prices.row(keep[r]).end(), out.prices.row(r).begin());
  }
  return out;
}

// r[t][i] = (p[t+1][i] - p[t][i]) / p[t][i]
inline ReturnsMatrix daily_returns(const PriceSeries& p) {
  if (p.days() < 2)
    throw InsufficientDataError("need at least 2 dates for returns, have " + std::to_string(p.days()));
  ReturnsMatrix r{p.tickers, Matrix(p.days() - 1, p.assets())};
  for (std::size_t t = 0; t + 1 < p.days(); ++t)
    for (std::size_t i = 0; i < p.assets(); ++i)
      r.returns(t, i) = (p.prices(t + 1, i) - p.prices(t, i)) / p.prices(t, i);
  return r;
}

// Sample covariance (divisor T-1); mu is the column mean, or the final row
// in last_day mode.
inline Moments estimate_moments(const ReturnsMatrix& r, MuMode mode = MuMode::mean) {
  const Matrix& R = r.returns;
  const std::size_t T = R.rows();
  const std::size_t n = R.cols();
  if (T < 2) throw InsufficientDataError("need at least 2 return rows, have " + std::to_string(T));

  Vector mean(n, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < n; ++i) mean[i] += R(t, i);
  for (double& m : mean) m /= static_cast<double>(T);

  Matrix sigma(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < T; ++t) acc += (R(t, i) - mean[i]) * (R(t, j) - mean[j]);
      sigma(i, j) = sigma(j, i) = acc / static_cast<double>(T - 1);
    }
  }

  Moments m{std::move(mean), std::move(sigma)};
  if (mode == MuMode::last_day) m.mu.assign(R.row(T - 1).begin(), R.row(T - 1).end());
  return m;
}

// Validated problem; sigma is stored as (Sigma + Sigma^T) / 2.
inline MarkowitzProblem assemble_problem(const Vector& mu, const Matrix& sigma, double gamma, int alpha,
                                         std::vector<std::string> tickers = {}) {
  if (!sigma.square() || sigma.rows() != mu.size())
    throw DimensionError("covariance shape does not match " + std::to_string(mu.size()) + " returns");
  if (sigma.asymmetry() > kSymmetryTolerance) throw ModelError("covariance matrix is not symmetric");
  Matrix sym = sigma;
  for (std::size_t i = 0; i < sym.rows(); ++i)
    for (std::size_t j = i + 1; j < sym.cols(); ++j) sym(i, j) = sym(j, i) = 0.5 * (sigma(i, j) + sigma(j, i));
  return MarkowitzProblem(mu, std::move(sym), gamma, alpha, std::move(tickers));
}

}  // namespace bifurc::markets
