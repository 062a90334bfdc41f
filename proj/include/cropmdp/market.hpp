#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "cropmdp/catalog.hpp"
#include "cropmdp/dates.hpp"

namespace cropmdp {

struct PriceDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PriceRow {
  Date date;
  std::string crop_id;
  double price_per_kg = 0.0;
  double quantity_kg = 0.0;
};

/// Dated per-crop prices (currency per kg), at most one observation per
/// (crop, date).
class PriceSeries {
public:
  using CropPrices = std::map<Date, double>;

  PriceSeries() = default;

  /// Duplicate (crop, date) rows are averaged.
  static PriceSeries from_rows(std::span<const PriceRow> rows) {
    std::map<std::string, std::map<Date, std::pair<double, int>>> acc;
    for (const auto& r : rows) {
      if (!std::isfinite(r.price_per_kg) || r.price_per_kg < 0.0)
        throw PriceDataError(fmt::format("negative or non-finite price {} for '{}' on {}",
                                         r.price_per_kg, r.crop_id, format_date(r.date)));
      auto& slot = acc[r.crop_id][r.date];
      slot.first += r.price_per_kg;
      slot.second += 1;
    }
    PriceSeries s;
    for (const auto& [crop, days] : acc) {
      auto& out = s.observations_[crop];
      for (const auto& [date, sum_count] : days) {
        out.emplace(date, sum_count.first / sum_count.second);
        s.extend_coverage(date);
      }
    }
    return s;
  }

  const std::map<std::string, CropPrices>& observations() const { return observations_; }
  std::optional<std::pair<Date, Date>> coverage() const { return coverage_; }
  bool empty() const { return observations_.empty(); }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, days] : observations_) n += days.size();
    return n;
  }

  const CropPrices* crop(std::string_view id) const {
    auto it = observations_.find(std::string(id));
    return it == observations_.end() ? nullptr : &it->second;
  }

  friend bool operator==(const PriceSeries&, const PriceSeries&) = default;

private:
  void extend_coverage(Date d) {
    if (!coverage_) {
      coverage_ = {d, d};
    } else {
      coverage_->first = std::min(coverage_->first, d);
      coverage_->second = std::max(coverage_->second, d);
    }
  }

  std::map<std::string, CropPrices> observations_;
  std::optional<std::pair<Date, Date>> coverage_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline double parse_decimal(std::string_view text, std::string_view what) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size())
    throw PriceDataError(fmt::format("{}: '{}' is not a decimal number", what, text));
  return v;
}

}  // namespace detail

/// Reads a price CSV with header columns date, crop_id, price_per_kg,
/// quantity_kg in any order.
inline PriceSeries parse_prices(std::istream& in, std::string_view source = "prices") {
  std::string line;
  std::size_t line_no = 0;
  std::vector<PriceRow> rows;
  int c_date = -1, c_crop = -1, c_price = -1, c_qty = -1;
  std::size_t n_cols = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv(line);
    auto where = [&] { return fmt::format("{}:{}", source, line_no); };
    if (!have_header) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const int idx = static_cast<int>(i);
        if (cells[i] == "date") c_date = idx;
        else if (cells[i] == "crop_id") c_crop = idx;
        else if (cells[i] == "price_per_kg") c_price = idx;
        else if (cells[i] == "quantity_kg") c_qty = idx;
      }
      if (c_date < 0 || c_crop < 0 || c_price < 0 || c_qty < 0)
        throw PriceDataError(where() +
                             ": header must name columns date, crop_id, price_per_kg, quantity_kg");
      n_cols = cells.size();
      have_header = true;
      continue;
    }
    if (cells.size() != n_cols)
      throw PriceDataError(fmt::format("{}: expected {} fields, found {}", where(), n_cols, cells.size()));
    PriceRow row;
    try {
      row.date = parse_date(cells[c_date]);
    } catch (const std::invalid_argument& e) {
      throw PriceDataError(fmt::format("{}: {}", where(), e.what()));
    }
    row.crop_id = std::string(cells[c_crop]);
    if (row.crop_id.empty()) throw PriceDataError(where() + ": empty crop_id");
    row.price_per_kg = detail::parse_decimal(cells[c_price], where() + " price_per_kg");
    row.quantity_kg = detail::parse_decimal(cells[c_qty], where() + " quantity_kg");
    if (row.price_per_kg < 0.0)
      throw PriceDataError(fmt::format("{}: negative price {}", where(), row.price_per_kg));
    rows.push_back(std::move(row));
  }
  return PriceSeries::from_rows(rows);
}

inline PriceSeries load_prices(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PriceDataError(fmt::format("cannot open price file '{}'", path.string()));
  return parse_prices(in, path.string());
}

/// Quantity is not retained by PriceSeries and is written as 0.
inline void write_prices(const PriceSeries& series, std::ostream& out) {
  out << "date,crop_id,price_per_kg,quantity_kg\n";
  for (const auto& [crop, days] : series.observations())
    for (const auto& [date, price] : days) out << fmt::format("{},{},{},0\n", format_date(date), crop, price);
}

/// Anything that can price a harvest of catalog crop `crop` at timestep t.
template <typename T>
concept RevenueSource = requires(const T& source, std::size_t crop, int t) {
  { source.revenue(crop, t) } -> std::convertible_to<double>;
};

/// y_t: harvest revenue from observed prices. Missing days carry the last
/// observed price forward; days before a crop's first observation use the
/// crop's mean price over the whole series.
class RevenueOracle {
public:
  RevenueOracle(PriceSeries series, CropCatalog catalog)
      : series_(std::move(series)), catalog_(std::move(catalog)) {
    for (const auto& spec : catalog_.crops()) {
      FilledCrop f;
      if (const auto* obs = series_.crop(spec.id); obs && !obs->empty()) {
        double sum = 0.0;
        for (const auto& [_, p] : *obs) sum += p;
        f.mean = sum / static_cast<double>(obs->size());
        f.first = obs->begin()->first;
        const auto last = obs->rbegin()->first;
        f.daily.resize(static_cast<std::size_t>(days_between(f.first, last)) + 1);
        double carry = f.mean;
        auto it = obs->begin();
        for (std::size_t d = 0; d < f.daily.size(); ++d) {
          if (it != obs->end() && it->first == add_days(f.first, static_cast<long long>(d))) {
            carry = it->second;
            ++it;
          }
          f.daily[d] = carry;
        }
      }
      filled_.push_back(std::move(f));
    }
  }

  const PriceSeries& series() const { return series_; }
  const CropCatalog& catalog() const { return catalog_; }

  /// Filled price of one calendar day.
  double daily_price(std::size_t crop, Date day) const {
    const auto& f = filled(crop);
    if (day < f.first) return f.mean;
    const auto offset = static_cast<std::size_t>(days_between(f.first, day));
    return offset < f.daily.size() ? f.daily[offset] : f.daily.back();
  }

  /// Mean filled price over timestep t's window of step_days days.
  double price_at(std::size_t crop, int t) const {
    const Date first = catalog_.date_of(t);
    double sum = 0.0;
    for (int d = 0; d < catalog_.step_days(); ++d) sum += daily_price(crop, add_days(first, d));
    return sum / catalog_.step_days();
  }
  double price_at(std::string_view crop_id, int t) const { return price_at(catalog_.index_of(crop_id), t); }

  double revenue(std::size_t crop, int t) const { return catalog_.crop(crop).yield_kg * price_at(crop, t); }
  double revenue(std::string_view crop_id, int t) const { return revenue(catalog_.index_of(crop_id), t); }

  /// True when the observed date range spans every day of timesteps
  /// [t_first, t_last].
  bool covers(int t_first, int t_last) const {
    const auto cov = series_.coverage();
    if (!cov) return false;
    return cov->first <= catalog_.date_of(t_first) && add_days(catalog_.date_of(t_last + 1), -1) <= cov->second;
  }

private:
  struct FilledCrop {
    Date first{};
    double mean = 0.0;
    std::vector<double> daily;
  };

  const FilledCrop& filled(std::size_t crop) const {
    const auto& f = filled_.at(crop);
    if (f.daily.empty())
      throw PriceDataError(fmt::format("no price data for crop '{}'", catalog_.crop(crop).id));
    return f;
  }

  PriceSeries series_;
  CropCatalog catalog_;
  std::vector<FilledCrop> filled_;
};

/// Single exponential smoothing. The level starts at the first observation;
/// the forecast is the final level repeated `horizon` times.
inline std::vector<double> ses_forecast(std::span<const double> history, double alpha, int horizon) {
  if (history.empty()) throw std::invalid_argument("ses_forecast: empty history");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("ses_forecast: alpha must be in (0, 1]");
  if (horizon < 1) throw std::invalid_argument("ses_forecast: horizon must be positive");
  double level = history.front();
  for (std::size_t i = 1; i < history.size(); ++i) level = alpha * history[i] + (1.0 - alpha) * level;
  return std::vector<double>(static_cast<std::size_t>(horizon), level);
}

struct SynthCrop {
  std::string id;
  double base = 1.0;
  double amplitude = 0.0;
  double noise = 0.0;  // standard deviation of the additive daily draw
};

struct SynthSpec {
  Date first{};
  Date last{};
  std::vector<SynthCrop> crops;

  void validate() const {
    if (last < first) throw std::invalid_argument("synth spec: end_date before start_date");
    for (const auto& c : crops) {
      if (!(c.base > 0.0)) throw std::invalid_argument(fmt::format("synth spec: crop '{}' needs base > 0", c.id));
      if (c.noise < 0.0) throw std::invalid_argument(fmt::format("synth spec: crop '{}' has negative noise", c.id));
    }
  }
};

inline SynthSpec parse_synth_spec(const nlohmann::json& doc) {
  SynthSpec spec;
  try {
    spec.first = parse_date(doc.at("start_date").get<std::string>());
    spec.last = parse_date(doc.at("end_date").get<std::string>());
    for (const auto& c : doc.at("crops"))
      spec.crops.push_back({c.at("id").get<std::string>(), c.at("base").get<double>(),
                            c.value("amplitude", 0.0), c.value("noise", 0.0)});
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(fmt::format("synth spec: {}", e.what()));
  }
  spec.validate();
  return spec;
}

inline SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(fmt::format("cannot open synth spec '{}'", path.string()));
  try {
    return parse_synth_spec(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(fmt::format("{}: {}", path.string(), e.what()));
  }
}

/// Daily prices base*(1 + amplitude*sin(2*pi*doy/365)) + N(0, noise), clamped
/// at 0. Each crop draws from its own stream seeded by (seed, crop position).
inline PriceSeries synth_prices(std::uint64_t seed, const SynthSpec& spec) {
  spec.validate();
  std::vector<PriceRow> rows;
  for (std::size_t i = 0; i < spec.crops.size(); ++i) {
    const auto& c = spec.crops[i];
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, c.noise > 0.0 ? c.noise : 1.0);
    for (Date d = spec.first; d <= spec.last; d = add_days(d, 1)) {
      const double phase = 2.0 * std::numbers::pi * day_of_year(d) / 365.0;
      double p = c.base * (1.0 + c.amplitude * std::sin(phase));
      if (c.noise > 0.0) p += noise(rng);
      rows.push_back({d, c.id, std::max(0.0, p), 0.0});
    }
  }
  return PriceSeries::from_rows(rows);
}

}  // namespace cropmdp
