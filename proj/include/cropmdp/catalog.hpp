#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "cropmdp/dates.hpp"

namespace cropmdp {

struct CatalogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inclusive day-of-year interval. start > end wraps through New Year.
struct SeasonWindow {
  int start_day = 1;
  int end_day = 365;

  bool contains(int doy) const {
    return start_day <= end_day ? (doy >= start_day && doy <= end_day)
                                : (doy >= start_day || doy <= end_day);
  }
  friend bool operator==(const SeasonWindow&, const SeasonWindow&) = default;
};

/// Agronomic parameters of one crop. Durations are in timesteps.
struct CropSpec {
  std::string id;
  std::string family;
  int max_maturity = 1;
  int lifespan = 1;
  bool repeat_harvest = false;
  std::optional<int> harvest_frequency;
  double yield_kg = 0.0;
  std::vector<SeasonWindow> season_windows;

  friend bool operator==(const CropSpec&, const CropSpec&) = default;
};

inline int days_to_steps(int days, int step_days) { return (days + step_days - 1) / step_days; }

/// Throws CatalogError naming the crop and the violated rule.
inline void validate_crop(const CropSpec& c) {
  auto fail = [&](std::string_view rule) {
    return CatalogError(fmt::format("crop '{}': violates {}", c.id, rule));
  };
  if (c.id.empty()) throw CatalogError("crop with empty id");
  if (c.max_maturity < 1) throw fail("max_maturity >= 1");
  if (c.lifespan < 1) throw fail("lifespan >= 1");
  if (c.max_maturity > c.lifespan)
    throw fail(fmt::format("max_maturity <= lifespan ({} > {})", c.max_maturity, c.lifespan));
  if (c.repeat_harvest != c.harvest_frequency.has_value())
    throw fail("harvest_frequency present iff repeat_harvest");
  if (c.repeat_harvest && (*c.harvest_frequency < 1 || *c.harvest_frequency >= c.max_maturity))
    throw fail(fmt::format("1 <= harvest_frequency < max_maturity ({} vs {})", *c.harvest_frequency,
                           c.max_maturity));
  if (!(c.yield_kg > 0.0)) throw fail("yield_kg > 0");
  if (c.season_windows.empty()) throw fail("season_windows non-empty");
  for (const auto& w : c.season_windows) {
    if (w.start_day < 1 || w.start_day > 365 || w.end_day < 1 || w.end_day > 365)
      throw fail(fmt::format("season window days in 1..365 ([{}, {}])", w.start_day, w.end_day));
  }
}

/// The crop set together with the timestep-to-calendar mapping. Immutable
/// once constructed; crop order fixes the state and action index layout.
class CropCatalog {
public:
  CropCatalog(std::vector<CropSpec> crops, Date start_date, int step_days)
      : crops_(std::move(crops)), start_date_(start_date), step_days_(step_days) {
    if (step_days_ < 1) throw CatalogError("step_days must be >= 1");
    if (crops_.empty()) throw CatalogError("catalog has no crops");
    for (std::size_t i = 0; i < crops_.size(); ++i) {
      validate_crop(crops_[i]);
      for (std::size_t j = 0; j < i; ++j)
        if (crops_[j].id == crops_[i].id)
          throw CatalogError(fmt::format("duplicate crop id '{}'", crops_[i].id));
    }
  }

  const std::vector<CropSpec>& crops() const { return crops_; }
  std::size_t size() const { return crops_.size(); }
  const CropSpec& crop(std::size_t i) const { return crops_.at(i); }
  Date start_date() const { return start_date_; }
  int step_days() const { return step_days_; }

  std::size_t index_of(std::string_view id) const {
    for (std::size_t i = 0; i < crops_.size(); ++i)
      if (crops_[i].id == id) return i;
    throw CatalogError(fmt::format("unknown crop id '{}'", id));
  }

  /// First calendar day of timestep t (t may be negative).
  Date date_of(int t) const { return add_days(start_date_, static_cast<long long>(t) * step_days_); }

  int max_maturity() const {
    int m = 0;
    for (const auto& c : crops_) m = std::max(m, c.max_maturity);
    return m;
  }
  int max_lifespan() const {
    int l = 0;
    for (const auto& c : crops_) l = std::max(l, c.lifespan);
    return l;
  }

  friend bool operator==(const CropCatalog&, const CropCatalog&) = default;

private:
  std::vector<CropSpec> crops_;
  Date start_date_;
  int step_days_;
};

inline bool in_season(const CropCatalog& catalog, std::size_t crop, int t) {
  const int doy = day_of_year(catalog.date_of(t));
  const auto& windows = catalog.crop(crop).season_windows;
  return std::any_of(windows.begin(), windows.end(),
                     [doy](const SeasonWindow& w) { return w.contains(doy); });
}

inline bool in_season(const CropCatalog& catalog, std::string_view crop_id, int t) {
  return in_season(catalog, catalog.index_of(crop_id), t);
}

/// True iff a crop planted at t_plant stays in season through
/// t_plant + max_maturity.
inline bool harvestable_within_season(const CropCatalog& catalog, std::size_t crop, int t_plant) {
  const int last = t_plant + catalog.crop(crop).max_maturity;
  for (int t = t_plant; t <= last; ++t)
    if (!in_season(catalog, crop, t)) return false;
  return true;
}

inline bool harvestable_within_season(const CropCatalog& catalog, std::string_view crop_id,
                                      int t_plant) {
  return harvestable_within_season(catalog, catalog.index_of(crop_id), t_plant);
}

namespace detail {

inline std::string line_context(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return fmt::format("line {}, column {}", line, col);
}

template <typename T>
T required(const nlohmann::json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) throw CatalogError(fmt::format("{}: missing field '{}'", where, key));
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw CatalogError(fmt::format("{}: field '{}': {}", where, key, e.what()));
  }
}

}  // namespace detail

/// Parses catalog text. Durations in the file are day counts and are converted
/// to timesteps by ceiling division. `step_days_override` replaces the file's
/// step_days before conversion.
inline CropCatalog parse_catalog(std::string_view text, std::optional<int> step_days_override = {}) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CatalogError(fmt::format("catalog parse error at {}: {}",
                                   detail::line_context(text, e.byte == 0 ? 0 : e.byte - 1),
                                   e.what()));
  }
  if (!doc.is_object()) throw CatalogError("catalog: top level must be an object");

  const int step_days = step_days_override.value_or(detail::required<int>(doc, "step_days", "catalog"));
  if (step_days < 1) throw CatalogError("catalog: step_days must be >= 1");
  Date start;
  try {
    start = parse_date(detail::required<std::string>(doc, "start_date", "catalog"));
  } catch (const std::invalid_argument& e) {
    throw CatalogError(fmt::format("catalog: field 'start_date': {}", e.what()));
  }

  if (!doc.contains("crops") || !doc["crops"].is_array())
    throw CatalogError("catalog: field 'crops' must be an array");

  std::vector<CropSpec> crops;
  std::size_t n = 0;
  for (const auto& rec : doc["crops"]) {
    std::string where = fmt::format("crop #{}", n++);
    if (!rec.is_object()) throw CatalogError(where + ": record must be an object");
    CropSpec c;
    c.id = detail::required<std::string>(rec, "id", where);
    where = fmt::format("crop '{}'", c.id);
    c.family = detail::required<std::string>(rec, "family", where);
    const int maturity_days = detail::required<int>(rec, "maturity_days", where);
    const int lifespan_days = detail::required<int>(rec, "lifespan_days", where);
    if (maturity_days < 1 || lifespan_days < 1)
      throw CatalogError(where + ": maturity_days and lifespan_days must be positive");
    c.max_maturity = days_to_steps(maturity_days, step_days);
    c.lifespan = days_to_steps(lifespan_days, step_days);
    c.repeat_harvest = detail::required<bool>(rec, "repeat_harvest", where);
    if (rec.contains("harvest_frequency_days")) {
      const int hf_days = detail::required<int>(rec, "harvest_frequency_days", where);
      if (hf_days < 1) throw CatalogError(where + ": harvest_frequency_days must be positive");
      c.harvest_frequency = days_to_steps(hf_days, step_days);
    }
    c.yield_kg = detail::required<double>(rec, "yield_kg", where);
    for (const auto& w : detail::required<std::vector<std::vector<int>>>(rec, "season_windows", where)) {
      if (w.size() != 2) throw CatalogError(where + ": season window must be [start_day, end_day]");
      c.season_windows.push_back({w[0], w[1]});
    }
    validate_crop(c);
    crops.push_back(std::move(c));
  }
  return CropCatalog(std::move(crops), start, step_days);
}

inline CropCatalog load_catalog(const std::filesystem::path& path,
                                std::optional<int> step_days_override = {}) {
  std::ifstream in(path);
  if (!in) throw CatalogError(fmt::format("cannot open catalog '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_catalog(buf.str(), step_days_override);
  } catch (const CatalogError& e) {
    throw CatalogError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

/// Serializes with day-denominated durations (steps * step_days), which
/// parse_catalog maps back to the same step counts.
inline std::string write_catalog(const CropCatalog& catalog) {
  nlohmann::json doc;
  doc["start_date"] = format_date(catalog.start_date());
  doc["step_days"] = catalog.step_days();
  auto crops = nlohmann::json::array();
  for (const auto& c : catalog.crops()) {
    nlohmann::json rec;
    rec["id"] = c.id;
    rec["family"] = c.family;
    rec["maturity_days"] = c.max_maturity * catalog.step_days();
    rec["lifespan_days"] = c.lifespan * catalog.step_days();
    rec["repeat_harvest"] = c.repeat_harvest;
    if (c.harvest_frequency) rec["harvest_frequency_days"] = *c.harvest_frequency * catalog.step_days();
    rec["yield_kg"] = c.yield_kg;
    auto windows = nlohmann::json::array();
    for (const auto& w : c.season_windows) windows.push_back({w.start_day, w.end_day});
    rec["season_windows"] = windows;
    crops.push_back(rec);
  }
  doc["crops"] = crops;
  return doc.dump(2) + "\n";
}

}  // namespace cropmdp
