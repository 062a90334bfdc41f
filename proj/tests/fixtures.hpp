#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cropmdp/catalog.hpp"
#include "cropmdp/market.hpp"

namespace cropmdp::fixtures {

inline std::string data_path(const std::string& name) { return std::string(CROPMDP_DATA_DIR) + "/" + name; }

/// Two year-round crops: alpha (single harvest, M=3, L=4, 100 kg) and bravo
/// (repeat every step, M=2, L=4, 40 kg). Same layout as catalog_desk2.json.
inline CropCatalog desk_catalog(std::vector<SeasonWindow> alpha_season = {{1, 365}},
                                std::vector<SeasonWindow> bravo_season = {{1, 365}}) {
  std::vector<CropSpec> crops{
      {"alpha", "f1", 3, 4, false, std::nullopt, 100.0, alpha_season},
      {"bravo", "f2", 2, 4, true, 1, 40.0, bravo_season},
  };
  return CropCatalog(std::move(crops), parse_date("2022-01-01"), 14);
}

/// Fixed per-kg price per crop, independent of t.
struct ConstantRevenue {
  std::vector<double> yields;
  std::vector<double> prices;
  double revenue(std::size_t crop, int) const { return yields.at(crop) * prices.at(crop); }
};

inline ConstantRevenue constant_revenue(const CropCatalog& c, std::vector<double> prices) {
  ConstantRevenue r;
  for (const auto& s : c.crops()) r.yields.push_back(s.yield_kg);
  r.prices = std::move(prices);
  return r;
}

/// Per-(crop, t) price table for t in [0, prices[c].size()).
struct TableRevenue {
  std::vector<double> yields;
  std::vector<std::vector<double>> prices;
  double revenue(std::size_t crop, int t) const { return yields.at(crop) * prices.at(crop).at(static_cast<std::size_t>(t)); }
};

/// Daily series with the given constant price per crop over [first, last].
inline PriceSeries constant_series(const CropCatalog& c, const std::vector<double>& prices, const std::string& first,
                                   const std::string& last) {
  std::vector<PriceRow> rows;
  for (Date d = parse_date(first); d <= parse_date(last); d = add_days(d, 1))
    for (std::size_t i = 0; i < c.size(); ++i) rows.push_back({d, c.crop(i).id, prices.at(i), 0.0});
  return PriceSeries::from_rows(rows);
}

}  // namespace cropmdp::fixtures
