#pragma once

#include <charconv>
#include <chrono>
#include <stdexcept>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace cropmdp {

using Date = std::chrono::sys_days;

/// Parses a strict ISO-8601 calendar date ("YYYY-MM-DD").
inline Date parse_date(std::string_view text) {
  auto fail = [&] {
    return std::invalid_argument(fmt::format("invalid date '{}', expected YYYY-MM-DD", text));
  };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
  int y = 0;
  unsigned m = 0, d = 0;
  auto field = [&](std::size_t pos, std::size_t len, auto& out) {
    auto first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    if (ec != std::errc{} || ptr != first + len) throw fail();
  };
  field(0, 4, y);
  field(5, 2, m);
  field(8, 2, d);
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw fail();
  return Date{ymd};
}

inline std::string format_date(Date date) {
  std::chrono::year_month_day ymd{date};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

/// Day of year in 1..365. February 29 maps to 59 and later days in a leap
/// year shift down by one, so every year has the same 365-day grid.
inline int day_of_year(Date date) {
  using namespace std::chrono;
  year_month_day ymd{date};
  int doy = static_cast<int>((date - sys_days{ymd.year() / January / 1}).count()) + 1;
  if (ymd.year().is_leap() && ymd.month() > February) --doy;
  if (ymd.month() == February && ymd.day() == day{29}) doy = 59;
  return doy;
}

inline Date add_days(Date date, long long n) { return date + std::chrono::days{n}; }

inline long long days_between(Date from, Date to) { return (to - from).count(); }

}  // namespace cropmdp
