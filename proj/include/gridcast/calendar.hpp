#pragma once

#include <cstdint>

// Minimal proleptic-Gregorian civil calendar over epoch seconds (UTC).
// Used to derive time-of-day slots, day-of-week, and calendar days for
// holiday lookup and per-day spam capping.

namespace gridcast {

struct CivilDate {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
};

constexpr std::int64_t kSecondsPerDay = 86400;

/// Floor division of epoch seconds into whole days.
constexpr std::int64_t days_from_seconds(std::int64_t ts) {
  return ts >= 0 ? ts / kSecondsPerDay : (ts - (kSecondsPerDay - 1)) / kSecondsPerDay;
}

constexpr std::int64_t seconds_of_day(std::int64_t ts) {
  return ts - days_from_seconds(ts) * kSecondsPerDay;
}

/// Days since 1970-01-01 -> civil date (Howard Hinnant's algorithm).
constexpr CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<int>(y + (m <= 2)), m, d};
}

/// Civil date -> days since 1970-01-01 (inverse of civil_from_days).
constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

/// Day of week with Monday = 0 .. Sunday = 6. 1970-01-01 was a Thursday.
constexpr int day_of_week(std::int64_t days) {
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

constexpr int day_of_week_seconds(std::int64_t ts) {
  return day_of_week(days_from_seconds(ts));
}

constexpr bool is_weekend(int dow) { return dow >= 5; }

}  // namespace gridcast
