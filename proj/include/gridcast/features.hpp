#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gridcast/calendar.hpp"
#include "gridcast/common.hpp"
#include "gridcast/grid.hpp"

// Demand normalization and per-(region, interval) context vectors.

namespace gridcast {

/// Max-Min affine map fit on training data. Values outside the fit range map
/// outside [0,1] on purpose — no clamping — so denormalized errors stay honest.
struct Normalizer {
  double min = 0.0;
  double max = 1.0;

  double normalize(double x) const { return (x - min) / (max - min); }
  double denormalize(double z) const { return z * (max - min) + min; }
};

template <typename It>
Normalizer fit_normalizer(It begin, It end) {
  if (begin == end) throw DataError("fit_normalizer: no values");
  double lo = static_cast<double>(*begin), hi = lo;
  for (It it = begin; it != end; ++it) {
    const double v = static_cast<double>(*it);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) {
    throw DataError("fit_normalizer: degenerate range, min == max == " +
                    std::to_string(lo));
  }
  return Normalizer{lo, hi};
}

inline Normalizer fit_normalizer(const std::vector<std::int64_t>& values) {
  return fit_normalizer(values.begin(), values.end());
}

/// Demand grid mapped through the normalizer, same [interval][region] layout.
inline std::vector<double> normalize_grid(const DemandGrid& grid,
                                          const Normalizer& norm) {
  std::vector<double> out(grid.counts.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = norm.normalize(static_cast<double>(grid.counts[i]));
  }
  return out;
}

/// Optional per-interval weather codes (one-hot block of width num_codes).
struct WeatherSeries {
  int num_codes = 0;
  std::vector<int> code_per_interval;  // empty => no weather block
};

/// Calendar days (days since epoch) that count as holidays.
using HolidaySet = std::set<std::int64_t>;

/// Context vectors e_t^i, shape [num_intervals][num_regions][dim], laid out
/// as one flat row-major array. Block layout, in order:
///   [0]                      mean demand of the last 4 intervals, normalized
///   [1 .. tod]               time-of-day one-hot (1440 / interval_minutes)
///   [.. +7]                  day-of-week one-hot, Monday first
///   [.. +2]                  region center lat, lng scaled to [0,1]
///   [.. +weather]            weather-condition one-hot (width 0 if absent)
///   [.. +1]                  holiday flag
struct ContextFeatures {
  int num_intervals = 0;
  int num_regions = 0;
  int dim = 0;
  int tod_width = 0;
  int weather_width = 0;
  std::vector<double> data;

  const double* row(int t, int region) const {
    return data.data() +
           (static_cast<std::size_t>(t) * num_regions + region) * dim;
  }
};

/// Builds the full context table. The last-4 mean uses however many earlier
/// intervals exist (0 at t=0), so rows are defined for every interval even
/// before a full 4-step history has accumulated.
inline ContextFeatures build_context(const DemandGrid& grid, const Normalizer& norm,
                                     const WeatherSeries& weather = {},
                                     const HolidaySet& holidays = {}) {
  grid.spec.validate();
  const int T = grid.num_intervals;
  const int N = grid.spec.num_regions();
  const int tod = grid.spec.intervals_per_day();
  if (!weather.code_per_interval.empty() &&
      static_cast<int>(weather.code_per_interval.size()) != T) {
    throw DataError("build_context: weather series covers " +
                    std::to_string(weather.code_per_interval.size()) +
                    " intervals, grid has " + std::to_string(T));
  }
  const int w = weather.code_per_interval.empty() ? 0 : weather.num_codes;

  ContextFeatures ctx;
  ctx.num_intervals = T;
  ctx.num_regions = N;
  ctx.tod_width = tod;
  ctx.weather_width = w;
  ctx.dim = 1 + tod + 7 + 2 + w + 1;
  ctx.data.assign(static_cast<std::size_t>(T) * N * ctx.dim, 0.0);

  const std::int64_t isec = grid.spec.interval_seconds();
  const double lat_span = grid.spec.bbox.lat_max - grid.spec.bbox.lat_min;
  const double lng_span = grid.spec.bbox.lng_max - grid.spec.bbox.lng_min;
  for (int t = 0; t < T; ++t) {
    const std::int64_t ts = grid.start_time + static_cast<std::int64_t>(t) * isec;
    const int tod_slot = static_cast<int>((seconds_of_day(ts) / isec) % tod);
    const std::int64_t day = days_from_seconds(ts);
    const int dow = day_of_week(day);
    const bool holiday = holidays.count(day) > 0;
    const int wcode = w > 0 ? weather.code_per_interval[static_cast<std::size_t>(t)] : -1;
    if (w > 0 && (wcode < 0 || wcode >= w)) {
      throw DataError("build_context: weather code " + std::to_string(wcode) +
                      " outside [0, " + std::to_string(w) + ") at interval " +
                      std::to_string(t));
    }
    for (int i = 0; i < N; ++i) {
      double* row = ctx.data.data() + (static_cast<std::size_t>(t) * N + i) * ctx.dim;
      double mean4 = 0.0;
      const int back = std::min(t, 4);
      for (int k = 1; k <= back; ++k) mean4 += static_cast<double>(grid.count(t - k, i));
      if (back > 0) mean4 /= back;
      row[0] = norm.normalize(mean4);
      row[1 + tod_slot] = 1.0;
      row[1 + tod + dow] = 1.0;
      row[1 + tod + 7 + 0] = (grid.spec.center_lat(i) - grid.spec.bbox.lat_min) / lat_span;
      row[1 + tod + 7 + 1] = (grid.spec.center_lng(i) - grid.spec.bbox.lng_min) / lng_span;
      if (w > 0) row[1 + tod + 7 + 2 + wcode] = 1.0;
      row[ctx.dim - 1] = holiday ? 1.0 : 0.0;
    }
  }
  return ctx;
}

}  // namespace gridcast
