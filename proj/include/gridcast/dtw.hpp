#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gridcast/calendar.hpp"
#include "gridcast/common.hpp"
#include "gridcast/grid.hpp"

// Average weekly demand patterns and the dynamic-time-warping distance
// between them.

namespace gridcast {

/// Classic DTW: minimum cumulative |x_a - y_b| over monotone alignment paths
/// stepping diagonal/up/left, no normalization. `band` > 0 applies a
/// Sakoe-Chiba window of that half-width (widened to the minimum feasible
/// |n - m|); 0 means unconstrained.
inline double dtw_distance(std::span<const double> x, std::span<const double> y,
                           int band = 0) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(y.size());
  if (n == 0 || m == 0) throw DataError("dtw_distance: empty series");
  const double inf = std::numeric_limits<double>::infinity();
  int w = band > 0 ? std::max(band, std::abs(n - m)) : std::max(n, m);
  std::vector<double> prev(static_cast<std::size_t>(m) + 1, inf);
  std::vector<double> cur(static_cast<std::size_t>(m) + 1, inf);
  prev[0] = 0.0;
  for (int a = 1; a <= n; ++a) {
    std::fill(cur.begin(), cur.end(), inf);
    const int lo = std::max(1, a - w);
    const int hi = std::min(m, a + w);
    for (int b = lo; b <= hi; ++b) {
      const double cost = std::fabs(x[static_cast<std::size_t>(a - 1)] -
                                    y[static_cast<std::size_t>(b - 1)]);
      const double best = std::min({prev[static_cast<std::size_t>(b - 1)],
                                    prev[static_cast<std::size_t>(b)],
                                    cur[static_cast<std::size_t>(b - 1)]});
      cur[static_cast<std::size_t>(b)] = cost + best;
    }
    std::swap(prev, cur);
  }
  return prev[static_cast<std::size_t>(m)];
}

/// Per-region mean demand at each of the 7·intervals_per_day weekly slots.
/// `values` is [T][N] row-major; `start_slot` is the weekly slot of interval
/// 0 (0 = Monday 00:00). Slot p averages every interval congruent to p.
inline std::vector<std::vector<double>> weekly_patterns(
    const std::vector<double>& values, int num_intervals, int num_regions,
    int week_slots, int start_slot) {
  if (num_intervals < week_slots) {
    throw DataError("weekly_patterns: " + std::to_string(num_intervals) +
                    " intervals span less than one week (" +
                    std::to_string(week_slots) + " slots)");
  }
  std::vector<std::vector<double>> patterns(
      static_cast<std::size_t>(num_regions),
      std::vector<double>(static_cast<std::size_t>(week_slots), 0.0));
  std::vector<int> hits(static_cast<std::size_t>(week_slots), 0);
  for (int t = 0; t < num_intervals; ++t) {
    const int slot = static_cast<int>(
        ((static_cast<std::int64_t>(start_slot) + t) % week_slots + week_slots) %
        week_slots);
    ++hits[static_cast<std::size_t>(slot)];
    const double* row = values.data() + static_cast<std::size_t>(t) * num_regions;
    for (int i = 0; i < num_regions; ++i) {
      patterns[static_cast<std::size_t>(i)][static_cast<std::size_t>(slot)] += row[i];
    }
  }
  for (int i = 0; i < num_regions; ++i) {
    for (int p = 0; p < week_slots; ++p) {
      patterns[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] /=
          static_cast<double>(hits[static_cast<std::size_t>(p)]);
    }
  }
  return patterns;
}

/// Weekly slot of a timestamp: dow * intervals_per_day + slot_of_day.
inline int week_slot_of(std::int64_t ts, std::int64_t interval_seconds,
                        int intervals_per_day) {
  const int dow = day_of_week_seconds(ts);
  const int slot = static_cast<int>(seconds_of_day(ts) / interval_seconds);
  return dow * intervals_per_day + slot;
}

/// Weekly patterns of a raw count grid (typically a training-range slice).
inline std::vector<std::vector<double>> weekly_patterns(const DemandGrid& grid,
                                                        int num_intervals = -1) {
  const int T = num_intervals < 0 ? grid.num_intervals : num_intervals;
  const int ipd = grid.spec.intervals_per_day();
  std::vector<double> values(grid.counts.begin(),
                             grid.counts.begin() +
                                 static_cast<std::ptrdiff_t>(T) * grid.spec.num_regions());
  return weekly_patterns(values, T, grid.spec.num_regions(), 7 * ipd,
                         week_slot_of(grid.start_time, grid.spec.interval_seconds(), ipd));
}

}  // namespace gridcast
