#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/calendar.hpp"
#include "gridcast/common.hpp"
#include "gridcast/features.hpp"
#include "gridcast/grid.hpp"

// Training samples: one per (region, end interval) pair whose next-interval
// target clears the demand threshold. Patches and context rows are sliced
// out of the shared grid/context tables at batch-assembly time, so a Sample
// itself stays tiny.

namespace gridcast {

struct Sample {
  int region = 0;
  int end_t = 0;            // last history interval; target is end_t + 1
  double target_norm = 0.0;
  double target_raw = 0.0;
  int target_dow = 0;       // day-of-week of the target interval, Monday = 0
};

/// Shared, read-only inputs every sample slices from.
struct SampleTable {
  GridSpec spec;
  std::int64_t start_time = 0;
  int num_intervals = 0;
  int history = 0;  // h: steps per sequence
  std::vector<double> grid_norm;  // [interval][region], normalized demand
  ContextFeatures context;
  std::vector<Sample> samples;

  double demand(int t, int region) const {
    return grid_norm[static_cast<std::size_t>(t) * spec.num_regions() + region];
  }
};

/// Enumerates samples with end interval t in [h, T-2] (the target t+1 must
/// exist), keeping those whose raw target demand meets the threshold.
inline SampleTable build_samples(const DemandGrid& grid, const Normalizer& norm,
                                 ContextFeatures context, int history,
                                 std::int64_t threshold = 10) {
  if (history < 1) throw ConfigError("build_samples: history must be >= 1");
  const int T = grid.num_intervals;
  if (history >= T - 1 + 1) {
    throw DataError("build_samples: history " + std::to_string(history) +
                    " needs more than " + std::to_string(T) + " intervals");
  }
  if (context.num_intervals != T || context.num_regions != grid.spec.num_regions()) {
    throw ShapeError("build_samples: context table does not match grid");
  }
  SampleTable table;
  table.spec = grid.spec;
  table.start_time = grid.start_time;
  table.num_intervals = T;
  table.history = history;
  table.grid_norm = normalize_grid(grid, norm);
  table.context = std::move(context);
  const int N = grid.spec.num_regions();
  const std::int64_t isec = grid.spec.interval_seconds();
  for (int t = history; t + 1 < T; ++t) {
    const std::int64_t target_ts = grid.start_time + static_cast<std::int64_t>(t + 1) * isec;
    const int dow = day_of_week_seconds(target_ts);
    for (int i = 0; i < N; ++i) {
      const std::int64_t raw = grid.count(t + 1, i);
      if (raw < threshold) continue;
      Sample s;
      s.region = i;
      s.end_t = t;
      s.target_raw = static_cast<double>(raw);
      s.target_norm = table.demand(t + 1, i);
      s.target_dow = dow;
      table.samples.push_back(s);
    }
  }
  return table;
}

/// First 90% of time-ordered samples train, the rest validate. Samples whose
/// end interval ties the boundary go to validation, so no validation sample
/// shares an end interval with (or precedes) any training sample.
inline std::pair<std::vector<Sample>, std::vector<Sample>> split_train_val(
    std::vector<Sample> samples, double train_fraction = 0.9) {
  if (samples.size() < 10) {
    throw DataError("split_train_val: need at least 10 samples, have " +
                    std::to_string(samples.size()));
  }
  std::stable_sort(samples.begin(), samples.end(),
                   [](const Sample& a, const Sample& b) { return a.end_t < b.end_t; });
  std::size_t cut = static_cast<std::size_t>(
      static_cast<double>(samples.size()) * train_fraction);
  cut = std::min(cut, samples.size() - 1);
  const int boundary_t = samples[cut].end_t;
  while (cut > 0 && samples[cut - 1].end_t == boundary_t) --cut;
  std::vector<Sample> train(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(cut));
  std::vector<Sample> val(samples.begin() + static_cast<std::ptrdiff_t>(cut), samples.end());
  if (train.empty() || val.empty()) {
    throw DataError("split_train_val: split leaves an empty side (all samples share " +
                    std::string(train.empty() ? "the first" : "the last") +
                    " interval)");
  }
  return {std::move(train), std::move(val)};
}

}  // namespace gridcast
