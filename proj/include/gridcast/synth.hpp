#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gridcast/calendar.hpp"
#include "gridcast/common.hpp"
#include "gridcast/grid.hpp"
#include "gridcast/random.hpp"

// Synthetic demand with known planted structure, for tests and benchmarks:
//   periodic:  every region follows its cluster's daily profile with a
//              weekday/weekend multiplier;
//   spatial:   each cell's profile is augmented by kappa times the mean of
//              its 8 neighbors' profiles, and a slow multiplicative level
//              field is spatially smoothed the same way;
//   semantic:  regions belong to two clusters in a checkerboard, so regions
//              sharing a profile are mostly NOT adjacent — pattern similarity
//              and map distance are deliberately decoupled;
//   temporal:  the level field is AR(1) in time, so recent history carries
//              information a pure slot-average cannot see.
// Everything is a deterministic function of the seed.

namespace gridcast {

struct SynthConfig {
  int width = 10;
  int height = 10;
  int days = 35;
  int interval_minutes = 60;
  std::uint64_t seed = 1;
  double base_scale = 1.0;   // multiplies both clusters' demand amplitude
  double kappa = 0.3;        // neighbor-profile admixture
  double level_rho = 0.97;   // AR(1) coefficient of the level field
  double level_sd = 0.25;    // stationary std dev of the level field
  double noise_sd = 2.0;     // iid count noise
  std::int64_t start_time = days_from_civil(2015, 1, 5) * kSecondsPerDay;  // a Monday
};

/// What the generator planted, for tests that need the answer key.
struct SynthTruth {
  std::vector<int> cluster;              // per region, 0 or 1
  std::vector<std::int64_t> profile;     // [region][week_slot], noise-free demand
  int week_slots = 0;

  std::int64_t profile_at(int region, int week_slot) const {
    return profile[static_cast<std::size_t>(region) * week_slots + week_slot];
  }
};

namespace detail {

// Gaussian bump on the unit circle (wraps across midnight).
inline double day_bump(double u, double mu, double sd) {
  double d = u - mu;
  d -= std::floor(d + 0.5);
  return std::exp(-0.5 * d * d / (sd * sd));
}

// Cluster 0 reads as a business district: commute peaks, quiet weekends.
// Cluster 1 reads as residential: midday/evening activity, busy weekends.
inline double cluster_shape(int cluster, double u) {
  if (cluster == 0) {
    return 0.25 + 0.95 * day_bump(u, 8.5 / 24, 1.4 / 24) +
           1.05 * day_bump(u, 18.5 / 24, 1.8 / 24);
  }
  return 0.30 + 0.75 * day_bump(u, 12.5 / 24, 2.8 / 24) +
         0.55 * day_bump(u, 21.0 / 24, 1.8 / 24);
}

inline double weekend_mult(int cluster, bool weekend) {
  if (!weekend) return 1.0;
  return cluster == 0 ? 0.7 : 1.3;
}

inline double cluster_base(int cluster) { return cluster == 0 ? 64.0 : 46.0; }

// Mean over the (up to 8) in-grid neighbors of cell (x, y).
template <typename Get>
double neighbor_mean(int x, int y, int width, int height, Get get) {
  double sum = 0.0;
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
      sum += get(ny * width + nx);
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

}  // namespace detail

inline std::pair<DemandGrid, SynthTruth> synth_generate(const SynthConfig& cfg) {
  GridSpec spec;
  spec.bbox = {30.0, 30.0 + 0.01 * cfg.height, 120.0, 120.0 + 0.01 * cfg.width};
  spec.width = cfg.width;
  spec.height = cfg.height;
  spec.interval_minutes = cfg.interval_minutes;
  spec.validate();
  if (cfg.days < 1) throw ConfigError("synth: days must be >= 1");

  const int N = spec.num_regions();
  const int ipd = spec.intervals_per_day();
  const int week_slots = 7 * ipd;
  const int T = cfg.days * ipd;

  SynthTruth truth;
  truth.week_slots = week_slots;
  truth.cluster.resize(static_cast<std::size_t>(N));
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      truth.cluster[static_cast<std::size_t>(y) * cfg.width + x] = (x + y) % 2;
    }
  }

  // Noise-free integral profile per (region, week slot), before neighbor mixing.
  truth.profile.resize(static_cast<std::size_t>(N) * week_slots);
  for (int i = 0; i < N; ++i) {
    const int c = truth.cluster[static_cast<std::size_t>(i)];
    for (int ws = 0; ws < week_slots; ++ws) {
      const int dow = ws / ipd;
      const double u = static_cast<double>(ws % ipd) / ipd;
      const double v = cfg.base_scale * detail::cluster_base(c) *
                       detail::cluster_shape(c, u) *
                       detail::weekend_mult(c, is_weekend(dow));
      truth.profile[static_cast<std::size_t>(i) * week_slots + ws] = std::llround(v);
    }
  }

  // Spatially mixed profile: own + kappa * mean of 8-neighbor profiles.
  std::vector<double> mixed(static_cast<std::size_t>(N) * week_slots);
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) {
      const int i = y * cfg.width + x;
      for (int ws = 0; ws < week_slots; ++ws) {
        const double nb = detail::neighbor_mean(
            x, y, cfg.width, cfg.height,
            [&](int j) { return static_cast<double>(truth.profile_at(j, ws)); });
        mixed[static_cast<std::size_t>(i) * week_slots + ws] =
            static_cast<double>(truth.profile_at(i, ws)) + cfg.kappa * nb;
      }
    }
  }

  DemandGrid grid;
  grid.spec = spec;
  grid.start_time = cfg.start_time;
  grid.num_intervals = T;
  grid.counts.assign(static_cast<std::size_t>(T) * N, 0);

  Rng rng(cfg.seed);
  Rng level_rng = rng.fork(1);
  Rng noise_rng = rng.fork(2);

  std::vector<double> level(static_cast<std::size_t>(N), 0.0);
  std::vector<double> smooth(static_cast<std::size_t>(N), 0.0);
  const double innovation_sd =
      cfg.level_sd * std::sqrt(std::max(0.0, 1.0 - cfg.level_rho * cfg.level_rho));
  for (int i = 0; i < N; ++i) level[static_cast<std::size_t>(i)] = cfg.level_sd * level_rng.normal();

  const std::int64_t start_day_offset =
      seconds_of_day(cfg.start_time) / spec.interval_seconds();
  const int start_dow = day_of_week_seconds(cfg.start_time);

  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      for (int i = 0; i < N; ++i) {
        level[static_cast<std::size_t>(i)] =
            cfg.level_rho * level[static_cast<std::size_t>(i)] +
            innovation_sd * level_rng.normal();
      }
    }
    for (int y = 0; y < cfg.height; ++y) {
      for (int x = 0; x < cfg.width; ++x) {
        const int i = y * cfg.width + x;
        const double nb = detail::neighbor_mean(
            x, y, cfg.width, cfg.height,
            [&](int j) { return level[static_cast<std::size_t>(j)]; });
        smooth[static_cast<std::size_t>(i)] =
            0.5 * level[static_cast<std::size_t>(i)] + 0.5 * nb;
      }
    }
    const std::int64_t abs_slot = start_day_offset + t;
    const int ws = static_cast<int>(
        ((start_dow * ipd + abs_slot) % week_slots + week_slots) % week_slots);
    for (int i = 0; i < N; ++i) {
      const double base = mixed[static_cast<std::size_t>(i) * week_slots + ws];
      const double noisy = base * (1.0 + smooth[static_cast<std::size_t>(i)]) +
                           cfg.noise_sd * noise_rng.normal();
      grid.count(t, i) = std::max<std::int64_t>(0, std::llround(noisy));
    }
  }
  return {std::move(grid), std::move(truth)};
}

/// Expands a demand grid back into individual requests (unique user per
/// request, timestamps inside the owning interval, coordinates at the cell
/// center) so the ingestion path can be exercised end to end.
inline std::vector<TaxiRequest> synth_requests(const DemandGrid& grid) {
  std::vector<TaxiRequest> out;
  out.reserve(static_cast<std::size_t>(grid.total()));
  const std::int64_t isec = grid.spec.interval_seconds();
  for (int t = 0; t < grid.num_intervals; ++t) {
    const std::int64_t t0 = grid.start_time + static_cast<std::int64_t>(t) * isec;
    for (int i = 0; i < grid.spec.num_regions(); ++i) {
      const std::int64_t c = grid.count(t, i);
      for (std::int64_t k = 0; k < c; ++k) {
        TaxiRequest r;
        r.timestamp = t0 + (k * 7919 + 13) % isec;
        r.lat = grid.spec.center_lat(i);
        r.lng = grid.spec.center_lng(i);
        r.user_id = "u" + std::to_string(t) + "_" + std::to_string(i) + "_" +
                    std::to_string(k);
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

}  // namespace gridcast
