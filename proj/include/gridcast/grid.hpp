#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "gridcast/calendar.hpp"
#include "gridcast/common.hpp"

// Raw trip-record ingestion: bounding-box parsing, duplicate/spam filtering,
// and aggregation into a per-interval, per-cell demand count grid.

namespace gridcast {

struct BoundingBox {
  double lat_min = 0.0;
  double lat_max = 1.0;
  double lng_min = 0.0;
  double lng_max = 1.0;

  bool contains(double lat, double lng) const {
    return lat >= lat_min && lat <= lat_max && lng >= lng_min && lng <= lng_max;
  }
};

/// One taxi request: when, where, who.
struct TaxiRequest {
  std::int64_t timestamp = 0;  // epoch seconds
  double lat = 0.0;
  double lng = 0.0;
  std::string user_id;
};

/// Uniform spatial partition of a bounding box plus the time discretization.
struct GridSpec {
  BoundingBox bbox;
  int width = 20;   // lng bins
  int height = 20;  // lat bins
  int interval_minutes = 30;

  void validate() const {
    if (width < 1 || height < 1) {
      throw ConfigError("grid: width and height must be >= 1");
    }
    if (interval_minutes < 1 || 1440 % interval_minutes != 0) {
      throw ConfigError("grid: interval_minutes must divide 1440, got " +
                        std::to_string(interval_minutes));
    }
    if (!(bbox.lat_max > bbox.lat_min) || !(bbox.lng_max > bbox.lng_min)) {
      throw ConfigError("grid: bounding box is empty");
    }
  }

  int num_regions() const { return width * height; }
  std::int64_t interval_seconds() const {
    return static_cast<std::int64_t>(interval_minutes) * 60;
  }
  int intervals_per_day() const { return 1440 / interval_minutes; }

  /// Half-open binning; points on the upper boundary fold into the last cell.
  int cell_x(double lng) const {
    int x = static_cast<int>((lng - bbox.lng_min) / (bbox.lng_max - bbox.lng_min) * width);
    return std::min(std::max(x, 0), width - 1);
  }
  int cell_y(double lat) const {
    int y = static_cast<int>((lat - bbox.lat_min) / (bbox.lat_max - bbox.lat_min) * height);
    return std::min(std::max(y, 0), height - 1);
  }
  int region_of(double lat, double lng) const {
    return cell_y(lat) * width + cell_x(lng);
  }
  double center_lat(int region) const {
    const int y = region / width;
    return bbox.lat_min + (y + 0.5) * (bbox.lat_max - bbox.lat_min) / height;
  }
  double center_lng(int region) const {
    const int x = region % width;
    return bbox.lng_min + (x + 0.5) * (bbox.lng_max - bbox.lng_min) / width;
  }
};

struct ParseReport {
  std::int64_t accepted = 0;
  std::int64_t malformed = 0;
  std::int64_t out_of_bounds = 0;
};

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_int64(std::string_view s, std::int64_t& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

/// Reads `timestamp,lat,lng,user_id` CSV rows. Malformed rows and rows
/// outside the bounding box are counted and skipped; a stream where more
/// than half the data rows are malformed is rejected outright.
inline std::vector<TaxiRequest> parse_requests(std::istream& in,
                                               const BoundingBox& bbox,
                                               ParseReport& report) {
  if (!in) throw DataError("parse_requests: unreadable source");
  std::vector<TaxiRequest> out;
  std::string line;
  bool first = true;
  std::int64_t data_rows = 0;
  while (std::getline(in, line)) {
    std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    if (first) {
      first = false;
      if (sv.rfind("timestamp", 0) == 0) continue;  // header
    }
    ++data_rows;
    auto fields = detail::split_csv(sv);
    TaxiRequest req;
    if (fields.size() != 4 || !detail::parse_int64(fields[0], req.timestamp) ||
        !detail::parse_double(fields[1], req.lat) ||
        !detail::parse_double(fields[2], req.lng) || fields[3].empty()) {
      ++report.malformed;
      continue;
    }
    if (!bbox.contains(req.lat, req.lng)) {
      ++report.out_of_bounds;
      continue;
    }
    req.user_id = std::string(fields[3]);
    out.push_back(std::move(req));
  }
  if (data_rows > 0 && report.malformed * 2 > data_rows) {
    throw DataError("parse_requests: " + std::to_string(report.malformed) + " of " +
                    std::to_string(data_rows) + " rows malformed");
  }
  report.accepted = static_cast<std::int64_t>(out.size());
  return out;
}

/// Drops duplicate requests — same (user, interval, cell) — and removes every
/// request of a user on any calendar day where that user's raw request count
/// exceeds the spam cap. The cap is judged on raw counts, before dedup, so a
/// flood of identical requests still marks its sender as a spammer.
inline std::vector<TaxiRequest> dedup_filter(const std::vector<TaxiRequest>& requests,
                                             const GridSpec& spec,
                                             int per_day_cap = 100) {
  std::map<std::pair<std::string_view, std::int64_t>, int> per_day;
  for (const TaxiRequest& r : requests) {
    ++per_day[{r.user_id, days_from_seconds(r.timestamp)}];
  }
  std::vector<TaxiRequest> out;
  std::set<std::tuple<std::string_view, std::int64_t, int>> seen;
  for (const TaxiRequest& r : requests) {
    const std::int64_t day = days_from_seconds(r.timestamp);
    if (per_day[{r.user_id, day}] > per_day_cap) continue;
    const std::int64_t interval = r.timestamp / spec.interval_seconds();
    if (!seen.insert({r.user_id, interval, spec.region_of(r.lat, r.lng)}).second) {
      continue;
    }
    out.push_back(r);
  }
  return out;
}

/// Demand counts, row-major [interval][region] with region = y*width + x.
struct DemandGrid {
  GridSpec spec;
  std::int64_t start_time = 0;  // epoch seconds of interval 0
  int num_intervals = 0;
  std::vector<std::int64_t> counts;  // num_intervals * num_regions

  std::int64_t count(int t, int region) const {
    return counts[static_cast<std::size_t>(t) * spec.num_regions() + region];
  }
  std::int64_t& count(int t, int region) {
    return counts[static_cast<std::size_t>(t) * spec.num_regions() + region];
  }
  std::int64_t total() const {
    std::int64_t s = 0;
    for (std::int64_t c : counts) s += c;
    return s;
  }
};

/// Buckets requests into a preallocated time range; requests outside the
/// range are excluded and counted in `out_of_range`.
inline DemandGrid aggregate_demand(const std::vector<TaxiRequest>& requests,
                                   const GridSpec& spec, std::int64_t start_time,
                                   int num_intervals,
                                   std::int64_t* out_of_range = nullptr) {
  spec.validate();
  if (num_intervals < 1) throw DataError("aggregate_demand: empty time range");
  DemandGrid grid;
  grid.spec = spec;
  grid.start_time = start_time;
  grid.num_intervals = num_intervals;
  grid.counts.assign(static_cast<std::size_t>(num_intervals) * spec.num_regions(), 0);
  std::int64_t excluded = 0;
  const std::int64_t isec = spec.interval_seconds();
  for (const TaxiRequest& r : requests) {
    const std::int64_t offset = r.timestamp - start_time;
    if (offset < 0 || offset >= isec * num_intervals) {
      ++excluded;
      continue;
    }
    ++grid.count(static_cast<int>(offset / isec), spec.region_of(r.lat, r.lng));
  }
  if (out_of_range) *out_of_range = excluded;
  return grid;
}

/// Derives the time range from the data itself: interval 0 starts at the
/// first request's interval boundary and the grid spans through the last.
inline DemandGrid aggregate_demand(const std::vector<TaxiRequest>& requests,
                                   const GridSpec& spec) {
  if (requests.empty()) throw DataError("aggregate_demand: no requests to derive range");
  const std::int64_t isec = spec.interval_seconds();
  std::int64_t lo = requests.front().timestamp, hi = lo;
  for (const TaxiRequest& r : requests) {
    lo = std::min(lo, r.timestamp);
    hi = std::max(hi, r.timestamp);
  }
  const std::int64_t start = (lo >= 0 ? lo / isec : (lo - isec + 1) / isec) * isec;
  const int n = static_cast<int>((hi - start) / isec) + 1;
  return aggregate_demand(requests, spec, start, n);
}

}  // namespace gridcast
