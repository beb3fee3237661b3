#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridcast/calendar.hpp"
#include "gridcast/common.hpp"
#include "gridcast/samples.hpp"

// Evaluation metrics on denormalized demand: MAPE, RMSE, the per-day-of-week
// breakdown, and the weekend-vs-weekday relative error increase.

namespace gridcast {

inline double mape(const std::vector<double>& pred, const std::vector<double>& actual) {
  if (pred.size() != actual.size()) {
    throw ShapeError("mape: " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(actual.size()) + " actuals");
  }
  if (actual.empty()) throw DataError("mape: no samples");
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] <= 0.0) {
      throw DomainError("mape: actual value " + std::to_string(actual[i]) +
                        " at index " + std::to_string(i) + " is not positive");
    }
    total += std::fabs(pred[i] - actual[i]) / actual[i];
  }
  return total / static_cast<double>(actual.size());
}

inline double rmse(const std::vector<double>& pred, const std::vector<double>& actual) {
  if (pred.size() != actual.size()) {
    throw ShapeError("rmse: " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(actual.size()) + " actuals");
  }
  if (actual.empty()) throw DataError("rmse: no samples");
  double total = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = pred[i] - actual[i];
    total += e * e;
  }
  return std::sqrt(total / static_cast<double>(actual.size()));
}

struct DayMetrics {
  double mape = 0.0;
  double rmse = 0.0;
  std::int64_t count = 0;
};

struct MetricReport {
  double mape = 0.0;
  double rmse = 0.0;
  std::int64_t count = 0;
  std::array<DayMetrics, 7> per_day{};  // Monday = 0; entries with count 0 unset
  bool has_weekend_rie = false;  // needs samples on both weekend and weekdays
  double weekend_rie = 0.0;      // |mean weekend APE - mean weekday APE| / weekday
};

/// Scores raw-demand predictions against the samples they were made for.
/// Exactly invariant to sample order: per-day error terms are sorted before
/// summation, so reorderings cannot even change floating-point rounding.
inline MetricReport evaluate_predictions(const std::vector<double>& pred,
                                         const std::vector<Sample>& samples) {
  if (pred.size() != samples.size()) {
    throw ShapeError("evaluate: " + std::to_string(pred.size()) +
                     " predictions vs " + std::to_string(samples.size()) + " samples");
  }
  if (samples.empty()) throw DataError("evaluate: empty test set");

  std::array<std::vector<double>, 7> ape;
  std::array<std::vector<double>, 7> sq;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double actual = samples[i].target_raw;
    if (actual <= 0.0) {
      throw DomainError("evaluate: sample " + std::to_string(i) +
                        " has non-positive demand " + std::to_string(actual));
    }
    const int dow = samples[i].target_dow;
    if (dow < 0 || dow > 6) {
      throw DataError("evaluate: sample " + std::to_string(i) +
                      " has day-of-week " + std::to_string(dow));
    }
    const double e = pred[i] - actual;
    ape[static_cast<std::size_t>(dow)].push_back(std::fabs(e) / actual);
    sq[static_cast<std::size_t>(dow)].push_back(e * e);
  }

  MetricReport r;
  std::array<double, 7> ape_sum{};
  std::array<double, 7> sq_sum{};
  double ape_all = 0.0, sq_all = 0.0;
  double ape_weekend = 0.0, ape_weekday = 0.0;
  std::int64_t n_weekend = 0, n_weekday = 0;
  for (int d = 0; d < 7; ++d) {
    const auto i = static_cast<std::size_t>(d);
    std::sort(ape[i].begin(), ape[i].end());
    std::sort(sq[i].begin(), sq[i].end());
    for (double v : ape[i]) ape_sum[i] += v;
    for (double v : sq[i]) sq_sum[i] += v;
    const auto n = static_cast<std::int64_t>(ape[i].size());
    ape_all += ape_sum[i];
    sq_all += sq_sum[i];
    r.count += n;
    if (n > 0) {
      r.per_day[i].mape = ape_sum[i] / static_cast<double>(n);
      r.per_day[i].rmse = std::sqrt(sq_sum[i] / static_cast<double>(n));
      r.per_day[i].count = n;
    }
    if (is_weekend(d)) {
      ape_weekend += ape_sum[i];
      n_weekend += n;
    } else {
      ape_weekday += ape_sum[i];
      n_weekday += n;
    }
  }
  r.mape = ape_all / static_cast<double>(r.count);
  r.rmse = std::sqrt(sq_all / static_cast<double>(r.count));
  if (n_weekend > 0 && n_weekday > 0) {
    const double wk = ape_weekend / static_cast<double>(n_weekend);
    const double wd = ape_weekday / static_cast<double>(n_weekday);
    if (wd > 0.0) {
      r.has_weekend_rie = true;
      r.weekend_rie = std::fabs(wk - wd) / wd;
    } else if (wk == 0.0) {
      r.has_weekend_rie = true;  // perfect on both sides: no increase
      r.weekend_rie = 0.0;
    }
  }
  return r;
}

inline nlohmann::json metric_report_json(const MetricReport& r) {
  nlohmann::json j{{"mape", r.mape}, {"rmse", r.rmse}, {"count", r.count}};
  nlohmann::json days = nlohmann::json::array();
  for (int d = 0; d < 7; ++d) {
    const DayMetrics& m = r.per_day[static_cast<std::size_t>(d)];
    if (m.count == 0) continue;
    days.push_back({{"day", d}, {"mape", m.mape}, {"rmse", m.rmse}, {"count", m.count}});
  }
  j["per_day"] = std::move(days);
  if (r.has_weekend_rie) {
    j["weekend_relative_increase"] = r.weekend_rie;
  } else {
    j["weekend_relative_increase"] = nullptr;
  }
  return j;
}

/// Aligned comparison table, one row per method.
inline std::string render_metric_table(
    const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::size_t name_w = 6;
  for (const auto& [name, r] : rows) name_w = std::max(name_w, name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_w) + 2) << "method"
      << std::right << std::setw(10) << "MAPE" << std::setw(12) << "RMSE"
      << std::setw(10) << "samples" << '\n';
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(static_cast<int>(name_w) + 2) << name
        << std::right << std::fixed << std::setprecision(4) << std::setw(10)
        << r.mape << std::setw(12) << std::setprecision(3) << r.rmse
        << std::setw(10) << r.count << '\n';
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
  }
  return out.str();
}

}  // namespace gridcast
