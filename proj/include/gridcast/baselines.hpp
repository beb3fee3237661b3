#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/calendar.hpp"
#include "gridcast/common.hpp"
#include "gridcast/dtw.hpp"
#include "gridcast/features.hpp"
#include "gridcast/grid.hpp"
#include "gridcast/model.hpp"
#include "gridcast/nn.hpp"
#include "gridcast/samples.hpp"
#include "gridcast/storage.hpp"
#include "gridcast/tensor.hpp"

// Reference predictors: the historical-average baseline on raw counts, and
// flat-feature regressors (linear with optional l2/l1 penalty, and an MLP)
// trained with the same loss and optimizer as the main model.

namespace gridcast {

// -- Historical average -------------------------------------------------------

struct HaConfig {
  bool use_day_of_week = true;  // false keys slots by time-of-day only
};

struct HaPrediction {
  double value = 0.0;
  bool fallback = false;  // slot had no history; region mean used instead
};

struct HistoricalAverage {
  HaConfig cfg;
  GridSpec spec;
  int num_slots = 0;  // intervals per day, x7 when keyed by day-of-week
  std::vector<double> slot_sum;             // [region][slot]
  std::vector<std::int64_t> slot_count;
  std::vector<double> region_sum;           // [region]
  std::vector<std::int64_t> region_count;
};

/// Accumulates per-slot demand means over the first train_intervals of the
/// grid (all of it by default).
inline HistoricalAverage fit_ha(const DemandGrid& grid, int train_intervals = -1,
                                HaConfig cfg = {}) {
  const int T = train_intervals < 0 ? grid.num_intervals : train_intervals;
  if (T < 1 || T > grid.num_intervals) {
    throw ConfigError("fit_ha: train range " + std::to_string(T) + " outside 1.." +
                      std::to_string(grid.num_intervals));
  }
  HistoricalAverage ha;
  ha.cfg = cfg;
  ha.spec = grid.spec;
  const int ipd = grid.spec.intervals_per_day();
  ha.num_slots = cfg.use_day_of_week ? 7 * ipd : ipd;
  const int N = grid.spec.num_regions();
  ha.slot_sum.assign(static_cast<std::size_t>(N) * ha.num_slots, 0.0);
  ha.slot_count.assign(static_cast<std::size_t>(N) * ha.num_slots, 0);
  ha.region_sum.assign(static_cast<std::size_t>(N), 0.0);
  ha.region_count.assign(static_cast<std::size_t>(N), 0);

  const std::int64_t isec = grid.spec.interval_seconds();
  for (int t = 0; t < T; ++t) {
    const std::int64_t ts = grid.start_time + static_cast<std::int64_t>(t) * isec;
    const int slot = cfg.use_day_of_week
                         ? week_slot_of(ts, isec, ipd)
                         : static_cast<int>(seconds_of_day(ts) / isec);
    for (int i = 0; i < N; ++i) {
      const double v = static_cast<double>(grid.count(t, i));
      ha.slot_sum[static_cast<std::size_t>(i) * ha.num_slots + slot] += v;
      ++ha.slot_count[static_cast<std::size_t>(i) * ha.num_slots + slot];
      ha.region_sum[static_cast<std::size_t>(i)] += v;
      ++ha.region_count[static_cast<std::size_t>(i)];
    }
  }
  return ha;
}

/// Mean historical demand of the region at the timestamp's weekly (or daily)
/// slot; falls back to the region's global mean when the slot is unseen.
inline HaPrediction ha_predict(const HistoricalAverage& ha, int region,
                               std::int64_t target_ts) {
  const int N = ha.spec.num_regions();
  if (region < 0 || region >= N) {
    throw ShapeError("ha_predict: region " + std::to_string(region) + " outside " +
                     std::to_string(N) + " cells");
  }
  const std::int64_t isec = ha.spec.interval_seconds();
  const int ipd = ha.spec.intervals_per_day();
  const int slot = ha.cfg.use_day_of_week
                       ? week_slot_of(target_ts, isec, ipd)
                       : static_cast<int>(seconds_of_day(target_ts) / isec);
  const std::size_t at = static_cast<std::size_t>(region) * ha.num_slots + slot;
  if (ha.slot_count[at] > 0) {
    return {ha.slot_sum[at] / static_cast<double>(ha.slot_count[at]), false};
  }
  return {ha.region_sum[static_cast<std::size_t>(region)] /
              static_cast<double>(ha.region_count[static_cast<std::size_t>(region)]),
          true};
}

/// Raw-demand predictions for each sample's target interval; fallback_count,
/// when given, reports how many predictions had to use the region mean.
inline std::vector<double> ha_predict_samples(const HistoricalAverage& ha,
                                              const SampleTable& table,
                                              const std::vector<Sample>& samples,
                                              std::int64_t* fallback_count = nullptr) {
  const std::int64_t isec = table.spec.interval_seconds();
  std::vector<double> out;
  out.reserve(samples.size());
  std::int64_t fallbacks = 0;
  for (const Sample& s : samples) {
    const std::int64_t ts =
        table.start_time + static_cast<std::int64_t>(s.end_t + 1) * isec;
    const HaPrediction p = ha_predict(ha, s.region, ts);
    fallbacks += p.fallback ? 1 : 0;
    out.push_back(p.value);
  }
  if (fallback_count != nullptr) *fallback_count = fallbacks;
  return out;
}

// -- Flat features for the regression baselines -------------------------------

inline int flat_feature_dim(const SampleTable& table) {
  return table.history * (table.context.dim + 1);
}

/// Per history step, oldest first: the step's context row, then the cell's
/// normalized demand.
inline void write_flat_features(const SampleTable& table, const Sample& s,
                                double* dst) {
  const int h = table.history;
  const int cd = table.context.dim;
  for (int k = 0; k < h; ++k) {
    const int t = s.end_t - h + 1 + k;
    const double* row = table.context.row(t, s.region);
    std::copy(row, row + cd, dst);
    dst += cd;
    *dst++ = table.demand(t, s.region);
  }
}

inline Tensor flat_feature_batch(const SampleTable& table,
                                 std::span<const Sample> batch) {
  const int D = flat_feature_dim(table);
  std::vector<double> values(batch.size() * static_cast<std::size_t>(D));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    write_flat_features(table, batch[b], values.data() + b * static_cast<std::size_t>(D));
  }
  return Tensor::from({static_cast<int>(batch.size()), D}, std::move(values));
}

// -- Shared trainer ------------------------------------------------------------

struct BaselineTrainConfig {
  double lr = 0.001;
  int batch = 64;
  int max_epoch = 100;
  int early_stop = 10;
  double gamma = 1.0;
  int max_train_samples = 0;  // 0 = use every training sample

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("baseline: lr must be positive");
    if (batch < 1) throw ConfigError("baseline: batch must be >= 1");
    if (max_epoch < 1 || early_stop < 1) {
      throw ConfigError("baseline: max_epoch and early_stop must be >= 1");
    }
    if (gamma < 0.0) throw ConfigError("baseline: gamma must be >= 0");
  }
};

namespace detail {

/// Mini-batch Adam with early stopping, shared by the feature baselines.
/// forward(batch) returns normalized predictions [B,1]; penalty() is called
/// after backward to add its value to the training loss and its (sub)gradient
/// to the parameters it regularizes.
template <typename ForwardFn, typename PenaltyFn>
TrainReport fit_on_samples(std::vector<NamedParam> params, std::vector<Sample> train,
                           std::vector<Sample> val, const BaselineTrainConfig& cfg,
                           Rng& rng, ForwardFn forward, PenaltyFn penalty) {
  if (train.empty()) throw TrainingError("baseline: empty training set");
  if (val.empty()) throw TrainingError("baseline: empty validation set");
  cfg.validate();

  if (cfg.max_train_samples > 0 &&
      static_cast<int>(train.size()) > cfg.max_train_samples) {
    rng.shuffle(train);
    train.resize(static_cast<std::size_t>(cfg.max_train_samples));
  }

  std::vector<AdamState> opt(params.size());
  AdamConfig adam;
  adam.lr = cfg.lr;

  auto val_loss_of = [&]() {
    NoGrad guard;
    double total = 0.0;
    const std::size_t step = static_cast<std::size_t>(cfg.batch);
    for (std::size_t at = 0; at < val.size(); at += step) {
      const std::span<const Sample> batch(val.data() + at,
                                          std::min(step, val.size() - at));
      std::vector<double> targets;
      for (const Sample& s : batch) targets.push_back(s.target_norm);
      total += forecast_loss(forward(batch), targets, cfg.gamma).item();
    }
    return total / static_cast<double>(val.size());
  };

  auto snapshot = [&]() {
    std::vector<std::vector<double>> state;
    for (auto& p : params) state.push_back(p.tensor.values());
    return state;
  };

  TrainReport report;
  std::vector<std::vector<double>> best_state = snapshot();
  double best_val = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Sample> batch_buf;
  std::vector<double> targets;

  for (int epoch = 0; epoch < cfg.max_epoch; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    const std::size_t bs = static_cast<std::size_t>(cfg.batch);
    for (std::size_t at = 0, bi = 0; at < order.size(); at += bs, ++bi) {
      const std::size_t n = std::min(bs, order.size() - at);
      batch_buf.clear();
      for (std::size_t j = 0; j < n; ++j) batch_buf.push_back(train[order[at + j]]);
      for (auto& p : params) p.tensor.zero_grad();
      targets.clear();
      for (const Sample& s : batch_buf) targets.push_back(s.target_norm);
      Tensor loss = forecast_loss(forward(batch_buf), targets, cfg.gamma);
      loss.backward();
      const double value = loss.item() + penalty();
      if (!std::isfinite(value)) {
        throw TrainingError("baseline: non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(bi));
      }
      epoch_loss += value;
      for (std::size_t pi = 0; pi < params.size(); ++pi) {
        adam_step(params[pi], opt[pi], adam);
      }
    }
    report.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    const double vl = val_loss_of();
    report.val_loss.push_back(vl);
    if (vl < best_val) {
      best_val = vl;
      report.best_epoch = epoch;
      best_state = snapshot();
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (stale_epochs >= cfg.early_stop) {
        report.stop_reason = "early_stop";
        break;
      }
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "max_epoch";
  report.best_val_loss = best_val;
  std::size_t i = 0;
  for (auto& p : params) p.tensor.values() = best_state[i++];
  return report;
}

}  // namespace detail

// -- Linear baselines (OLSR / ridge / lasso) -----------------------------------

enum class LinearKind { olsr, ridge, lasso };

inline std::string linear_kind_name(LinearKind kind) {
  switch (kind) {
    case LinearKind::olsr: return "olsr";
    case LinearKind::ridge: return "ridge";
    case LinearKind::lasso: return "lasso";
  }
  throw ConfigError("linear_kind_name: unknown kind");
}

inline LinearKind linear_kind_from_name(const std::string& name) {
  if (name == "olsr") return LinearKind::olsr;
  if (name == "ridge") return LinearKind::ridge;
  if (name == "lasso") return LinearKind::lasso;
  throw ConfigError("unknown linear baseline '" + name + "'");
}

struct LinearBaseline {
  LinearKind kind = LinearKind::olsr;
  double reg_weight = 0.0;
  int history = 0;
  int context_dim = 0;
  Tensor w;  // [1, D]
  Tensor b;  // [1]
  Normalizer norm;
};

namespace detail {

inline void check_flat_table(int history, int context_dim, const SampleTable& table,
                             const char* who) {
  if (table.history != history || table.context.dim != context_dim) {
    throw ShapeError(std::string(who) + ": table (h=" + std::to_string(table.history) +
                     ", context=" + std::to_string(table.context.dim) +
                     ") does not match model (h=" + std::to_string(history) +
                     ", context=" + std::to_string(context_dim) + ")");
  }
}

}  // namespace detail

/// Linear-in-features predictor under the shared loss; ridge adds an l2
/// penalty, lasso an l1 subgradient. The bias stays unpenalized.
inline std::pair<LinearBaseline, TrainReport> fit_linear_baseline(
    const SampleTable& table, std::vector<Sample> train, std::vector<Sample> val,
    LinearKind kind, double reg_weight, const Normalizer& norm,
    const BaselineTrainConfig& cfg, std::uint64_t seed) {
  if (reg_weight < 0.0) throw ConfigError("linear baseline: negative reg_weight");
  LinearBaseline model;
  model.kind = kind;
  model.reg_weight = reg_weight;
  model.history = table.history;
  model.context_dim = table.context.dim;
  model.norm = norm;
  const int D = flat_feature_dim(table);
  model.w = Tensor::zeros({1, D}).set_tracked();
  model.b = Tensor::zeros({1}).set_tracked();

  auto forward = [&](std::span<const Sample> batch) {
    return dense(flat_feature_batch(table, batch), model.w, model.b);
  };
  auto penalty = [&]() {
    if (kind == LinearKind::olsr || reg_weight == 0.0) return 0.0;
    double value = 0.0;
    double* g = model.w.grad_data();
    const double* wv = model.w.data();
    for (int i = 0; i < D; ++i) {
      if (kind == LinearKind::ridge) {
        value += reg_weight * wv[i] * wv[i];
        g[i] += 2.0 * reg_weight * wv[i];
      } else {  // lasso subgradient, 0 at exactly 0
        value += reg_weight * std::fabs(wv[i]);
        g[i] += reg_weight * (wv[i] > 0.0 ? 1.0 : (wv[i] < 0.0 ? -1.0 : 0.0));
      }
    }
    return value;
  };

  Rng rng(seed);
  TrainReport report = detail::fit_on_samples({{"w", model.w}, {"b", model.b}},
                                              std::move(train), std::move(val), cfg,
                                              rng, forward, penalty);
  return {std::move(model), std::move(report)};
}

inline std::vector<double> predict_linear(const LinearBaseline& model,
                                          const SampleTable& table,
                                          const std::vector<Sample>& samples) {
  detail::check_flat_table(model.history, model.context_dim, table, "predict_linear");
  NoGrad guard;
  std::vector<double> out;
  out.reserve(samples.size());
  constexpr std::size_t kStep = 256;
  for (std::size_t at = 0; at < samples.size(); at += kStep) {
    const std::span<const Sample> batch(samples.data() + at,
                                        std::min(kStep, samples.size() - at));
    Tensor pred = dense(flat_feature_batch(table, batch), model.w, model.b);
    for (double v : pred.values()) out.push_back(model.norm.denormalize(v));
  }
  return out;
}

// -- MLP baseline ---------------------------------------------------------------

struct MlpBaseline {
  std::vector<int> widths;  // hidden layer sizes
  int history = 0;
  int context_dim = 0;
  std::vector<Tensor> weights;  // hidden layers then the scalar head
  std::vector<Tensor> biases;
  Normalizer norm;
};

namespace detail {

inline Tensor mlp_forward(const MlpBaseline& model, Tensor x) {
  for (std::size_t l = 0; l < model.widths.size(); ++l) {
    x = relu(dense(x, model.weights[l], model.biases[l]));
  }
  return sigmoid(dense(x, model.weights.back(), model.biases.back()));
}

}  // namespace detail

/// Fully connected relu stack with a sigmoid head, on the same flat features
/// and loss as the linear baselines.
inline std::pair<MlpBaseline, TrainReport> fit_mlp_baseline(
    const SampleTable& table, std::vector<Sample> train, std::vector<Sample> val,
    const std::vector<int>& widths, const Normalizer& norm,
    const BaselineTrainConfig& cfg, std::uint64_t seed) {
  if (widths.empty()) throw ConfigError("mlp baseline: needs at least one layer");
  for (int w : widths) {
    if (w < 1) throw ConfigError("mlp baseline: layer width must be >= 1");
  }
  MlpBaseline model;
  model.widths = widths;
  model.history = table.history;
  model.context_dim = table.context.dim;
  model.norm = norm;

  Rng rng(seed);
  std::vector<NamedParam> params;
  int fan_in = flat_feature_dim(table);
  for (std::size_t l = 0; l <= widths.size(); ++l) {
    const int fan_out = l < widths.size() ? widths[l] : 1;
    Tensor w = Tensor::zeros({fan_out, fan_in});
    glorot_init(w, fan_in, fan_out, rng);
    w.set_tracked();
    Tensor b = Tensor::zeros({fan_out}).set_tracked();
    model.weights.push_back(w);
    model.biases.push_back(b);
    const std::string base =
        l < widths.size() ? "layer" + std::to_string(l) : "head";
    params.push_back({base + ".w", w});
    params.push_back({base + ".b", b});
    fan_in = fan_out;
  }

  auto forward = [&](std::span<const Sample> batch) {
    return detail::mlp_forward(model, flat_feature_batch(table, batch));
  };
  TrainReport report =
      detail::fit_on_samples(std::move(params), std::move(train), std::move(val),
                             cfg, rng, forward, [] { return 0.0; });
  return {std::move(model), std::move(report)};
}

inline std::vector<double> predict_mlp(const MlpBaseline& model,
                                       const SampleTable& table,
                                       const std::vector<Sample>& samples) {
  detail::check_flat_table(model.history, model.context_dim, table, "predict_mlp");
  NoGrad guard;
  std::vector<double> out;
  out.reserve(samples.size());
  constexpr std::size_t kStep = 256;
  for (std::size_t at = 0; at < samples.size(); at += kStep) {
    const std::span<const Sample> batch(samples.data() + at,
                                        std::min(kStep, samples.size() - at));
    Tensor pred = detail::mlp_forward(model, flat_feature_batch(table, batch));
    for (double v : pred.values()) out.push_back(model.norm.denormalize(v));
  }
  return out;
}

// -- Persistence -----------------------------------------------------------------

inline void save_ha(const HistoricalAverage& ha, const std::string& path) {
  nlohmann::json manifest{
      {"kind", "ha-baseline"},
      {"use_day_of_week", ha.cfg.use_day_of_week},
      {"spec", grid_spec_json(ha.spec)},
      {"num_slots", ha.num_slots},
  };
  std::vector<double> slot_count(ha.slot_count.begin(), ha.slot_count.end());
  std::vector<double> region_count(ha.region_count.begin(), ha.region_count.end());
  write_container(path, std::move(manifest),
                  {{"slot_sum", &ha.slot_sum},
                   {"slot_count", &slot_count},
                   {"region_sum", &ha.region_sum},
                   {"region_count", &region_count}});
}

inline HistoricalAverage load_ha(const std::string& path) {
  Container c = read_container(path, "ha-baseline");
  HistoricalAverage ha;
  try {
    ha.cfg.use_day_of_week = c.manifest.at("use_day_of_week").get<bool>();
    ha.spec = grid_spec_from_json(c.manifest.at("spec"));
    ha.num_slots = c.manifest.at("num_slots").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad ha-baseline manifest: ") + e.what());
  }
  ha.spec.validate();
  const int N = ha.spec.num_regions();
  const int expect_slots =
      (ha.cfg.use_day_of_week ? 7 : 1) * ha.spec.intervals_per_day();
  if (ha.num_slots != expect_slots) {
    throw CheckpointError("ha-baseline slot count " + std::to_string(ha.num_slots) +
                          " does not match spec (" + std::to_string(expect_slots) + ")");
  }
  ha.slot_sum = c.array("slot_sum");
  ha.region_sum = c.array("region_sum");
  for (double v : c.array("slot_count")) ha.slot_count.push_back(std::llround(v));
  for (double v : c.array("region_count")) ha.region_count.push_back(std::llround(v));
  if (ha.slot_sum.size() != static_cast<std::size_t>(N) * ha.num_slots ||
      ha.slot_count.size() != ha.slot_sum.size() ||
      ha.region_sum.size() != static_cast<std::size_t>(N) ||
      ha.region_count.size() != ha.region_sum.size()) {
    throw CheckpointError("ha-baseline arrays do not match the grid spec");
  }
  return ha;
}

inline void save_linear_baseline(const LinearBaseline& model, const std::string& path) {
  nlohmann::json manifest{
      {"kind", "linear-baseline"},
      {"linear_kind", linear_kind_name(model.kind)},
      {"reg_weight", model.reg_weight},
      {"history", model.history},
      {"context_dim", model.context_dim},
      {"normalizer", {{"min", model.norm.min}, {"max", model.norm.max}}},
  };
  write_container(path, std::move(manifest),
                  {{"w", &model.w.values()}, {"b", &model.b.values()}});
}

inline LinearBaseline load_linear_baseline(const std::string& path) {
  Container c = read_container(path, "linear-baseline");
  LinearBaseline model;
  try {
    model.kind = linear_kind_from_name(c.manifest.at("linear_kind").get<std::string>());
    model.reg_weight = c.manifest.at("reg_weight").get<double>();
    model.history = c.manifest.at("history").get<int>();
    model.context_dim = c.manifest.at("context_dim").get<int>();
    model.norm.min = c.manifest.at("normalizer").at("min").get<double>();
    model.norm.max = c.manifest.at("normalizer").at("max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad linear-baseline manifest: ") + e.what());
  }
  const std::vector<double>& w = c.array("w");
  const std::vector<double>& b = c.array("b");
  const int D = model.history * (model.context_dim + 1);
  if (model.history < 1 || model.context_dim < 1 ||
      w.size() != static_cast<std::size_t>(D) || b.size() != 1) {
    throw CheckpointError("linear-baseline arrays do not match its dimensions");
  }
  model.w = Tensor::from({1, D}, w);
  model.b = Tensor::from({1}, b);
  return model;
}

inline void save_mlp_baseline(const MlpBaseline& model, const std::string& path) {
  nlohmann::json manifest{
      {"kind", "mlp-baseline"},
      {"widths", model.widths},
      {"history", model.history},
      {"context_dim", model.context_dim},
      {"normalizer", {{"min", model.norm.min}, {"max", model.norm.max}}},
  };
  std::vector<std::pair<std::string, const std::vector<double>*>> arrays;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const std::string base =
        l < model.widths.size() ? "layer" + std::to_string(l) : "head";
    arrays.emplace_back(base + ".w", &model.weights[l].values());
    arrays.emplace_back(base + ".b", &model.biases[l].values());
  }
  write_container(path, std::move(manifest), arrays);
}

inline MlpBaseline load_mlp_baseline(const std::string& path) {
  Container c = read_container(path, "mlp-baseline");
  MlpBaseline model;
  try {
    model.widths = c.manifest.at("widths").get<std::vector<int>>();
    model.history = c.manifest.at("history").get<int>();
    model.context_dim = c.manifest.at("context_dim").get<int>();
    model.norm.min = c.manifest.at("normalizer").at("min").get<double>();
    model.norm.max = c.manifest.at("normalizer").at("max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad mlp-baseline manifest: ") + e.what());
  }
  if (model.widths.empty() || model.history < 1 || model.context_dim < 1) {
    throw CheckpointError("mlp-baseline manifest has degenerate dimensions");
  }
  int fan_in = model.history * (model.context_dim + 1);
  for (std::size_t l = 0; l <= model.widths.size(); ++l) {
    const int fan_out = l < model.widths.size() ? model.widths[l] : 1;
    const std::string base =
        l < model.widths.size() ? "layer" + std::to_string(l) : "head";
    const std::vector<double>& w = c.array(base + ".w");
    const std::vector<double>& b = c.array(base + ".b");
    if (w.size() != static_cast<std::size_t>(fan_out) * fan_in ||
        b.size() != static_cast<std::size_t>(fan_out)) {
      throw CheckpointError("mlp-baseline layer " + base +
                            " does not match the declared widths");
    }
    model.weights.push_back(Tensor::from({fan_out, fan_in}, w));
    model.biases.push_back(Tensor::from({fan_out}, b));
    fan_in = fan_out;
  }
  return model;
}

}  // namespace gridcast
