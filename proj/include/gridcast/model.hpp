#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridcast/common.hpp"
#include "gridcast/features.hpp"
#include "gridcast/lstm.hpp"
#include "gridcast/nn.hpp"
#include "gridcast/random.hpp"
#include "gridcast/samples.hpp"
#include "gridcast/semantic.hpp"
#include "gridcast/spatial.hpp"
#include "gridcast/tensor.hpp"

// The full forecasting model: per-step spatial encodings feed an LSTM whose
// final hidden state, joined with the projected graph embedding, drives a
// sigmoid prediction head. Ablation variants swap out individual views.

namespace gridcast {

enum class Variant {
  temporal,           // context-only LSTM
  temporal_semantic,  // + graph-embedding projection at the head
  temporal_neighbor,  // raw neighbor demand values instead of the CNN
  temporal_lcnn,      // + local CNN, no semantic view
  full,               // all three views
};

inline bool variant_has_cnn(Variant v) {
  return v == Variant::full || v == Variant::temporal_lcnn;
}
inline bool variant_has_neighbor(Variant v) { return v == Variant::temporal_neighbor; }
inline bool variant_has_semantic(Variant v) {
  return v == Variant::full || v == Variant::temporal_semantic;
}

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::temporal: return "temporal";
    case Variant::temporal_semantic: return "temporal+semantic";
    case Variant::temporal_neighbor: return "temporal+neighbor";
    case Variant::temporal_lcnn: return "temporal+lcnn";
    case Variant::full: return "full";
  }
  throw ConfigError("variant_name: unknown variant");
}

inline Variant variant_from_name(const std::string& name) {
  if (name == "temporal") return Variant::temporal;
  if (name == "temporal+semantic") return Variant::temporal_semantic;
  if (name == "temporal+neighbor") return Variant::temporal_neighbor;
  if (name == "temporal+lcnn") return Variant::temporal_lcnn;
  if (name == "full") return Variant::full;
  throw ConfigError("unknown model variant '" + name + "'");
}

struct ModelConfig {
  Variant variant = Variant::full;
  PatchConfig patch;          // S, K, filters, d
  int history = 8;            // h
  int hidden = 128;
  int embed_dim = 32;
  int semantic_dim = 6;
  double gamma = 1.0;         // weight of the relative-error loss term
  double lr = 0.001;
  int batch = 64;
  int max_epoch = 100;
  int early_stop = 10;
  int max_train_samples = 0;  // 0 = use every training sample
  bool per_step_cnn = false;  // distinct CNN weights per sequence position
  bool finetune_embeddings = false;

  void validate() const {
    patch.validate();
    if (history < 1) throw ConfigError("model: history must be >= 1");
    if (hidden < 1) throw ConfigError("model: hidden must be >= 1");
    if (embed_dim < 1 || semantic_dim < 1) {
      throw ConfigError("model: embedding dims must be >= 1");
    }
    if (batch < 1) throw ConfigError("model: batch must be >= 1");
    if (max_epoch < 1 || early_stop < 1) {
      throw ConfigError("model: max_epoch and early_stop must be >= 1");
    }
    if (!(lr > 0.0)) throw ConfigError("model: lr must be positive");
    if (gamma < 0.0) throw ConfigError("model: gamma must be >= 0");
  }
};

/// All learnable tensors plus the frozen inputs (embedding table, batchnorm
/// running stats) and the normalizer the model was trained against.
struct ModelParams {
  ModelConfig cfg;
  int context_dim = 0;
  int num_regions = 0;
  std::vector<SpatialParams> spatial;  // one entry, or h with per_step_cnn
  LstmParams lstm;
  Tensor sem_w, sem_b;
  Tensor head_w, head_b;
  Tensor embeddings;  // [num_regions, embed_dim]; tracked iff finetuned
  Normalizer norm;

  int step_input_dim() const {
    int dim = context_dim;
    if (variant_has_cnn(cfg.variant)) dim += cfg.patch.d;
    if (variant_has_neighbor(cfg.variant)) dim += cfg.patch.S * cfg.patch.S - 1;
    return dim;
  }
  int head_input_dim() const {
    return cfg.hidden + (variant_has_semantic(cfg.variant) ? cfg.semantic_dim : 0);
  }

  void init(const ModelConfig& config, int ctx_dim, const EmbeddingTable& table,
            const Normalizer& normalizer, Rng& rng) {
    config.validate();
    if (ctx_dim < 0) throw ConfigError("model: negative context dim");
    cfg = config;
    context_dim = ctx_dim;
    norm = normalizer;
    spatial.clear();
    if (variant_has_cnn(cfg.variant)) {
      const int copies = cfg.per_step_cnn ? cfg.history : 1;
      spatial.resize(static_cast<std::size_t>(copies));
      for (auto& sp : spatial) sp.init(cfg.patch, rng);
    }
    lstm.init(step_input_dim(), cfg.hidden, rng);
    if (variant_has_semantic(cfg.variant)) {
      if (table.dim != cfg.embed_dim) {
        throw ShapeError("model: embedding table dim " + std::to_string(table.dim) +
                         " does not match configured " + std::to_string(cfg.embed_dim));
      }
      num_regions = table.num_nodes();
      embeddings = Tensor::from({num_regions, cfg.embed_dim}, table.vectors);
      embeddings.set_tracked(cfg.finetune_embeddings);
      sem_w = Tensor::zeros({cfg.semantic_dim, cfg.embed_dim});
      glorot_init(sem_w, cfg.embed_dim, cfg.semantic_dim, rng);
      sem_w.set_tracked();
      sem_b = Tensor::zeros({cfg.semantic_dim}).set_tracked();
    }
    head_w = Tensor::zeros({1, head_input_dim()});
    glorot_init(head_w, head_input_dim(), 1, rng);
    head_w.set_tracked();
    head_b = Tensor::zeros({1}).set_tracked();
  }

  /// Every learnable tensor exactly once, in a stable order.
  std::vector<NamedParam> named_parameters() {
    std::vector<NamedParam> out;
    for (std::size_t s = 0; s < spatial.size(); ++s) {
      const std::string base = "spatial" + std::to_string(s);
      for (int k = 0; k < cfg.patch.K; ++k) {
        const std::string layer = base + ".conv" + std::to_string(k);
        out.push_back({layer + ".kernel", spatial[s].kernels[static_cast<std::size_t>(k)]});
        out.push_back({layer + ".bias", spatial[s].biases[static_cast<std::size_t>(k)]});
        out.push_back({base + ".bn" + std::to_string(k) + ".scale",
                       spatial[s].norms[static_cast<std::size_t>(k)].scale});
        out.push_back({base + ".bn" + std::to_string(k) + ".shift",
                       spatial[s].norms[static_cast<std::size_t>(k)].shift});
      }
      out.push_back({base + ".fc.weight", spatial[s].fc_w});
      out.push_back({base + ".fc.bias", spatial[s].fc_b});
    }
    out.push_back({"lstm.w_i", lstm.w_i});
    out.push_back({"lstm.u_i", lstm.u_i});
    out.push_back({"lstm.b_i", lstm.b_i});
    out.push_back({"lstm.w_f", lstm.w_f});
    out.push_back({"lstm.u_f", lstm.u_f});
    out.push_back({"lstm.b_f", lstm.b_f});
    out.push_back({"lstm.w_o", lstm.w_o});
    out.push_back({"lstm.u_o", lstm.u_o});
    out.push_back({"lstm.b_o", lstm.b_o});
    out.push_back({"lstm.w_g", lstm.w_g});
    out.push_back({"lstm.u_g", lstm.u_g});
    out.push_back({"lstm.b_g", lstm.b_g});
    if (variant_has_semantic(cfg.variant)) {
      out.push_back({"semantic.weight", sem_w});
      out.push_back({"semantic.bias", sem_b});
      if (cfg.finetune_embeddings) out.push_back({"embeddings", embeddings});
    }
    out.push_back({"head.weight", head_w});
    out.push_back({"head.bias", head_b});
    return out;
  }

  /// Non-learned state that must persist: batchnorm running statistics and
  /// the frozen embedding table.
  struct NamedBuffer {
    std::string name;
    std::vector<double>* values;
  };
  std::vector<NamedBuffer> named_buffers() {
    std::vector<NamedBuffer> out;
    for (std::size_t s = 0; s < spatial.size(); ++s) {
      for (int k = 0; k < cfg.patch.K; ++k) {
        const std::string base =
            "spatial" + std::to_string(s) + ".bn" + std::to_string(k);
        out.push_back({base + ".run_mean",
                       &spatial[s].norms[static_cast<std::size_t>(k)].run_mean});
        out.push_back({base + ".run_var",
                       &spatial[s].norms[static_cast<std::size_t>(k)].run_var});
      }
    }
    if (variant_has_semantic(cfg.variant) && !cfg.finetune_embeddings) {
      out.push_back({"embeddings", &embeddings.values()});
    }
    return out;
  }

  /// Deep copy of all learnable values and buffers (for best-epoch restore).
  std::vector<std::vector<double>> snapshot() {
    std::vector<std::vector<double>> state;
    for (auto& p : named_parameters()) state.push_back(p.tensor.values());
    for (auto& b : named_buffers()) state.push_back(*b.values);
    return state;
  }
  void restore(const std::vector<std::vector<double>>& state) {
    std::size_t i = 0;
    for (auto& p : named_parameters()) p.tensor.values() = state[i++];
    for (auto& b : named_buffers()) *b.values = state[i++];
  }
};

namespace detail {

inline void check_sample_table(const ModelParams& params, const SampleTable& table) {
  if (table.history != params.cfg.history) {
    throw ShapeError("model: sample table history " + std::to_string(table.history) +
                     " does not match configured " + std::to_string(params.cfg.history));
  }
  if (table.context.dim != params.context_dim) {
    throw ShapeError("model: context dim " + std::to_string(table.context.dim) +
                     " does not match configured " + std::to_string(params.context_dim));
  }
  if (variant_has_semantic(params.cfg.variant) &&
      table.spec.num_regions() != params.num_regions) {
    throw ShapeError("model: table has " + std::to_string(table.spec.num_regions()) +
                     " regions, embeddings cover " + std::to_string(params.num_regions));
  }
}

}  // namespace detail

/// Batched forward pass: predictions in (0,1), shape [B,1].
inline Tensor model_forward(ModelParams& params, const SampleTable& table,
                            std::span<const Sample> batch, bool training) {
  if (batch.empty()) throw ShapeError("model_forward: empty batch");
  detail::check_sample_table(params, table);
  const ModelConfig& cfg = params.cfg;
  const int B = static_cast<int>(batch.size());
  const int S = cfg.patch.S;
  const int N = table.spec.num_regions();
  const int h = cfg.history;

  std::vector<Tensor> steps;
  steps.reserve(static_cast<std::size_t>(h));
  std::vector<double> patch_buf;
  for (int k = 0; k < h; ++k) {
    Tensor spatial_enc;  // undefined for the pure-temporal variant
    if (variant_has_cnn(cfg.variant) || variant_has_neighbor(cfg.variant)) {
      patch_buf.assign(static_cast<std::size_t>(B) * S * S, 0.0);
      for (int b = 0; b < B; ++b) {
        const Sample& s = batch[static_cast<std::size_t>(b)];
        const int t = s.end_t - h + 1 + k;
        write_patch(patch_buf.data() + static_cast<std::size_t>(b) * S * S,
                    table.grid_norm.data() + static_cast<std::size_t>(t) * N,
                    table.spec.width, table.spec.height, s.region, S);
      }
      if (variant_has_cnn(cfg.variant)) {
        Tensor patches = Tensor::from({B, S, S, 1}, patch_buf);
        SpatialParams& sp = params.spatial[cfg.per_step_cnn ? static_cast<std::size_t>(k) : 0];
        spatial_enc = local_cnn_forward(patches, sp, training);
      } else {
        // neighbor variant: the raw patch minus its center cell
        const int center = (S * S) / 2;
        std::vector<double> nb(static_cast<std::size_t>(B) * (S * S - 1));
        for (int b = 0; b < B; ++b) {
          const double* src = patch_buf.data() + static_cast<std::size_t>(b) * S * S;
          double* dst = nb.data() + static_cast<std::size_t>(b) * (S * S - 1);
          for (int j = 0, o = 0; j < S * S; ++j) {
            if (j != center) dst[o++] = src[j];
          }
        }
        spatial_enc = Tensor::from({B, S * S - 1}, std::move(nb));
      }
    }
    std::vector<double> ctx(static_cast<std::size_t>(B) * table.context.dim);
    for (int b = 0; b < B; ++b) {
      const Sample& s = batch[static_cast<std::size_t>(b)];
      const int t = s.end_t - h + 1 + k;
      const double* row = table.context.row(t, s.region);
      std::copy(row, row + table.context.dim,
                ctx.begin() + static_cast<std::size_t>(b) * table.context.dim);
    }
    Tensor context = Tensor::from({B, table.context.dim}, std::move(ctx));
    steps.push_back(spatial_enc.defined() ? concat(spatial_enc, context) : context);
  }

  Tensor hidden = lstm_sequence(steps, params.lstm, h);
  Tensor head_in = hidden;
  if (variant_has_semantic(cfg.variant)) {
    std::vector<int> regions;
    regions.reserve(static_cast<std::size_t>(B));
    for (const Sample& s : batch) regions.push_back(s.region);
    Tensor m = gather_rows(params.embeddings, std::move(regions));
    Tensor projected = semantic_fc(m, params.sem_w, params.sem_b);
    head_in = concat(hidden, projected);
  }
  return sigmoid(dense(head_in, params.head_w, params.head_b));
}

/// Joint loss, summed over the batch in normalized space:
///   sum_i (y_i - p_i)^2 + gamma * ((y_i - p_i) / y_i)^2
inline Tensor forecast_loss(const Tensor& pred, const std::vector<double>& targets,
                            double gamma) {
  if (pred.size() != static_cast<std::int64_t>(targets.size())) {
    throw ShapeError("forecast_loss: " + std::to_string(pred.size()) +
                     " predictions vs " + std::to_string(targets.size()) + " targets");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == 0.0) {
      throw DomainError("forecast_loss: target " + std::to_string(i) +
                        " is exactly 0, percentage term undefined");
    }
  }
  double total = 0.0;
  const double* p = pred.data();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double err = targets[i] - p[i];
    const double rel = err / targets[i];
    total += err * err + gamma * rel * rel;
  }
  return detail::make_op(
      {1}, {total}, {pred}, [targets, gamma](detail::Node& n) {
        if (!n.parents[0]->tracked) return;
        double* g = n.parents[0]->g.data();
        const double* p = n.parents[0]->v.data();
        const double go = n.g[0];
        for (std::size_t i = 0; i < targets.size(); ++i) {
          const double err = targets[i] - p[i];
          g[i] += go * (-2.0 * err - 2.0 * gamma * err / (targets[i] * targets[i]));
        }
      });
}

struct TrainReport {
  std::vector<double> train_loss;  // mean per-sample forecast loss, by epoch
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  std::string stop_reason;  // "early_stop" or "max_epoch"
};

namespace detail {

inline void batch_targets(std::span<const Sample> batch, std::vector<double>& out) {
  out.clear();
  out.reserve(batch.size());
  for (const Sample& s : batch) out.push_back(s.target_norm);
}

}  // namespace detail

/// Mean per-sample forecast loss over a sample set, without touching gradients
/// or batchnorm statistics.
inline double evaluate_loss(ModelParams& params, const SampleTable& table,
                            std::span<const Sample> samples) {
  if (samples.empty()) throw TrainingError("evaluate_loss: no samples");
  NoGrad guard;
  double total = 0.0;
  std::vector<double> targets;
  const std::size_t step = static_cast<std::size_t>(params.cfg.batch);
  for (std::size_t at = 0; at < samples.size(); at += step) {
    const std::span<const Sample> batch =
        samples.subspan(at, std::min(step, samples.size() - at));
    Tensor pred = model_forward(params, table, batch, false);
    detail::batch_targets(batch, targets);
    total += forecast_loss(pred, targets, params.cfg.gamma).item();
  }
  return total / static_cast<double>(samples.size());
}

/// Mini-batch Adam on the forecast loss with early stopping on validation; the
/// parameters end at the best validation epoch. Deterministic given the seed.
inline TrainReport train_model(ModelParams& params, const SampleTable& table,
                               std::vector<Sample> train, std::vector<Sample> val,
                               std::uint64_t seed) {
  if (train.empty()) throw TrainingError("train_model: empty training set");
  if (val.empty()) throw TrainingError("train_model: empty validation set");
  detail::check_sample_table(params, table);
  const ModelConfig& cfg = params.cfg;

  Rng rng(seed);
  if (cfg.max_train_samples > 0 &&
      static_cast<int>(train.size()) > cfg.max_train_samples) {
    rng.shuffle(train);
    train.resize(static_cast<std::size_t>(cfg.max_train_samples));
  }

  std::vector<NamedParam> named = params.named_parameters();
  std::vector<AdamState> opt(named.size());
  AdamConfig adam;
  adam.lr = cfg.lr;

  TrainReport report;
  std::vector<std::vector<double>> best_state = params.snapshot();
  double best_val = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Sample> batch_buf;
  std::vector<double> targets;

  // Batch boundaries: full batches plus the remainder; a lone trailing sample
  // is folded into the previous batch so batchnorm always sees >= 2 rows.
  const std::size_t bs = static_cast<std::size_t>(cfg.batch);
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  for (std::size_t at = 0; at < order.size(); at += bs) {
    bounds.emplace_back(at, std::min(bs, order.size() - at));
  }
  if (bounds.size() > 1 && bounds.back().second == 1) {
    bounds.pop_back();
    bounds.back().second += 1;
  }

  for (int epoch = 0; epoch < cfg.max_epoch; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t bi = 0; bi < bounds.size(); ++bi) {
      const auto [at, n] = bounds[bi];
      batch_buf.clear();
      for (std::size_t j = 0; j < n; ++j) batch_buf.push_back(train[order[at + j]]);
      for (auto& p : named) p.tensor.zero_grad();
      Tensor pred = model_forward(params, table, batch_buf, true);
      detail::batch_targets(batch_buf, targets);
      Tensor loss = forecast_loss(pred, targets, cfg.gamma);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw TrainingError("train_model: non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(bi));
      }
      epoch_loss += value;
      loss.backward();
      for (std::size_t pi = 0; pi < named.size(); ++pi) {
        adam_step(named[pi], opt[pi], adam);
      }
    }
    report.train_loss.push_back(epoch_loss / static_cast<double>(train.size()));
    const double val_loss = evaluate_loss(params, table, val);
    report.val_loss.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      report.best_epoch = epoch;
      best_state = params.snapshot();
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
  params.restore(best_state);
  return report;
}

/// Denormalized predictions, one per sample, independent of batch slicing.
inline std::vector<double> predict(ModelParams& params, const SampleTable& table,
                                   std::span<const Sample> samples,
                                   const Normalizer& norm) {
  if (norm.min != params.norm.min || norm.max != params.norm.max) {
    throw ConfigError("predict: normalizer (" + std::to_string(norm.min) + ", " +
                      std::to_string(norm.max) + ") does not match the trained (" +
                      std::to_string(params.norm.min) + ", " +
                      std::to_string(params.norm.max) + ")");
  }
  NoGrad guard;
  std::vector<double> out;
  out.reserve(samples.size());
  const std::size_t step = static_cast<std::size_t>(params.cfg.batch);
  for (std::size_t at = 0; at < samples.size(); at += step) {
    const std::span<const Sample> batch =
        samples.subspan(at, std::min(step, samples.size() - at));
    Tensor pred = model_forward(params, table, batch, false);
    for (double v : pred.values()) out.push_back(norm.denormalize(v));
  }
  return out;
}

}  // namespace gridcast
