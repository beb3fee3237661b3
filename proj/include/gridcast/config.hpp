#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridcast/common.hpp"
#include "gridcast/grid.hpp"
#include "gridcast/model.hpp"
#include "gridcast/semantic.hpp"

// Run configuration: one JSON document carrying paths, grid geometry, data
// handling, graph and embedding settings, and every model or baseline
// hyperparameter. Unknown keys are rejected so typos fail loudly; the
// defaults reproduce the reference experiment setup. Schema version 1.

namespace gridcast {

inline constexpr int kConfigSchemaVersion = 1;

struct PathsConfig {
  std::string data;         // input: csv for ingest, containers elsewhere
  std::string output;       // primary output of the subcommand
  std::string checkpoint;   // trained model or baseline artifact
  std::string graph;        // semantic-graph container
  std::string embeddings;   // embedding-table container
};

struct DataConfig {
  std::int64_t demand_threshold = 10;  // samples below this raw demand dropped
  int spam_cap = 100;                  // per-user daily request cap at ingest
  int test_days = 7;                   // held-out tail of the grid
  double val_fraction = 0.1;           // tail share of pre-test samples

  void validate() const {
    if (demand_threshold < 0) throw ConfigError("config: data.demand_threshold < 0");
    if (spam_cap < 1) throw ConfigError("config: data.spam_cap must be >= 1");
    if (test_days < 1) throw ConfigError("config: data.test_days must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
      throw ConfigError("config: data.val_fraction must lie in (0, 1)");
    }
  }
};

struct SynthSection {
  int days = 35;
  double base_scale = 1.0;
  double level_sd = 0.25;
  double noise_sd = 2.0;

  void validate() const {
    if (days < 1) throw ConfigError("config: synth.days must be >= 1");
    if (base_scale <= 0.0) throw ConfigError("config: synth.base_scale must be > 0");
    if (level_sd < 0.0 || noise_sd < 0.0) {
      throw ConfigError("config: synth noise levels must be >= 0");
    }
  }
};

struct GraphSection {
  double alpha = 1.0;  // edge weight exp(-alpha * dtw)
  int band = 0;        // Sakoe-Chiba band; 0 = unconstrained

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("config: graph.alpha must be > 0");
    if (band < 0) throw ConfigError("config: graph.band must be >= 0");
  }
};

struct BaselineSection {
  double reg_weight = 0.0;                      // ridge / lasso strength
  std::vector<int> mlp_widths{128, 128, 64, 64};
  bool ha_use_day_of_week = true;

  void validate() const {
    if (reg_weight < 0.0) throw ConfigError("config: baseline.reg_weight < 0");
    if (mlp_widths.empty()) throw ConfigError("config: baseline.mlp_widths empty");
    for (int w : mlp_widths) {
      if (w < 1) throw ConfigError("config: baseline.mlp_widths entries must be >= 1");
    }
  }
};

inline const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{
      "temporal", "temporal+semantic", "temporal+neighbor", "temporal+lcnn",
      "full",     "ha",                "olsr",              "ridge",
      "lasso",    "mlp"};
  return names;
}

inline bool is_model_variant(const std::string& name) {
  return name == "temporal" || name == "temporal+semantic" ||
         name == "temporal+neighbor" || name == "temporal+lcnn" || name == "full";
}

struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 1;
  std::string variant = "full";
  int threads = 1;  // reserved; execution is single-threaded today
  PathsConfig paths;
  GridSpec grid{{30.0, 30.2, 120.0, 120.2}, 20, 20, 30};
  DataConfig data;
  SynthSection synth;
  GraphSection graph;
  LineConfig embedding;   // dim doubles as the model's embed_dim
  ModelConfig model;
  BaselineSection baseline;

  /// Model hyperparameters with variant and embedding dim resolved in.
  ModelConfig resolved_model() const {
    ModelConfig m = model;
    m.embed_dim = embedding.dim;
    if (is_model_variant(variant)) m.variant = variant_from_name(variant);
    return m;
  }

  void validate() const {
    if (schema_version != kConfigSchemaVersion) {
      throw ConfigError("config: schema_version " + std::to_string(schema_version) +
                        " unsupported (expected " +
                        std::to_string(kConfigSchemaVersion) + ")");
    }
    bool known = false;
    for (const std::string& v : variant_names()) known = known || v == variant;
    if (!known) throw ConfigError("config: unknown variant '" + variant + "'");
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
    grid.validate();
    data.validate();
    synth.validate();
    graph.validate();
    if (embedding.dim < 1) throw ConfigError("config: embedding.dim must be >= 1");
    if (embedding.samples < 1) throw ConfigError("config: embedding.samples must be >= 1");
    if (embedding.negatives < 0) throw ConfigError("config: embedding.negatives < 0");
    if (!(embedding.lr0 > 0.0)) throw ConfigError("config: embedding.lr0 must be > 0");
    baseline.validate();
    if (is_model_variant(variant)) resolved_model().validate();
  }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw ConfigError("config: " + (where.empty() ? std::string("document") : where) +
                      " must be a JSON object");
  }
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) {
      throw ConfigError("config: unknown key '" +
                        (where.empty() ? item.key() : where + "." + item.key()) + "'");
    }
  }
}

template <typename T>
void fetch(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: bad value for '" +
                      (where.empty() ? std::string(key) : where + "." + key) + "'");
  }
}

inline void apply_grid(const nlohmann::json& j, GridSpec& g) {
  check_keys(j, "grid", {"lat_min", "lat_max", "lng_min", "lng_max", "width",
                         "height", "interval_minutes"});
  fetch(j, "lat_min", g.bbox.lat_min, "grid");
  fetch(j, "lat_max", g.bbox.lat_max, "grid");
  fetch(j, "lng_min", g.bbox.lng_min, "grid");
  fetch(j, "lng_max", g.bbox.lng_max, "grid");
  fetch(j, "width", g.width, "grid");
  fetch(j, "height", g.height, "grid");
  fetch(j, "interval_minutes", g.interval_minutes, "grid");
}

inline void apply_model(const nlohmann::json& j, ModelConfig& m) {
  check_keys(j, "model",
             {"history", "hidden", "semantic_dim", "gamma", "lr", "batch",
              "max_epoch", "early_stop", "max_train_samples", "per_step_cnn",
              "finetune_embeddings", "patch"});
  fetch(j, "history", m.history, "model");
  fetch(j, "hidden", m.hidden, "model");
  fetch(j, "semantic_dim", m.semantic_dim, "model");
  fetch(j, "gamma", m.gamma, "model");
  fetch(j, "lr", m.lr, "model");
  fetch(j, "batch", m.batch, "model");
  fetch(j, "max_epoch", m.max_epoch, "model");
  fetch(j, "early_stop", m.early_stop, "model");
  fetch(j, "max_train_samples", m.max_train_samples, "model");
  fetch(j, "per_step_cnn", m.per_step_cnn, "model");
  fetch(j, "finetune_embeddings", m.finetune_embeddings, "model");
  if (j.contains("patch")) {
    const nlohmann::json& p = j.at("patch");
    check_keys(p, "model.patch", {"size", "layers", "filters", "out_dim", "kernel"});
    fetch(p, "size", m.patch.S, "model.patch");
    fetch(p, "layers", m.patch.K, "model.patch");
    fetch(p, "filters", m.patch.filters, "model.patch");
    fetch(p, "out_dim", m.patch.d, "model.patch");
    fetch(p, "kernel", m.patch.tau, "model.patch");
  }
}

}  // namespace detail

/// Overlays a parsed JSON document onto `cfg`. Absent keys keep their current
/// values; unknown keys anywhere are an error.
inline void apply_run_config(RunConfig& cfg, const nlohmann::json& j) {
  detail::check_keys(j, "", {"schema_version", "seed", "variant", "threads", "paths",
                             "grid", "data", "synth", "graph", "embedding", "model",
                             "baseline"});
  detail::fetch(j, "schema_version", cfg.schema_version, "");
  detail::fetch(j, "seed", cfg.seed, "");
  detail::fetch(j, "variant", cfg.variant, "");
  detail::fetch(j, "threads", cfg.threads, "");
  if (j.contains("paths")) {
    const nlohmann::json& p = j.at("paths");
    detail::check_keys(p, "paths", {"data", "output", "checkpoint", "graph", "embeddings"});
    detail::fetch(p, "data", cfg.paths.data, "paths");
    detail::fetch(p, "output", cfg.paths.output, "paths");
    detail::fetch(p, "checkpoint", cfg.paths.checkpoint, "paths");
    detail::fetch(p, "graph", cfg.paths.graph, "paths");
    detail::fetch(p, "embeddings", cfg.paths.embeddings, "paths");
  }
  if (j.contains("grid")) detail::apply_grid(j.at("grid"), cfg.grid);
  if (j.contains("data")) {
    const nlohmann::json& d = j.at("data");
    detail::check_keys(d, "data",
                       {"demand_threshold", "spam_cap", "test_days", "val_fraction"});
    detail::fetch(d, "demand_threshold", cfg.data.demand_threshold, "data");
    detail::fetch(d, "spam_cap", cfg.data.spam_cap, "data");
    detail::fetch(d, "test_days", cfg.data.test_days, "data");
    detail::fetch(d, "val_fraction", cfg.data.val_fraction, "data");
  }
  if (j.contains("synth")) {
    const nlohmann::json& s = j.at("synth");
    detail::check_keys(s, "synth", {"days", "base_scale", "level_sd", "noise_sd"});
    detail::fetch(s, "days", cfg.synth.days, "synth");
    detail::fetch(s, "base_scale", cfg.synth.base_scale, "synth");
    detail::fetch(s, "level_sd", cfg.synth.level_sd, "synth");
    detail::fetch(s, "noise_sd", cfg.synth.noise_sd, "synth");
  }
  if (j.contains("graph")) {
    const nlohmann::json& g = j.at("graph");
    detail::check_keys(g, "graph", {"alpha", "band"});
    detail::fetch(g, "alpha", cfg.graph.alpha, "graph");
    detail::fetch(g, "band", cfg.graph.band, "graph");
  }
  if (j.contains("embedding")) {
    const nlohmann::json& e = j.at("embedding");
    detail::check_keys(e, "embedding", {"dim", "samples", "negatives", "lr0"});
    detail::fetch(e, "dim", cfg.embedding.dim, "embedding");
    detail::fetch(e, "samples", cfg.embedding.samples, "embedding");
    detail::fetch(e, "negatives", cfg.embedding.negatives, "embedding");
    detail::fetch(e, "lr0", cfg.embedding.lr0, "embedding");
  }
  if (j.contains("model")) detail::apply_model(j.at("model"), cfg.model);
  if (j.contains("baseline")) {
    const nlohmann::json& b = j.at("baseline");
    detail::check_keys(b, "baseline", {"reg_weight", "mlp_widths", "ha_use_day_of_week"});
    detail::fetch(b, "reg_weight", cfg.baseline.reg_weight, "baseline");
    detail::fetch(b, "mlp_widths", cfg.baseline.mlp_widths, "baseline");
    detail::fetch(b, "ha_use_day_of_week", cfg.baseline.ha_use_day_of_week, "baseline");
  }
}

/// The full resolved configuration; applying it back reproduces `cfg` exactly.
inline nlohmann::json run_config_json(const RunConfig& cfg) {
  return nlohmann::json{
      {"schema_version", cfg.schema_version},
      {"seed", cfg.seed},
      {"variant", cfg.variant},
      {"threads", cfg.threads},
      {"paths",
       {{"data", cfg.paths.data},
        {"output", cfg.paths.output},
        {"checkpoint", cfg.paths.checkpoint},
        {"graph", cfg.paths.graph},
        {"embeddings", cfg.paths.embeddings}}},
      {"grid",
       {{"lat_min", cfg.grid.bbox.lat_min},
        {"lat_max", cfg.grid.bbox.lat_max},
        {"lng_min", cfg.grid.bbox.lng_min},
        {"lng_max", cfg.grid.bbox.lng_max},
        {"width", cfg.grid.width},
        {"height", cfg.grid.height},
        {"interval_minutes", cfg.grid.interval_minutes}}},
      {"data",
       {{"demand_threshold", cfg.data.demand_threshold},
        {"spam_cap", cfg.data.spam_cap},
        {"test_days", cfg.data.test_days},
        {"val_fraction", cfg.data.val_fraction}}},
      {"synth",
       {{"days", cfg.synth.days},
        {"base_scale", cfg.synth.base_scale},
        {"level_sd", cfg.synth.level_sd},
        {"noise_sd", cfg.synth.noise_sd}}},
      {"graph", {{"alpha", cfg.graph.alpha}, {"band", cfg.graph.band}}},
      {"embedding",
       {{"dim", cfg.embedding.dim},
        {"samples", cfg.embedding.samples},
        {"negatives", cfg.embedding.negatives},
        {"lr0", cfg.embedding.lr0}}},
      {"model",
       {{"history", cfg.model.history},
        {"hidden", cfg.model.hidden},
        {"semantic_dim", cfg.model.semantic_dim},
        {"gamma", cfg.model.gamma},
        {"lr", cfg.model.lr},
        {"batch", cfg.model.batch},
        {"max_epoch", cfg.model.max_epoch},
        {"early_stop", cfg.model.early_stop},
        {"max_train_samples", cfg.model.max_train_samples},
        {"per_step_cnn", cfg.model.per_step_cnn},
        {"finetune_embeddings", cfg.model.finetune_embeddings},
        {"patch",
         {{"size", cfg.model.patch.S},
          {"layers", cfg.model.patch.K},
          {"filters", cfg.model.patch.filters},
          {"out_dim", cfg.model.patch.d},
          {"kernel", cfg.model.patch.tau}}}}},
      {"baseline",
       {{"reg_weight", cfg.baseline.reg_weight},
        {"mlp_widths", cfg.baseline.mlp_widths},
        {"ha_use_day_of_week", cfg.baseline.ha_use_day_of_week}}},
  };
}

/// Reads and overlays a config file onto the defaults. The result is not yet
/// validated: the CLI applies flag overrides first, then validates.
inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("config: cannot read '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  RunConfig cfg;
  apply_run_config(cfg, j);
  return cfg;
}

}  // namespace gridcast
