#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridcast/baselines.hpp"
#include "gridcast/checkpoint.hpp"
#include "gridcast/config.hpp"
#include "gridcast/dtw.hpp"
#include "gridcast/features.hpp"
#include "gridcast/grid.hpp"
#include "gridcast/metrics.hpp"
#include "gridcast/model.hpp"
#include "gridcast/samples.hpp"
#include "gridcast/semantic.hpp"
#include "gridcast/storage.hpp"
#include "gridcast/synth.hpp"

// Command-line pipeline: ingest | synth | dtw-graph | embed | train |
// evaluate | predict. One JSON config file drives a whole experiment; flags
// override the file. Every subcommand writes `<output>.run.json` with the
// resolved config so the run can be reproduced exactly.

namespace gridcast {

namespace detail {

/// Records how the primary output of a run was produced. Deliberately free of
/// timestamps and machine state: rerunning must yield byte-identical files.
inline void write_run_manifest(const std::string& primary_output,
                               const std::string& command, const RunConfig& cfg) {
  const std::string path = primary_output + ".run.json";
  std::ofstream out(path);
  if (!out) throw DataError("cannot write run manifest '" + path + "'");
  nlohmann::json j{{"tool", "gridcast"},
                   {"version", kVersion},
                   {"command", command},
                   {"config", run_config_json(cfg)}};
  out << j.dump(2) << '\n';
}

inline void require_path(const std::string& value, const char* who, const char* what,
                         const char* flag) {
  if (value.empty()) {
    throw ConfigError(std::string(who) + ": " + what + " required (" + flag + ")");
  }
}

/// First interval of the held-out test window.
inline int test_start_interval(const DemandGrid& grid, int test_days, int history) {
  const int cut = grid.num_intervals - test_days * grid.spec.intervals_per_day();
  if (cut < history + 2) {
    throw DataError("split: " + std::to_string(test_days) + " test days leave " +
                    std::to_string(cut) + " intervals before the test window; need at least " +
                    std::to_string(history + 2));
  }
  return cut;
}

struct SampleSplit {
  std::vector<Sample> train, val, test;
};

/// Pre-test samples split chronologically into train and validation (the
/// validation share is the tail); samples whose target falls on or after the
/// cut form the test set.
inline SampleSplit split_samples(const std::vector<Sample>& all, int test_start,
                                 double val_fraction) {
  SampleSplit s;
  std::vector<Sample> pre;
  for (const Sample& x : all) {
    (x.end_t + 1 >= test_start ? s.test : pre).push_back(x);
  }
  if (pre.size() < 2) {
    throw DataError("split: only " + std::to_string(pre.size()) +
                    " samples before the test window; need at least 2");
  }
  std::size_t n_train =
      static_cast<std::size_t>((1.0 - val_fraction) * static_cast<double>(pre.size()));
  n_train = std::clamp<std::size_t>(n_train, 1, pre.size() - 1);
  s.train.assign(pre.begin(), pre.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(pre.begin() + static_cast<std::ptrdiff_t>(n_train), pre.end());
  return s;
}

/// Weekly demand patterns of the training range, normalized so the graph's
/// exp(-alpha * distance) weights stay well away from underflow.
inline std::vector<std::vector<double>> training_patterns(const DemandGrid& grid,
                                                          int train_T) {
  const int N = grid.spec.num_regions();
  const std::size_t count = static_cast<std::size_t>(train_T) * N;
  const Normalizer norm =
      fit_normalizer(grid.counts.begin(),
                     grid.counts.begin() + static_cast<std::ptrdiff_t>(count));
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = norm.normalize(static_cast<double>(grid.counts[i]));
  }
  const int ipd = grid.spec.intervals_per_day();
  return weekly_patterns(values, train_T, N, 7 * ipd,
                         week_slot_of(grid.start_time, grid.spec.interval_seconds(), ipd));
}

/// What kind of trained artifact a file holds: "model-checkpoint" or a
/// container kind such as "ha-baseline".
inline std::string artifact_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read '" + path + "'");
  char magic[13] = {};
  in.read(magic, sizeof magic);
  if (in.gcount() == static_cast<std::streamsize>(sizeof magic) &&
      std::string_view(magic, sizeof magic) == kCheckpointMagic) {
    return "model-checkpoint";
  }
  in.close();
  const Container c = read_container(path);
  return c.manifest.at("kind").get<std::string>();
}

/// Test-window predictions of whatever artifact the checkpoint path holds,
/// scored against the same held-out days.
struct ScoredRun {
  std::string method;
  std::vector<Sample> test;
  std::vector<double> pred;
  std::int64_t start_time = 0;
  std::int64_t interval_seconds = 0;
};

inline ScoredRun score_artifact(const RunConfig& cfg) {
  require_path(cfg.paths.data, "evaluate", "demand grid", "--data");
  require_path(cfg.paths.checkpoint, "evaluate", "trained artifact", "--checkpoint");
  const DemandGrid grid = load_demand_grid(cfg.paths.data);
  const std::string kind = artifact_kind(cfg.paths.checkpoint);

  ScoredRun run;
  run.start_time = grid.start_time;
  run.interval_seconds = grid.spec.interval_seconds();

  auto make_table = [&](const Normalizer& norm, int history) {
    ContextFeatures ctx = build_context(grid, norm);
    return build_samples(grid, norm, std::move(ctx), history, cfg.data.demand_threshold);
  };

  if (kind == "model-checkpoint") {
    ModelParams params = load_checkpoint(cfg.paths.checkpoint);
    run.method = variant_name(params.cfg.variant);
    const int cut = test_start_interval(grid, cfg.data.test_days, params.cfg.history);
    SampleTable table = make_table(params.norm, params.cfg.history);
    SampleSplit split = split_samples(table.samples, cut, cfg.data.val_fraction);
    run.test = std::move(split.test);
    run.pred = predict(params, table, run.test, params.norm);
  } else if (kind == "ha-baseline") {
    HistoricalAverage ha = load_ha(cfg.paths.checkpoint);
    run.method = "ha";
    if (ha.spec.interval_minutes != grid.spec.interval_minutes ||
        ha.spec.num_regions() != grid.spec.num_regions()) {
      throw DataError("evaluate: baseline trained on a " +
                      std::to_string(ha.spec.num_regions()) + "-region grid of " +
                      std::to_string(ha.spec.interval_minutes) +
                      "-minute intervals, data has " +
                      std::to_string(grid.spec.num_regions()) + " regions of " +
                      std::to_string(grid.spec.interval_minutes) + " minutes");
    }
    const int cut = test_start_interval(grid, cfg.data.test_days, 1);
    const int N = grid.spec.num_regions();
    const Normalizer norm = fit_normalizer(
        grid.counts.begin(),
        grid.counts.begin() + static_cast<std::ptrdiff_t>(cut) * N);
    SampleTable table = make_table(norm, 1);
    SampleSplit split = split_samples(table.samples, cut, cfg.data.val_fraction);
    run.test = std::move(split.test);
    run.pred = ha_predict_samples(ha, table, run.test);
  } else if (kind == "linear-baseline" || kind == "mlp-baseline") {
    const bool linear = kind == "linear-baseline";
    LinearBaseline lin;
    MlpBaseline mlp;
    Normalizer norm;
    int history = 0;
    if (linear) {
      lin = load_linear_baseline(cfg.paths.checkpoint);
      run.method = linear_kind_name(lin.kind);
      norm = lin.norm;
      history = lin.history;
    } else {
      mlp = load_mlp_baseline(cfg.paths.checkpoint);
      run.method = "mlp";
      norm = mlp.norm;
      history = mlp.history;
    }
    const int cut = test_start_interval(grid, cfg.data.test_days, history);
    SampleTable table = make_table(norm, history);
    SampleSplit split = split_samples(table.samples, cut, cfg.data.val_fraction);
    run.test = std::move(split.test);
    run.pred = linear ? predict_linear(lin, table, run.test)
                      : predict_mlp(mlp, table, run.test);
  } else {
    throw CheckpointError("'" + cfg.paths.checkpoint + "' holds a " + kind +
                          ", not a trained predictor");
  }
  return run;
}

// -- Subcommand pipelines -------------------------------------------------------

inline void run_ingest(const RunConfig& cfg) {
  require_path(cfg.paths.data, "ingest", "input records csv", "--data");
  require_path(cfg.paths.output, "ingest", "output path", "--output");
  std::ifstream in(cfg.paths.data);
  if (!in) throw DataError("ingest: cannot read '" + cfg.paths.data + "'");
  ParseReport report;
  std::vector<TaxiRequest> requests = parse_requests(in, cfg.grid.bbox, report);
  std::vector<TaxiRequest> kept = dedup_filter(requests, cfg.grid, cfg.data.spam_cap);
  DemandGrid grid = aggregate_demand(kept, cfg.grid);
  save_demand_grid(grid, cfg.paths.output);
  write_run_manifest(cfg.paths.output, "ingest", cfg);
  std::printf(
      "ingest: %lld rows accepted (%lld malformed, %lld out of bounds), "
      "%zu kept after filtering; grid %dx%d, %d intervals, %lld requests\n",
      static_cast<long long>(report.accepted), static_cast<long long>(report.malformed),
      static_cast<long long>(report.out_of_bounds), kept.size(), cfg.grid.width,
      cfg.grid.height, grid.num_intervals, static_cast<long long>(grid.total()));
}

inline void run_synth(const RunConfig& cfg) {
  require_path(cfg.paths.output, "synth", "output path", "--output");
  SynthConfig sc;
  sc.width = cfg.grid.width;
  sc.height = cfg.grid.height;
  sc.interval_minutes = cfg.grid.interval_minutes;
  sc.days = cfg.synth.days;
  sc.base_scale = cfg.synth.base_scale;
  sc.level_sd = cfg.synth.level_sd;
  sc.noise_sd = cfg.synth.noise_sd;
  sc.seed = cfg.seed;
  auto [grid, truth] = synth_generate(sc);
  (void)truth;
  save_demand_grid(grid, cfg.paths.output);
  write_run_manifest(cfg.paths.output, "synth", cfg);
  std::printf("synth: grid %dx%d, %d intervals, %lld requests -> %s\n", sc.width,
              sc.height, grid.num_intervals, static_cast<long long>(grid.total()),
              cfg.paths.output.c_str());
}

inline void run_dtw_graph(const RunConfig& cfg) {
  require_path(cfg.paths.data, "dtw-graph", "demand grid", "--data");
  require_path(cfg.paths.graph, "dtw-graph", "output path", "--graph");
  const DemandGrid grid = load_demand_grid(cfg.paths.data);
  const int cut = test_start_interval(grid, cfg.data.test_days, 1);
  const SemanticGraph graph =
      build_graph(training_patterns(grid, cut), cfg.graph.alpha, cfg.graph.band);
  save_graph(graph, cfg.paths.graph);
  write_run_manifest(cfg.paths.graph, "dtw-graph", cfg);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < graph.num_nodes; ++i) {
    for (int j = 0; j < graph.num_nodes; ++j) {
      if (i == j) continue;
      lo = std::min(lo, graph.w(i, j));
      hi = std::max(hi, graph.w(i, j));
    }
  }
  std::printf("dtw-graph: %d nodes, off-diagonal weights in [%.6f, %.6f] -> %s\n",
              graph.num_nodes, lo, hi, cfg.paths.graph.c_str());
}

inline void run_embed(const RunConfig& cfg) {
  require_path(cfg.paths.graph, "embed", "similarity graph", "--graph");
  require_path(cfg.paths.embeddings, "embed", "output path", "--embeddings");
  const SemanticGraph graph = load_graph(cfg.paths.graph);
  const EmbeddingTable table = line_embed(graph, cfg.embedding, cfg.seed);
  save_embeddings(table, cfg.paths.embeddings);
  write_run_manifest(cfg.paths.embeddings, "embed", cfg);
  std::printf("embed: %d nodes x %d dims -> %s\n", table.num_nodes(), table.dim,
              cfg.paths.embeddings.c_str());
}

inline void run_train(const RunConfig& cfg) {
  require_path(cfg.paths.data, "train", "demand grid", "--data");
  require_path(cfg.paths.checkpoint, "train", "checkpoint output path", "--checkpoint");
  const DemandGrid grid = load_demand_grid(cfg.paths.data);
  const int N = grid.spec.num_regions();

  if (cfg.variant == "ha") {
    const int cut = test_start_interval(grid, cfg.data.test_days, 1);
    HistoricalAverage ha =
        fit_ha(grid, cut, {.use_day_of_week = cfg.baseline.ha_use_day_of_week});
    save_ha(ha, cfg.paths.checkpoint);
    write_run_manifest(cfg.paths.checkpoint, "train", cfg);
    std::printf("train: ha over %d intervals (%s slots) -> %s\n", cut,
                cfg.baseline.ha_use_day_of_week ? "weekly" : "daily",
                cfg.paths.checkpoint.c_str());
    return;
  }

  ModelConfig mc = cfg.resolved_model();
  const int history = mc.history;
  const int cut = test_start_interval(grid, cfg.data.test_days, history);
  const Normalizer norm = fit_normalizer(
      grid.counts.begin(), grid.counts.begin() + static_cast<std::ptrdiff_t>(cut) * N);
  ContextFeatures ctx = build_context(grid, norm);
  SampleTable table =
      build_samples(grid, norm, std::move(ctx), history, cfg.data.demand_threshold);
  SampleSplit split = split_samples(table.samples, cut, cfg.data.val_fraction);

  TrainReport report;
  if (is_model_variant(cfg.variant)) {
    EmbeddingTable emb;
    if (variant_has_semantic(mc.variant)) {
      require_path(cfg.paths.embeddings, "train", "embedding table", "--embeddings");
      emb = load_embeddings(cfg.paths.embeddings);
      if (emb.num_nodes() != N) {
        throw DataError("train: embedding table covers " +
                        std::to_string(emb.num_nodes()) + " regions, grid has " +
                        std::to_string(N));
      }
      mc.embed_dim = emb.dim;  // the stored table decides the width
      mc.validate();
    }
    ModelParams params;
    Rng rng(cfg.seed);
    params.init(mc, table.context.dim, emb, norm, rng);
    report = train_model(params, table, split.train, split.val, cfg.seed);
    save_checkpoint(params, cfg.paths.checkpoint);
  } else {
    BaselineTrainConfig bt;
    bt.lr = mc.lr;
    bt.batch = mc.batch;
    bt.max_epoch = mc.max_epoch;
    bt.early_stop = mc.early_stop;
    bt.gamma = mc.gamma;
    bt.max_train_samples = mc.max_train_samples;
    if (cfg.variant == "mlp") {
      auto [model, rep] = fit_mlp_baseline(table, split.train, split.val,
                                           cfg.baseline.mlp_widths, norm, bt, cfg.seed);
      save_mlp_baseline(model, cfg.paths.checkpoint);
      report = std::move(rep);
    } else {
      auto [model, rep] = fit_linear_baseline(
          table, split.train, split.val, linear_kind_from_name(cfg.variant),
          cfg.baseline.reg_weight, norm, bt, cfg.seed);
      save_linear_baseline(model, cfg.paths.checkpoint);
      report = std::move(rep);
    }
  }
  write_run_manifest(cfg.paths.checkpoint, "train", cfg);

  if (!cfg.paths.output.empty()) {
    nlohmann::json j{{"variant", cfg.variant},
                     {"train_loss", report.train_loss},
                     {"val_loss", report.val_loss},
                     {"best_epoch", report.best_epoch},
                     {"best_val_loss", report.best_val_loss},
                     {"stop_reason", report.stop_reason}};
    std::ofstream out(cfg.paths.output);
    if (!out) throw DataError("train: cannot write '" + cfg.paths.output + "'");
    out << j.dump(2) << '\n';
  }
  std::printf(
      "train: %s on %zu samples (%zu val), %zu epochs, best epoch %d "
      "(val loss %.6f, %s) -> %s\n",
      cfg.variant.c_str(), split.train.size(), split.val.size(),
      report.train_loss.size(), report.best_epoch, report.best_val_loss,
      report.stop_reason.c_str(), cfg.paths.checkpoint.c_str());
}

inline void run_evaluate(const RunConfig& cfg) {
  require_path(cfg.paths.output, "evaluate", "report output path", "--output");
  const ScoredRun run = score_artifact(cfg);
  const MetricReport r = evaluate_predictions(run.pred, run.test);
  nlohmann::json j{{"method", run.method}, {"metrics", metric_report_json(r)}};
  std::ofstream out(cfg.paths.output);
  if (!out) throw DataError("evaluate: cannot write '" + cfg.paths.output + "'");
  out << j.dump(2) << '\n';
  write_run_manifest(cfg.paths.output, "evaluate", cfg);
  std::fputs(render_metric_table({{run.method, r}}).c_str(), stdout);
}

inline void run_predict(const RunConfig& cfg) {
  require_path(cfg.paths.output, "predict", "predictions output path", "--output");
  const ScoredRun run = score_artifact(cfg);
  std::ofstream out(cfg.paths.output);
  if (!out) throw DataError("predict: cannot write '" + cfg.paths.output + "'");
  out << "region,target_interval,target_time,predicted,actual\n";
  for (std::size_t i = 0; i < run.test.size(); ++i) {
    const Sample& s = run.test[i];
    const std::int64_t target_t = s.end_t + 1;
    char line[160];
    std::snprintf(line, sizeof line, "%d,%lld,%lld,%.17g,%.17g\n", s.region,
                  static_cast<long long>(target_t),
                  static_cast<long long>(run.start_time +
                                         target_t * run.interval_seconds),
                  run.pred[i], s.target_raw);
    out << line;
  }
  write_run_manifest(cfg.paths.output, "predict", cfg);
  std::printf("predict: %s wrote %zu rows -> %s\n", run.method.c_str(),
              run.test.size(), cfg.paths.output.c_str());
}

/// `--config` must take effect before CLI11 binds option defaults, so the
/// file path is scraped from the raw arguments up front.
inline std::string prescan_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

}  // namespace detail

/// Full dispatch. Returns 0 on success, 1 when a pipeline fails, and 2 for
/// usage errors (unknown subcommand or flag), printing usage text.
inline int run_cli(const std::vector<std::string>& args) {
  RunConfig cfg;
  try {
    const std::string config_path = detail::prescan_config_path(args);
    if (!config_path.empty()) cfg = load_run_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "gridcast: " << e.what() << '\n';
    return 1;
  }

  CLI::App app{"Spatio-temporal demand forecasting over city grids"};
  app.name("gridcast");
  app.require_subcommand(1);
  std::string config_path_display;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path_display, "JSON config file (flags override it)");
    cmd->add_option("--seed", cfg.seed, "random seed for every derived stream");
  };
  auto add_grid_shape = [&](CLI::App* cmd) {
    cmd->add_option("--width", cfg.grid.width, "grid cells along longitude");
    cmd->add_option("--height", cfg.grid.height, "grid cells along latitude");
    cmd->add_option("--interval-minutes", cfg.grid.interval_minutes,
                    "interval length; must divide 1440");
  };
  auto add_split = [&](CLI::App* cmd) {
    cmd->add_option("--test-days", cfg.data.test_days, "held-out days at the end");
    cmd->add_option("--threshold", cfg.data.demand_threshold,
                    "drop samples with raw target demand below this");
  };

  CLI::App* ingest = app.add_subcommand("ingest", "aggregate request records into a demand grid");
  add_common(ingest);
  add_grid_shape(ingest);
  ingest->add_option("--data", cfg.paths.data, "csv of timestamp,lat,lng,user_id rows");
  ingest->add_option("--output", cfg.paths.output, "demand grid file to write");
  ingest->add_option("--lat-min", cfg.grid.bbox.lat_min, "bounding box south edge");
  ingest->add_option("--lat-max", cfg.grid.bbox.lat_max, "bounding box north edge");
  ingest->add_option("--lng-min", cfg.grid.bbox.lng_min, "bounding box west edge");
  ingest->add_option("--lng-max", cfg.grid.bbox.lng_max, "bounding box east edge");
  ingest->add_option("--spam-cap", cfg.data.spam_cap, "per-user daily request cap");
  ingest->callback([&] { cfg.validate(); detail::run_ingest(cfg); });

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic demand grid");
  add_common(synth);
  add_grid_shape(synth);
  synth->add_option("--days", cfg.synth.days, "days of demand to generate");
  synth->add_option("--base-scale", cfg.synth.base_scale, "demand amplitude multiplier");
  synth->add_option("--level-sd", cfg.synth.level_sd, "slow level-field noise");
  synth->add_option("--noise-sd", cfg.synth.noise_sd, "iid count noise");
  synth->add_option("--output", cfg.paths.output, "demand grid file to write");
  synth->callback([&] { cfg.validate(); detail::run_synth(cfg); });

  CLI::App* dtw = app.add_subcommand("dtw-graph",
                                     "pattern-similarity graph from a demand grid");
  add_common(dtw);
  dtw->add_option("--data", cfg.paths.data, "demand grid file");
  dtw->add_option("--graph", cfg.paths.graph, "similarity graph file to write");
  dtw->add_option("--alpha", cfg.graph.alpha, "distance-to-weight sharpness");
  dtw->add_option("--band", cfg.graph.band, "warping band half-width; 0 = none");
  dtw->add_option("--test-days", cfg.data.test_days,
                  "held-out days excluded from the patterns");
  dtw->callback([&] { cfg.validate(); detail::run_dtw_graph(cfg); });

  CLI::App* embed = app.add_subcommand("embed", "node embeddings of a similarity graph");
  add_common(embed);
  embed->add_option("--graph", cfg.paths.graph, "similarity graph file");
  embed->add_option("--embeddings", cfg.paths.embeddings, "embedding table file to write");
  embed->add_option("--dim", cfg.embedding.dim, "embedding width");
  embed->add_option("--samples", cfg.embedding.samples, "edge draws");
  embed->add_option("--negatives", cfg.embedding.negatives, "negative samples per draw");
  embed->add_option("--lr0", cfg.embedding.lr0, "initial learning rate");
  embed->callback([&] { cfg.validate(); detail::run_embed(cfg); });

  CLI::App* train = app.add_subcommand("train", "fit a forecasting model or baseline");
  add_common(train);
  add_split(train);
  train->add_option("--data", cfg.paths.data, "demand grid file");
  train->add_option("--embeddings", cfg.paths.embeddings,
                    "embedding table (semantic variants)");
  train->add_option("--checkpoint", cfg.paths.checkpoint, "trained artifact to write");
  train->add_option("--output", cfg.paths.output, "loss-curve report JSON (optional)");
  train->add_option("--variant", cfg.variant,
                    "temporal | temporal+semantic | temporal+neighbor | "
                    "temporal+lcnn | full | ha | olsr | ridge | lasso | mlp");
  train->add_option("--history", cfg.model.history, "input sequence length");
  train->add_option("--hidden", cfg.model.hidden, "recurrent state width");
  train->add_option("--lr", cfg.model.lr, "learning rate");
  train->add_option("--batch", cfg.model.batch, "mini-batch size");
  train->add_option("--max-epoch", cfg.model.max_epoch, "epoch budget");
  train->add_option("--early-stop", cfg.model.early_stop,
                    "epochs without validation improvement before stopping");
  train->add_option("--gamma", cfg.model.gamma, "relative-error loss weight");
  train->add_option("--max-train-samples", cfg.model.max_train_samples,
                    "subsample cap on training samples; 0 = all");
  train->add_option("--val-fraction", cfg.data.val_fraction,
                    "tail share of pre-test samples used for validation");
  train->add_option("--reg-weight", cfg.baseline.reg_weight,
                    "ridge / lasso penalty strength");
  train->callback([&] { cfg.validate(); detail::run_train(cfg); });

  CLI::App* evaluate = app.add_subcommand("evaluate",
                                          "score a trained artifact on held-out days");
  add_common(evaluate);
  add_split(evaluate);
  evaluate->add_option("--data", cfg.paths.data, "demand grid file");
  evaluate->add_option("--checkpoint", cfg.paths.checkpoint, "trained artifact");
  evaluate->add_option("--output", cfg.paths.output, "metric report JSON to write");
  evaluate->callback([&] { cfg.validate(); detail::run_evaluate(cfg); });

  CLI::App* predict = app.add_subcommand("predict",
                                         "per-sample test-window predictions as csv");
  add_common(predict);
  add_split(predict);
  predict->add_option("--data", cfg.paths.data, "demand grid file");
  predict->add_option("--checkpoint", cfg.paths.checkpoint, "trained artifact");
  predict->add_option("--output", cfg.paths.output, "csv file to write");
  predict->callback([&] { cfg.validate(); detail::run_predict(cfg); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::Success& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "gridcast: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gridcast: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace gridcast
