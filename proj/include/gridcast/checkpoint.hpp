#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridcast/common.hpp"
#include "gridcast/model.hpp"
#include "gridcast/storage.hpp"

// Model checkpoint: magic string, format version, a JSON manifest describing
// hyperparameters / normalizer / tensor layout, then the raw little-endian
// float64 arrays in manifest order. Round trips bit-exactly.

namespace gridcast {

inline constexpr char kCheckpointMagic[] = "GRIDCAST-CKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline nlohmann::json model_config_json(const ModelConfig& cfg) {
  return nlohmann::json{
      {"variant", variant_name(cfg.variant)},
      {"patch", {{"size", cfg.patch.S},
                 {"layers", cfg.patch.K},
                 {"filters", cfg.patch.filters},
                 {"out_dim", cfg.patch.d},
                 {"kernel", cfg.patch.tau}}},
      {"history", cfg.history},
      {"hidden", cfg.hidden},
      {"embed_dim", cfg.embed_dim},
      {"semantic_dim", cfg.semantic_dim},
      {"gamma", cfg.gamma},
      {"lr", cfg.lr},
      {"batch", cfg.batch},
      {"max_epoch", cfg.max_epoch},
      {"early_stop", cfg.early_stop},
      {"max_train_samples", cfg.max_train_samples},
      {"per_step_cnn", cfg.per_step_cnn},
      {"finetune_embeddings", cfg.finetune_embeddings},
  };
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig cfg;
    cfg.variant = variant_from_name(j.at("variant").get<std::string>());
    const auto& p = j.at("patch");
    cfg.patch.S = p.at("size").get<int>();
    cfg.patch.K = p.at("layers").get<int>();
    cfg.patch.filters = p.at("filters").get<int>();
    cfg.patch.d = p.at("out_dim").get<int>();
    cfg.patch.tau = p.at("kernel").get<int>();
    cfg.history = j.at("history").get<int>();
    cfg.hidden = j.at("hidden").get<int>();
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.semantic_dim = j.at("semantic_dim").get<int>();
    cfg.gamma = j.at("gamma").get<double>();
    cfg.lr = j.at("lr").get<double>();
    cfg.batch = j.at("batch").get<int>();
    cfg.max_epoch = j.at("max_epoch").get<int>();
    cfg.early_stop = j.at("early_stop").get<int>();
    cfg.max_train_samples = j.at("max_train_samples").get<int>();
    cfg.per_step_cnn = j.at("per_step_cnn").get<bool>();
    cfg.finetune_embeddings = j.at("finetune_embeddings").get<bool>();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint manifest: ") + e.what());
  }
}

}  // namespace detail

inline void save_checkpoint(ModelParams& params, const std::string& path) {
  nlohmann::json manifest;
  manifest["config"] = detail::model_config_json(params.cfg);
  manifest["context_dim"] = params.context_dim;
  manifest["num_regions"] = params.num_regions;
  manifest["normalizer"] = {{"min", params.norm.min}, {"max", params.norm.max}};

  nlohmann::json tensors = nlohmann::json::array();
  std::string blob;
  for (auto& p : params.named_parameters()) {
    tensors.push_back({{"name", p.name},
                       {"kind", "param"},
                       {"shape", p.tensor.shape()},
                       {"count", p.tensor.size()}});
    for (double v : p.tensor.values()) detail::put_f64_le(blob, v);
  }
  for (auto& b : params.named_buffers()) {
    tensors.push_back({{"name", b.name},
                       {"kind", "buffer"},
                       {"count", b.values->size()}});
    for (double v : *b.values) detail::put_f64_le(blob, v);
  }
  manifest["tensors"] = std::move(tensors);

  const std::string text = manifest.dump();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  detail::put_u32_le(out, kCheckpointVersion);
  detail::put_u64_le(out, text.size());
  out += text;
  out += blob;
  detail::write_file_bytes(path, out);
}

inline ModelParams load_checkpoint(const std::string& path) {
  const std::string buf = detail::read_file_bytes(path);
  const std::size_t magic_len = sizeof(kCheckpointMagic) - 1;
  if (buf.size() < magic_len ||
      std::memcmp(buf.data(), kCheckpointMagic, magic_len) != 0) {
    throw CheckpointError("'" + path + "' is not a checkpoint file (bad magic)");
  }
  detail::ByteReader in{buf, magic_len};
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t manifest_len = in.u64();
  in.need(manifest_len);
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(buf.substr(in.at, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("unparseable checkpoint manifest: ") + e.what());
  }
  in.at += manifest_len;

  ModelConfig cfg;
  int context_dim = 0;
  int num_regions = 0;
  Normalizer norm;
  try {
    cfg = detail::model_config_from_json(manifest.at("config"));
    context_dim = manifest.at("context_dim").get<int>();
    num_regions = manifest.at("num_regions").get<int>();
    norm.min = manifest.at("normalizer").at("min").get<double>();
    norm.max = manifest.at("normalizer").at("max").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint manifest: ") + e.what());
  }

  // Allocate the full parameter structure, then overwrite every value from
  // the stored arrays; names and sizes must line up exactly.
  ModelParams params;
  EmbeddingTable table;
  if (variant_has_semantic(cfg.variant)) {
    table.dim = cfg.embed_dim;
    table.vectors.assign(static_cast<std::size_t>(num_regions) * cfg.embed_dim, 0.0);
  }
  Rng scratch(0);
  try {
    params.init(cfg, context_dim, table, norm, scratch);
  } catch (const std::runtime_error& e) {
    throw CheckpointError(std::string("checkpoint hyperparameters rejected: ") + e.what());
  }

  struct Entry {
    std::string name;
    std::vector<double>* values;
  };
  std::vector<Entry> entries;
  for (auto& p : params.named_parameters()) entries.push_back({p.name, &p.tensor.values()});
  for (auto& b : params.named_buffers()) entries.push_back({b.name, b.values});

  const auto& tensors = manifest.at("tensors");
  if (!tensors.is_array() || tensors.size() != entries.size()) {
    throw CheckpointError("checkpoint lists " + std::to_string(tensors.size()) +
                          " tensors, model has " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    std::string name;
    std::uint64_t count = 0;
    try {
      name = tensors[i].at("name").get<std::string>();
      count = tensors[i].at("count").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("bad tensor manifest entry: ") + e.what());
    }
    if (name != entries[i].name) {
      throw CheckpointError("tensor order mismatch: stored '" + name + "', expected '" +
                            entries[i].name + "'");
    }
    if (count != entries[i].values->size()) {
      throw CheckpointError("tensor '" + name + "' holds " + std::to_string(count) +
                            " values, model expects " +
                            std::to_string(entries[i].values->size()));
    }
    for (auto& v : *entries[i].values) v = in.f64();
  }
  if (in.at != buf.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(buf.size() - in.at) +
                          " trailing bytes");
  }
  return params;
}

}  // namespace gridcast
