#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridcast/common.hpp"
#include "gridcast/features.hpp"
#include "gridcast/grid.hpp"
#include "gridcast/semantic.hpp"

// Binary container for pipeline artifacts: magic string, format version,
// JSON manifest, then little-endian float64 arrays in manifest order.
// Writes are deterministic — no timestamps, no environment state — so equal
// inputs produce byte-identical files.

namespace gridcast {

inline constexpr char kContainerMagic[] = "GRIDCAST-DATA";
inline constexpr std::uint32_t kContainerVersion = 1;

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64_le(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64_le(out, bits);
}

/// Cursor over a loaded byte buffer; every read is bounds-checked.
struct ByteReader {
  const std::string& buf;
  std::size_t at = 0;

  void need(std::uint64_t n) const {
    if (n > buf.size() - at) throw CheckpointError("truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    }
    at += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
    }
    at += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
};

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CheckpointError("cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(file)),
                     std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw CheckpointError("cannot open '" + path + "' for writing");
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw CheckpointError("short write to '" + path + "'");
}

}  // namespace detail

struct NamedArray {
  std::string name;
  std::vector<double> values;
};

struct Container {
  nlohmann::json manifest;
  std::vector<NamedArray> arrays;

  const std::vector<double>& array(const std::string& name) const {
    for (const auto& a : arrays) {
      if (a.name == name) return a.values;
    }
    throw CheckpointError("container has no array '" + name + "'");
  }
};

/// Writes manifest plus arrays; the manifest must already carry a "kind" key
/// naming the payload. Array names and lengths are recorded in the manifest.
inline void write_container(
    const std::string& path, nlohmann::json manifest,
    const std::vector<std::pair<std::string, const std::vector<double>*>>& arrays) {
  if (!manifest.contains("kind")) {
    throw CheckpointError("container manifest needs a 'kind'");
  }
  nlohmann::json index = nlohmann::json::array();
  std::string blob;
  for (const auto& [name, values] : arrays) {
    index.push_back({{"name", name}, {"count", values->size()}});
    for (double v : *values) detail::put_f64_le(blob, v);
  }
  manifest["arrays"] = std::move(index);

  const std::string text = manifest.dump();
  std::string out(kContainerMagic, sizeof(kContainerMagic) - 1);
  detail::put_u32_le(out, kContainerVersion);
  detail::put_u64_le(out, text.size());
  out += text;
  out += blob;
  detail::write_file_bytes(path, out);
}

/// Reads a container back; if expect_kind is non-empty the manifest's kind
/// must match it.
inline Container read_container(const std::string& path,
                                const std::string& expect_kind = "") {
  const std::string buf = detail::read_file_bytes(path);
  const std::size_t magic_len = sizeof(kContainerMagic) - 1;
  if (buf.size() < magic_len ||
      std::memcmp(buf.data(), kContainerMagic, magic_len) != 0) {
    throw CheckpointError("'" + path + "' is not a data container (bad magic)");
  }
  detail::ByteReader in{buf, magic_len};
  const std::uint32_t version = in.u32();
  if (version != kContainerVersion) {
    throw CheckpointError("unsupported container version " + std::to_string(version));
  }
  const std::uint64_t manifest_len = in.u64();
  in.need(manifest_len);
  Container c;
  try {
    c.manifest = nlohmann::json::parse(buf.substr(in.at, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("unparseable container manifest: ") + e.what());
  }
  in.at += manifest_len;

  try {
    const std::string kind = c.manifest.at("kind").get<std::string>();
    if (!expect_kind.empty() && kind != expect_kind) {
      throw CheckpointError("'" + path + "' holds a " + kind + ", expected " +
                            expect_kind);
    }
    for (const auto& entry : c.manifest.at("arrays")) {
      NamedArray a;
      a.name = entry.at("name").get<std::string>();
      const std::uint64_t count = entry.at("count").get<std::uint64_t>();
      in.need(count * 8);
      a.values.reserve(count);
      for (std::uint64_t i = 0; i < count; ++i) a.values.push_back(in.f64());
      c.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad container manifest: ") + e.what());
  }
  if (in.at != buf.size()) {
    throw CheckpointError("container has " + std::to_string(buf.size() - in.at) +
                          " trailing bytes");
  }
  return c;
}

// -- JSON helpers for the shared domain structs ------------------------------

inline nlohmann::json grid_spec_json(const GridSpec& spec) {
  return nlohmann::json{
      {"bbox", {{"lat_min", spec.bbox.lat_min},
                {"lat_max", spec.bbox.lat_max},
                {"lng_min", spec.bbox.lng_min},
                {"lng_max", spec.bbox.lng_max}}},
      {"width", spec.width},
      {"height", spec.height},
      {"interval_minutes", spec.interval_minutes},
  };
}

inline GridSpec grid_spec_from_json(const nlohmann::json& j) {
  GridSpec spec;
  const auto& b = j.at("bbox");
  spec.bbox.lat_min = b.at("lat_min").get<double>();
  spec.bbox.lat_max = b.at("lat_max").get<double>();
  spec.bbox.lng_min = b.at("lng_min").get<double>();
  spec.bbox.lng_max = b.at("lng_max").get<double>();
  spec.width = j.at("width").get<int>();
  spec.height = j.at("height").get<int>();
  spec.interval_minutes = j.at("interval_minutes").get<int>();
  return spec;
}

// -- Typed artifact serializers ----------------------------------------------

inline void save_demand_grid(const DemandGrid& grid, const std::string& path) {
  nlohmann::json manifest{
      {"kind", "demand-grid"},
      {"spec", grid_spec_json(grid.spec)},
      {"start_time", grid.start_time},
      {"num_intervals", grid.num_intervals},
  };
  std::vector<double> counts(grid.counts.begin(), grid.counts.end());
  write_container(path, std::move(manifest), {{"counts", &counts}});
}

inline DemandGrid load_demand_grid(const std::string& path) {
  Container c = read_container(path, "demand-grid");
  DemandGrid grid;
  try {
    grid.spec = grid_spec_from_json(c.manifest.at("spec"));
    grid.start_time = c.manifest.at("start_time").get<std::int64_t>();
    grid.num_intervals = c.manifest.at("num_intervals").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad demand-grid manifest: ") + e.what());
  }
  grid.spec.validate();
  const auto& counts = c.array("counts");
  const std::size_t want = static_cast<std::size_t>(grid.num_intervals) *
                           static_cast<std::size_t>(grid.spec.num_regions());
  if (grid.num_intervals < 1 || counts.size() != want) {
    throw CheckpointError("demand-grid counts hold " + std::to_string(counts.size()) +
                          " values, expected " + std::to_string(want));
  }
  grid.counts.reserve(counts.size());
  for (double v : counts) grid.counts.push_back(std::llround(v));
  return grid;
}

inline void save_graph(const SemanticGraph& graph, const std::string& path) {
  nlohmann::json manifest{{"kind", "semantic-graph"}, {"num_nodes", graph.num_nodes}};
  write_container(path, std::move(manifest), {{"weights", &graph.weights}});
}

inline SemanticGraph load_graph(const std::string& path) {
  Container c = read_container(path, "semantic-graph");
  SemanticGraph g;
  try {
    g.num_nodes = c.manifest.at("num_nodes").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad semantic-graph manifest: ") + e.what());
  }
  g.weights = c.array("weights");
  const std::size_t want =
      static_cast<std::size_t>(g.num_nodes) * static_cast<std::size_t>(g.num_nodes);
  if (g.num_nodes < 1 || g.weights.size() != want) {
    throw CheckpointError("semantic-graph weights hold " +
                          std::to_string(g.weights.size()) + " values, expected " +
                          std::to_string(want));
  }
  return g;
}

inline void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  nlohmann::json manifest{{"kind", "embedding-table"}, {"dim", table.dim}};
  write_container(path, std::move(manifest), {{"vectors", &table.vectors}});
}

inline EmbeddingTable load_embeddings(const std::string& path) {
  Container c = read_container(path, "embedding-table");
  EmbeddingTable t;
  try {
    t.dim = c.manifest.at("dim").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad embedding-table manifest: ") + e.what());
  }
  t.vectors = c.array("vectors");
  if (t.dim < 1 || t.vectors.size() % static_cast<std::size_t>(t.dim) != 0) {
    throw CheckpointError("embedding-table vectors hold " +
                          std::to_string(t.vectors.size()) +
                          " values, not a multiple of dim " + std::to_string(t.dim));
  }
  return t;
}

}  // namespace gridcast
