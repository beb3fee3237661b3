#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gridcast/common.hpp"
#include "gridcast/dtw.hpp"
#include "gridcast/random.hpp"
#include "gridcast/tensor.hpp"

// Fully connected region-similarity graph from pattern DTW distances, and a
// first-order proximity embedding trained by weighted edge sampling with
// negative sampling.

namespace gridcast {

/// Symmetric similarity weights w_ij = exp(-alpha * DTW(pattern_i, pattern_j)).
struct SemanticGraph {
  int num_nodes = 0;
  std::vector<double> weights;  // N x N, row-major

  double w(int i, int j) const {
    return weights[static_cast<std::size_t>(i) * num_nodes + j];
  }
  double& w(int i, int j) {
    return weights[static_cast<std::size_t>(i) * num_nodes + j];
  }
};

inline SemanticGraph build_graph(const std::vector<std::vector<double>>& patterns,
                                 double alpha = 1.0, int dtw_band = 0) {
  const int n = static_cast<int>(patterns.size());
  if (n == 0) throw DataError("build_graph: no patterns");
  for (const auto& p : patterns) {
    if (p.size() != patterns.front().size()) {
      throw ShapeError("build_graph: patterns differ in length");
    }
  }
  SemanticGraph g;
  g.num_nodes = n;
  g.weights.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    g.w(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = dtw_distance(patterns[static_cast<std::size_t>(i)],
                                    patterns[static_cast<std::size_t>(j)], dtw_band);
      const double w = std::exp(-alpha * d);
      g.w(i, j) = w;
      g.w(j, i) = w;
    }
  }
  return g;
}

/// Learned node vectors, one row per region.
struct EmbeddingTable {
  int dim = 0;
  std::vector<double> vectors;  // N x dim

  int num_nodes() const {
    return dim == 0 ? 0 : static_cast<int>(vectors.size()) / dim;
  }
  const double* row(int i) const {
    return vectors.data() + static_cast<std::size_t>(i) * dim;
  }
  double* row(int i) {
    return vectors.data() + static_cast<std::size_t>(i) * dim;
  }
};

struct LineConfig {
  int dim = 32;
  std::int64_t samples = 1'000'000;
  int negatives = 5;
  double lr0 = 0.025;
};

/// First-order-proximity embedding: draw directed edges with probability
/// proportional to their weight, pull the endpoint vectors together through
/// a sigmoid, and push `negatives` nodes drawn from the degree^0.75 noise
/// distribution away. Learning rate decays linearly over the sample budget.
inline EmbeddingTable line_embed(const SemanticGraph& graph, const LineConfig& cfg,
                                 std::uint64_t seed) {
  const int n = graph.num_nodes;
  if (n < 2) throw DomainError("line_embed: graph needs at least 2 nodes");
  // Directed edge list (both orientations of each pair), cumulative weights
  // for sampling, and the weighted-degree noise distribution.
  std::vector<int> src, dst;
  std::vector<double> edge_cum;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = graph.w(i, j);
      if (!(w > 0.0)) {
        throw DomainError("line_embed: non-positive weight at (" + std::to_string(i) +
                          ", " + std::to_string(j) + ")");
      }
      src.push_back(i);
      dst.push_back(j);
      total += w;
      edge_cum.push_back(total);
    }
  }
  std::vector<double> noise_cum(static_cast<std::size_t>(n));
  double noise_total = 0.0;
  for (int v = 0; v < n; ++v) {
    double deg = 0.0;
    for (int u = 0; u < n; ++u) {
      if (u != v) deg += graph.w(v, u);
    }
    noise_total += std::pow(deg, 0.75);
    noise_cum[static_cast<std::size_t>(v)] = noise_total;
  }

  Rng rng(seed);
  EmbeddingTable table;
  table.dim = cfg.dim;
  table.vectors.resize(static_cast<std::size_t>(n) * cfg.dim);
  const double init = 0.5 / cfg.dim;
  for (double& x : table.vectors) x = rng.uniform(-init, init);

  auto pick = [&rng](const std::vector<double>& cum, double span) {
    const double r = rng.uniform() * span;
    const auto it = std::lower_bound(cum.begin(), cum.end(), r);
    return static_cast<int>(it == cum.end() ? cum.size() - 1 : it - cum.begin());
  };

  std::vector<double> push(static_cast<std::size_t>(cfg.dim));
  for (std::int64_t s = 0; s < cfg.samples; ++s) {
    const double lr =
        cfg.lr0 * std::max(1e-4, 1.0 - static_cast<double>(s) / cfg.samples);
    const int e = pick(edge_cum, total);
    const int center = src[static_cast<std::size_t>(e)];
    const int pos = dst[static_cast<std::size_t>(e)];
    double* uc = table.row(center);
    std::fill(push.begin(), push.end(), 0.0);
    for (int k = 0; k <= cfg.negatives; ++k) {
      int target;
      if (k == 0) {
        target = pos;
      } else {
        target = pick(noise_cum, noise_total);
        if (target == center || target == pos) continue;
      }
      double* ut = table.row(target);
      double dot = 0.0;
      for (int d = 0; d < cfg.dim; ++d) dot += uc[d] * ut[d];
      // gradient of log sigma(dot) for the positive, log sigma(-dot) for negatives
      const double coeff = (k == 0 ? 1.0 - stable_sigmoid(dot) : -stable_sigmoid(dot));
      for (int d = 0; d < cfg.dim; ++d) {
        push[static_cast<std::size_t>(d)] += coeff * ut[d];
        ut[d] += lr * coeff * uc[d];
      }
    }
    for (int d = 0; d < cfg.dim; ++d) uc[d] += lr * push[static_cast<std::size_t>(d)];
  }
  return table;
}

/// Trainable projection of a frozen embedding vector (or a batch of them).
inline Tensor semantic_fc(const Tensor& m, const Tensor& weight, const Tensor& bias) {
  return relu(dense(m, weight, bias));
}

inline double cosine_similarity(const double* a, const double* b, int dim) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int d = 0; d < dim; ++d) {
    dot += a[d] * b[d];
    na += a[d] * a[d];
    nb += b[d] * b[d];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace gridcast
