#pragma once

#include <string>
#include <vector>

#include "gridcast/common.hpp"
#include "gridcast/nn.hpp"
#include "gridcast/random.hpp"
#include "gridcast/tensor.hpp"

// Local-patch CNN: encodes the S×S demand neighborhood of a target region
// into a d-vector. One shared parameter set serves every region (and, unless
// configured otherwise, every sequence position).

namespace gridcast {

struct PatchConfig {
  int S = 9;        // odd patch side
  int K = 3;        // conv layers
  int filters = 64; // channels per conv layer
  int d = 64;       // encoder output dim
  int tau = 3;      // kernel side

  void validate() const {
    if (S < 1 || S % 2 == 0) throw ConfigError("patch: S must be odd and >= 1");
    if (K < 1) throw ConfigError("patch: K must be >= 1");
    if (filters < 1 || d < 1) throw ConfigError("patch: filters and d must be >= 1");
    if (tau < 1 || tau % 2 == 0) throw ConfigError("patch: kernel side must be odd");
  }
  int flat_dim() const { return S * S * filters; }
};

/// Per-layer kernels/biases/batchnorm plus the flatten projection.
struct SpatialParams {
  PatchConfig cfg;
  std::vector<Tensor> kernels;  // [tau, tau, C_in, filters] each
  std::vector<Tensor> biases;   // [filters] each
  std::vector<BatchNorm> norms;
  Tensor fc_w;  // [d, S*S*filters]
  Tensor fc_b;  // [d]

  void init(const PatchConfig& config, Rng& rng) {
    config.validate();
    cfg = config;
    kernels.clear();
    biases.clear();
    norms.clear();
    for (int k = 0; k < cfg.K; ++k) {
      const int cin = k == 0 ? 1 : cfg.filters;
      Tensor kernel = Tensor::zeros({cfg.tau, cfg.tau, cin, cfg.filters});
      glorot_init(kernel, cfg.tau * cfg.tau * cin, cfg.tau * cfg.tau * cfg.filters, rng);
      kernels.push_back(kernel.set_tracked());
      biases.push_back(Tensor::zeros({cfg.filters}).set_tracked());
      norms.emplace_back(cfg.filters);
    }
    fc_w = Tensor::zeros({cfg.d, cfg.flat_dim()});
    glorot_init(fc_w, cfg.flat_dim(), cfg.d, rng);
    fc_w.set_tracked();
    fc_b = Tensor::zeros({cfg.d}).set_tracked();
  }
};

/// Copies the S×S neighborhood of `center` out of a width×height demand
/// slice (row-major, region = y*width + x) into dst; cells beyond the city
/// boundary are zero.
inline void write_patch(double* dst, const double* slice, int width, int height,
                        int center, int S) {
  const int cy = center / width, cx = center % width;
  const int off = S / 2;
  for (int py = 0; py < S; ++py) {
    const int gy = cy + py - off;
    for (int px = 0; px < S; ++px) {
      const int gx = cx + px - off;
      dst[py * S + px] = (gy < 0 || gy >= height || gx < 0 || gx >= width)
                             ? 0.0
                             : slice[gy * width + gx];
    }
  }
}

inline Tensor extract_patch(const double* slice, int width, int height, int center,
                            int S) {
  if (center < 0 || center >= width * height) {
    throw ShapeError("extract_patch: region " + std::to_string(center) +
                     " outside " + std::to_string(width * height) + " cells");
  }
  Tensor patch = Tensor::zeros({S, S, 1});
  write_patch(patch.data(), slice, width, height, center, S);
  return patch;
}

/// K rounds of conv -> batchnorm -> relu, flatten, then dense + relu to d.
/// Accepts a single patch [S,S,1] or a batch [B,S,S,1].
inline Tensor local_cnn_forward(const Tensor& patch, SpatialParams& params,
                                bool training) {
  const PatchConfig& cfg = params.cfg;
  const bool batched = patch.rank() == 4;
  if (patch.rank() != 3 && !batched) {
    throw ShapeError("local_cnn_forward: patch must be rank 3 or 4");
  }
  const int S = patch.dim(batched ? 1 : 0);
  if (S != cfg.S || patch.dim(batched ? 2 : 1) != cfg.S ||
      patch.dim(batched ? 3 : 2) != 1) {
    throw ShapeError("local_cnn_forward: patch " + shape_str(patch.shape()) +
                     " does not match configured side " + std::to_string(cfg.S));
  }
  Tensor x = patch;
  for (int k = 0; k < cfg.K; ++k) {
    x = conv2d_same(x, params.kernels[static_cast<std::size_t>(k)],
                    params.biases[static_cast<std::size_t>(k)]);
    x = batch_norm(x, params.norms[static_cast<std::size_t>(k)], training);
    x = relu(x);
  }
  x = batched ? reshape(x, {patch.dim(0), cfg.flat_dim()})
              : reshape(x, {cfg.flat_dim()});
  return relu(dense(x, params.fc_w, params.fc_b));
}

}  // namespace gridcast
