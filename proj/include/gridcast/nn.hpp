#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gridcast/common.hpp"
#include "gridcast/random.hpp"
#include "gridcast/tensor.hpp"

// Neural-network building blocks on top of the tensor core: parameter
// initialization, batch normalization with running statistics, and the Adam
// optimizer.

namespace gridcast {

/// Fill with Glorot/Xavier uniform samples: U(-r, r), r = sqrt(6/(fan_in+fan_out)).
inline void glorot_init(Tensor& t, int fan_in, int fan_out, Rng& rng) {
  const double r = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& x : t.values()) x = rng.uniform(-r, r);
}

/// Per-channel batch normalization over the last axis. During training the
/// batch mean/variance normalize the activations and update the running
/// statistics; during inference the running statistics are used instead.
struct BatchNorm {
  Tensor scale;  // gamma, learned
  Tensor shift;  // beta, learned
  std::vector<double> run_mean;
  std::vector<double> run_var;
  double momentum = 0.99;
  double eps = 1e-8;

  explicit BatchNorm(int channels = 0) { reset(channels); }

  void reset(int channels) {
    scale = Tensor::full({channels}, 1.0).set_tracked();
    shift = Tensor::zeros({channels}).set_tracked();
    run_mean.assign(static_cast<std::size_t>(channels), 0.0);
    run_var.assign(static_cast<std::size_t>(channels), 1.0);
  }

  int channels() const { return scale.dim(0); }
};

/// Apply batch normalization. The last axis of `input` is the channel axis;
/// all leading axes together form the statistics population. Training with a
/// population of fewer than 2 entries cannot estimate a variance and errors.
inline Tensor batch_norm(const Tensor& input, BatchNorm& bn, bool training) {
  const int c = bn.channels();
  if (input.rank() < 1 || input.dim(input.rank() - 1) != c) {
    throw ShapeError("batch_norm: input " + shape_str(input.shape()) +
                     " does not end in " + std::to_string(c) + " channels");
  }
  const std::int64_t rows = input.size() / c;
  if (training && rows < 2) {
    throw TrainingError("batch_norm: population of " + std::to_string(rows) +
                        " is too small to normalize, need at least 2");
  }
  const double* x = input.data();
  std::vector<double> mean(static_cast<std::size_t>(c), 0.0);
  std::vector<double> var(static_cast<std::size_t>(c), 0.0);
  if (training) {
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* xr = x + r * c;
      for (int j = 0; j < c; ++j) mean[j] += xr[j];
    }
    for (int j = 0; j < c; ++j) mean[j] /= static_cast<double>(rows);
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* xr = x + r * c;
      for (int j = 0; j < c; ++j) {
        const double d = xr[j] - mean[j];
        var[j] += d * d;
      }
    }
    for (int j = 0; j < c; ++j) var[j] /= static_cast<double>(rows);
    for (int j = 0; j < c; ++j) {
      bn.run_mean[j] = bn.momentum * bn.run_mean[j] + (1.0 - bn.momentum) * mean[j];
      bn.run_var[j] = bn.momentum * bn.run_var[j] + (1.0 - bn.momentum) * var[j];
    }
  } else {
    mean = bn.run_mean;
    var = bn.run_var;
  }

  std::vector<double> inv_sd(static_cast<std::size_t>(c));
  for (int j = 0; j < c; ++j) inv_sd[j] = 1.0 / std::sqrt(var[j] + bn.eps);

  // xhat is kept for the backward pass; out = gamma * xhat + beta.
  auto xhat = std::make_shared<std::vector<double>>(input.values());
  for (std::int64_t r = 0; r < rows; ++r) {
    double* xr = xhat->data() + r * c;
    for (int j = 0; j < c; ++j) xr[j] = (xr[j] - mean[j]) * inv_sd[j];
  }
  std::vector<double> v(static_cast<std::size_t>(rows) * c);
  const double* gam = bn.scale.data();
  const double* bet = bn.shift.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = xhat->data() + r * c;
    double* out = v.data() + r * c;
    for (int j = 0; j < c; ++j) out[j] = gam[j] * xr[j] + bet[j];
  }

  auto back = [rows, c, training, xhat, inv_sd](detail::Node& nd) {
    detail::Node& xi = *nd.parents[0];
    detail::Node& gi = *nd.parents[1];
    detail::Node& bi = *nd.parents[2];
    const double* g = nd.g.data();
    const double* xh = xhat->data();
    if (gi.tracked || bi.tracked) {
      double* gg = gi.tracked ? gi.g.data() : nullptr;
      double* bg = bi.tracked ? bi.g.data() : nullptr;
      for (std::int64_t r = 0; r < rows; ++r) {
        const double* gr = g + r * c;
        const double* xr = xh + r * c;
        for (int j = 0; j < c; ++j) {
          if (gg) gg[j] += gr[j] * xr[j];
          if (bg) bg[j] += gr[j];
        }
      }
    }
    if (!xi.tracked) return;
    const double* gam = gi.v.data();
    double* xg = xi.g.data();
    if (!training) {
      // Running statistics are constants: dx = g * gamma * inv_sd.
      for (std::int64_t r = 0; r < rows; ++r) {
        const double* gr = g + r * c;
        double* xgr = xg + r * c;
        for (int j = 0; j < c; ++j) xgr[j] += gr[j] * gam[j] * inv_sd[j];
      }
      return;
    }
    // Batch statistics depend on x:
    //   dx = (gamma*inv_sd) * (dy - mean(dy) - xhat * mean(dy*xhat))
    std::vector<double> mean_g(static_cast<std::size_t>(c), 0.0);
    std::vector<double> mean_gx(static_cast<std::size_t>(c), 0.0);
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* gr = g + r * c;
      const double* xr = xh + r * c;
      for (int j = 0; j < c; ++j) {
        mean_g[j] += gr[j];
        mean_gx[j] += gr[j] * xr[j];
      }
    }
    for (int j = 0; j < c; ++j) {
      mean_g[j] /= static_cast<double>(rows);
      mean_gx[j] /= static_cast<double>(rows);
    }
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* gr = g + r * c;
      const double* xr = xh + r * c;
      double* xgr = xg + r * c;
      for (int j = 0; j < c; ++j) {
        xgr[j] += gam[j] * inv_sd[j] * (gr[j] - mean_g[j] - xr[j] * mean_gx[j]);
      }
    }
  };
  return detail::make_op(input.shape(), std::move(v),
                         {input, bn.scale, bn.shift}, back);
}

/// A parameter with a stable name for checkpoints and optimizer state.
struct NamedParam {
  std::string name;
  Tensor tensor;
};

/// Adam moment buffers for one parameter.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  void ensure(std::size_t n) {
    if (m.size() != n) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
      step = 0;
    }
  }
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update with bias correction, in place. The parameter must hold a
/// gradient; non-finite gradient entries abort with the parameter's name.
inline void adam_step(NamedParam& param, AdamState& state, const AdamConfig& cfg) {
  Tensor& t = param.tensor;
  if (!t.has_grad()) {
    throw TrainingError("adam_step: parameter '" + param.name + "' has no gradient");
  }
  const std::vector<double>& g = t.grad();
  for (double x : g) {
    if (!std::isfinite(x)) {
      throw TrainingError("adam_step: non-finite gradient in parameter '" +
                          param.name + "'");
    }
  }
  state.ensure(g.size());
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  double* w = t.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace gridcast
