#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gridcast/common.hpp"

// Reverse-mode automatic differentiation over dense double tensors.
//
// A Tensor is a shared handle to a value node. Operations eagerly compute the
// result and, when gradients are enabled and any input is tracked, record the
// inputs plus a backward closure on the result node (define-by-run: the graph
// is rebuilt on every forward pass). Tensor::backward() on a scalar walks the
// recorded graph in reverse topological order and fills the grad buffer of
// every tracked node reachable from it.
//
// Values are 64-bit floats throughout. Shapes use row-major layout; the last
// axis is contiguous.

namespace gridcast {

using Shape = std::vector<int>;

inline std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << ']';
  return os.str();
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> v;
  std::vector<double> g;  // sized lazily during backward
  bool tracked = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> back;
};

// Gradient recording is on by default; inference paths disable it to skip
// graph construction entirely.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

/// RAII guard that disables gradient recording on this thread.
class NoGrad {
 public:
  NoGrad() : prev_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGrad() { detail::grad_mode() = prev_; }
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  bool prev_;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape) {
    return from_raw(std::move(shape), {});
  }

  static Tensor full(Shape shape, double value) {
    Tensor t = from_raw(std::move(shape), {});
    std::fill(t.node_->v.begin(), t.node_->v.end(), value);
    return t;
  }

  static Tensor from(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != static_cast<std::int64_t>(values.size())) {
      throw ShapeError("tensor: " + std::to_string(values.size()) +
                       " values do not fill shape " + shape_str(shape));
    }
    Tensor t;
    t.node_ = std::make_shared<detail::Node>();
    t.node_->shape = std::move(shape);
    t.node_->v = std::move(values);
    return t;
  }

  static Tensor scalar(double value) { return from({1}, {value}); }

  static Tensor row(std::vector<double> values) {
    Shape s{static_cast<int>(values.size())};
    return from(std::move(s), std::move(values));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(node_->v.size()); }

  double* data() { return node_->v.data(); }
  const double* data() const { return node_->v.data(); }
  std::vector<double>& values() { return node_->v; }
  const std::vector<double>& values() const { return node_->v; }

  double item() const {
    if (size() != 1) throw ShapeError("item: tensor is not scalar");
    return node_->v[0];
  }

  /// Mark this tensor as a leaf that accumulates gradients.
  Tensor& set_tracked(bool tracked = true) {
    node_->tracked = tracked;
    return *this;
  }
  bool tracked() const { return node_->tracked; }

  const std::vector<double>& grad() const {
    if (node_->g.size() != node_->v.size()) {
      throw ShapeError("grad: no gradient present");
    }
    return node_->g;
  }
  bool has_grad() const { return node_->g.size() == node_->v.size(); }

  /// Mutable view of the gradient buffer, for optimizers and penalty terms.
  double* grad_data() {
    if (!has_grad()) throw ShapeError("grad_data: no gradient present");
    return node_->g.data();
  }

  void zero_grad() { node_->g.assign(node_->v.size(), 0.0); }

  /// Deep copy of values; result is an untracked leaf.
  Tensor clone() const {
    Tensor t;
    t.node_ = std::make_shared<detail::Node>();
    t.node_->shape = node_->shape;
    t.node_->v = node_->v;
    return t;
  }

  /// Reverse-mode differentiation from a scalar. Fills grad() of every
  /// tracked node in the graph below this one with the exact derivative.
  void backward() const {
    if (size() != 1) {
      throw ShapeError("backward: rank error, loss node must be scalar, got " +
                       shape_str(node_->shape));
    }
    // Topological order over tracked subgraph (untracked nodes carry no
    // parents, so the walk stops at data and constants automatically).
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        detail::Node* parent = node->parents[next++].get();
        if (parent->tracked && seen.insert(parent).second) {
          stack.emplace_back(parent, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
    for (detail::Node* n : order) n->g.assign(n->v.size(), 0.0);
    node_->g[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      if ((*it)->back) (*it)->back(**it);
    }
  }

  std::shared_ptr<detail::Node> node() const { return node_; }

 private:
  static Tensor from_raw(Shape shape, std::vector<double> values) {
    Tensor t;
    t.node_ = std::make_shared<detail::Node>();
    std::int64_t n = shape_numel(shape);
    t.node_->shape = std::move(shape);
    if (values.empty()) values.assign(static_cast<std::size_t>(n), 0.0);
    t.node_->v = std::move(values);
    return t;
  }

  std::shared_ptr<detail::Node> node_;
};

namespace detail {

inline Tensor make_op(Shape shape, std::vector<double> values,
                      std::initializer_list<Tensor> inputs,
                      std::function<void(Node&)> back) {
  Tensor out = Tensor::from(std::move(shape), std::move(values));
  bool track = false;
  if (grad_mode()) {
    for (const Tensor& t : inputs) track = track || t.tracked();
  }
  if (track) {
    Node& n = *out.node();
    n.tracked = true;
    n.parents.reserve(inputs.size());
    for (const Tensor& t : inputs) n.parents.push_back(t.node());
    n.back = std::move(back);
  }
  return out;
}

inline void accumulate(Node& dst, const std::vector<double>& src) {
  double* g = dst.g.data();
  for (std::size_t i = 0; i < src.size(); ++i) g[i] += src[i];
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

}  // namespace detail

// ---- elementwise arithmetic ----

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> v(a.values());
  const double* bv = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
  return detail::make_op(a.shape(), std::move(v), {a, b}, [](detail::Node& n) {
    for (auto& p : n.parents) {
      if (p->tracked) detail::accumulate(*p, n.g);
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> v(a.values());
  const double* bv = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= bv[i];
  return detail::make_op(a.shape(), std::move(v), {a, b}, [](detail::Node& n) {
    if (n.parents[0]->tracked) detail::accumulate(*n.parents[0], n.g);
    if (n.parents[1]->tracked) {
      double* g = n.parents[1]->g.data();
      for (std::size_t i = 0; i < n.g.size(); ++i) g[i] -= n.g[i];
    }
  });
}

/// Hadamard product.
inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> v(a.values());
  const double* bv = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= bv[i];
  return detail::make_op(a.shape(), std::move(v), {a, b}, [](detail::Node& n) {
    const double* av = n.parents[0]->v.data();
    const double* bv = n.parents[1]->v.data();
    if (n.parents[0]->tracked) {
      double* g = n.parents[0]->g.data();
      for (std::size_t i = 0; i < n.g.size(); ++i) g[i] += n.g[i] * bv[i];
    }
    if (n.parents[1]->tracked) {
      double* g = n.parents[1]->g.data();
      for (std::size_t i = 0; i < n.g.size(); ++i) g[i] += n.g[i] * av[i];
    }
  });
}

inline Tensor scale(const Tensor& a, double factor) {
  std::vector<double> v(a.values());
  for (double& x : v) x *= factor;
  return detail::make_op(a.shape(), std::move(v), {a}, [factor](detail::Node& n) {
    if (!n.parents[0]->tracked) return;
    double* g = n.parents[0]->g.data();
    for (std::size_t i = 0; i < n.g.size(); ++i) g[i] += factor * n.g[i];
  });
}

// ---- activations ----

enum class Act { relu, sigmoid, tanh };

inline double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline Tensor relu(const Tensor& a) {
  std::vector<double> v(a.values());
  for (double& x : v) x = x > 0.0 ? x : 0.0;
  return detail::make_op(a.shape(), std::move(v), {a}, [](detail::Node& n) {
    if (!n.parents[0]->tracked) return;
    double* g = n.parents[0]->g.data();
    for (std::size_t i = 0; i < n.g.size(); ++i) {
      if (n.v[i] > 0.0) g[i] += n.g[i];
    }
  });
}

inline Tensor sigmoid(const Tensor& a) {
  std::vector<double> v(a.values());
  for (double& x : v) x = stable_sigmoid(x);
  return detail::make_op(a.shape(), std::move(v), {a}, [](detail::Node& n) {
    if (!n.parents[0]->tracked) return;
    double* g = n.parents[0]->g.data();
    for (std::size_t i = 0; i < n.g.size(); ++i) {
      g[i] += n.g[i] * n.v[i] * (1.0 - n.v[i]);
    }
  });
}

inline Tensor tanh(const Tensor& a) {
  std::vector<double> v(a.values());
  for (double& x : v) x = std::tanh(x);
  return detail::make_op(a.shape(), std::move(v), {a}, [](detail::Node& n) {
    if (!n.parents[0]->tracked) return;
    double* g = n.parents[0]->g.data();
    for (std::size_t i = 0; i < n.g.size(); ++i) {
      g[i] += n.g[i] * (1.0 - n.v[i] * n.v[i]);
    }
  });
}

inline Tensor activation(const Tensor& a, Act kind) {
  switch (kind) {
    case Act::relu: return relu(a);
    case Act::sigmoid: return sigmoid(a);
    case Act::tanh: return tanh(a);
  }
  throw ShapeError("activation: unknown kind");
}

// ---- shape ops ----

inline Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  }
  return detail::make_op(std::move(shape), a.values(), {a}, [](detail::Node& n) {
    if (n.parents[0]->tracked) detail::accumulate(*n.parents[0], n.g);
  });
}

/// Concatenate along the last axis. Inputs must agree on all leading axes.
inline Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() < 1) {
    throw ShapeError("concat: rank mismatch");
  }
  Shape shape = a.shape();
  const int last = a.rank() - 1;
  for (int i = 0; i < last; ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw ShapeError("concat: leading shape mismatch " + shape_str(a.shape()) +
                       " vs " + shape_str(b.shape()));
    }
  }
  const int na = a.dim(last), nb = b.dim(last);
  shape[static_cast<std::size_t>(last)] = na + nb;
  const std::int64_t rows = a.size() / na;
  std::vector<double> v(static_cast<std::size_t>(rows) * (na + nb));
  const double* av = a.data();
  const double* bv = b.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    std::copy(av + r * na, av + (r + 1) * na, v.begin() + r * (na + nb));
    std::copy(bv + r * nb, bv + (r + 1) * nb, v.begin() + r * (na + nb) + na);
  }
  return detail::make_op(
      std::move(shape), std::move(v), {a, b}, [na, nb, rows](detail::Node& n) {
        const double* g = n.g.data();
        if (n.parents[0]->tracked) {
          double* pg = n.parents[0]->g.data();
          for (std::int64_t r = 0; r < rows; ++r)
            for (int i = 0; i < na; ++i) pg[r * na + i] += g[r * (na + nb) + i];
        }
        if (n.parents[1]->tracked) {
          double* pg = n.parents[1]->g.data();
          for (std::int64_t r = 0; r < rows; ++r)
            for (int i = 0; i < nb; ++i) pg[r * nb + i] += g[r * (na + nb) + na + i];
        }
      });
}

/// Gather a subset of columns of a matrix (or entries of a vector).
inline Tensor select_columns(const Tensor& a, std::vector<int> cols) {
  if (a.rank() < 1 || a.rank() > 2) {
    throw ShapeError("select_columns: expects rank 1 or 2");
  }
  const int n = a.dim(a.rank() - 1);
  for (int c : cols) {
    if (c < 0 || c >= n) throw ShapeError("select_columns: index out of range");
  }
  const std::int64_t rows = a.size() / n;
  const int m = static_cast<int>(cols.size());
  Shape shape = a.shape();
  shape.back() = m;
  std::vector<double> v(static_cast<std::size_t>(rows) * m);
  const double* av = a.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    for (int j = 0; j < m; ++j) v[r * m + j] = av[r * n + cols[j]];
  }
  return detail::make_op(
      std::move(shape), std::move(v), {a},
      [cols = std::move(cols), n, m, rows](detail::Node& node) {
        if (!node.parents[0]->tracked) return;
        double* pg = node.parents[0]->g.data();
        const double* g = node.g.data();
        for (std::int64_t r = 0; r < rows; ++r) {
          for (int j = 0; j < m; ++j) pg[r * n + cols[j]] += g[r * m + j];
        }
      });
}

/// Gather whole rows of a matrix into a new [len(rows), n] tensor.
inline Tensor gather_rows(const Tensor& a, std::vector<int> rows) {
  if (a.rank() != 2) throw ShapeError("gather_rows: expects rank 2");
  const int n = a.dim(1);
  for (int r : rows) {
    if (r < 0 || r >= a.dim(0)) throw ShapeError("gather_rows: row out of range");
  }
  const int m = static_cast<int>(rows.size());
  std::vector<double> v(static_cast<std::size_t>(m) * n);
  const double* av = a.data();
  for (int i = 0; i < m; ++i) {
    std::copy(av + static_cast<std::int64_t>(rows[static_cast<std::size_t>(i)]) * n,
              av + static_cast<std::int64_t>(rows[static_cast<std::size_t>(i)] + 1) * n,
              v.begin() + static_cast<std::int64_t>(i) * n);
  }
  return detail::make_op(
      {m, n}, std::move(v), {a}, [rows = std::move(rows), n](detail::Node& node) {
        if (!node.parents[0]->tracked) return;
        double* pg = node.parents[0]->g.data();
        const double* g = node.g.data();
        for (std::size_t i = 0; i < rows.size(); ++i) {
          double* dst = pg + static_cast<std::int64_t>(rows[i]) * n;
          const double* src = g + static_cast<std::int64_t>(i) * n;
          for (int k = 0; k < n; ++k) dst[k] += src[k];
        }
      });
}

// ---- reductions ----

inline Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double x : a.values()) total += x;
  return detail::make_op({1}, {total}, {a}, [](detail::Node& n) {
    if (!n.parents[0]->tracked) return;
    double* g = n.parents[0]->g.data();
    for (std::size_t i = 0; i < n.parents[0]->v.size(); ++i) g[i] += n.g[0];
  });
}

// ---- linear layers ----

/// Affine map. input [n] or [B,n], weight [m,n], bias [m] -> [m] or [B,m].
inline Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2) throw ShapeError("dense: weight must be rank 2");
  const int m = weight.dim(0), n = weight.dim(1);
  if (input.rank() < 1 || input.rank() > 2 || input.dim(input.rank() - 1) != n) {
    throw ShapeError("dense: input " + shape_str(input.shape()) +
                     " incompatible with weight " + shape_str(weight.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != m)) {
    throw ShapeError("dense: bias shape " + shape_str(bias.shape()));
  }
  const bool batched = input.rank() == 2;
  const std::int64_t batch = batched ? input.dim(0) : 1;
  Shape shape = batched ? Shape{static_cast<int>(batch), m} : Shape{m};
  std::vector<double> v(static_cast<std::size_t>(batch) * m);
  const double* x = input.data();
  const double* w = weight.data();
  const double* bz = bias.defined() ? bias.data() : nullptr;
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* xb = x + b * n;
    double* out = v.data() + b * m;
    for (int j = 0; j < m; ++j) {
      const double* wj = w + static_cast<std::int64_t>(j) * n;
      double acc = bz ? bz[j] : 0.0;
      for (int k = 0; k < n; ++k) acc += wj[k] * xb[k];
      out[j] = acc;
    }
  }
  auto back = [m, n, batch](detail::Node& nd) {
    detail::Node& xi = *nd.parents[0];
    detail::Node& wi = *nd.parents[1];
    const double* g = nd.g.data();
    const double* x = xi.v.data();
    const double* w = wi.v.data();
    if (xi.tracked) {
      double* xg = xi.g.data();
      for (std::int64_t b = 0; b < batch; ++b) {
        const double* gb = g + b * m;
        double* xgb = xg + b * n;
        for (int j = 0; j < m; ++j) {
          const double gj = gb[j];
          if (gj == 0.0) continue;
          const double* wj = w + static_cast<std::int64_t>(j) * n;
          for (int k = 0; k < n; ++k) xgb[k] += gj * wj[k];
        }
      }
    }
    if (wi.tracked) {
      double* wg = wi.g.data();
      for (std::int64_t b = 0; b < batch; ++b) {
        const double* gb = g + b * m;
        const double* xb = x + b * n;
        for (int j = 0; j < m; ++j) {
          const double gj = gb[j];
          if (gj == 0.0) continue;
          double* wgj = wg + static_cast<std::int64_t>(j) * n;
          for (int k = 0; k < n; ++k) wgj[k] += gj * xb[k];
        }
      }
    }
    if (nd.parents.size() > 2 && nd.parents[2]->tracked) {
      double* bg = nd.parents[2]->g.data();
      for (std::int64_t b = 0; b < batch; ++b) {
        const double* gb = g + b * m;
        for (int j = 0; j < m; ++j) bg[j] += gb[j];
      }
    }
  };
  if (bias.defined()) {
    return detail::make_op(std::move(shape), std::move(v), {input, weight, bias}, back);
  }
  return detail::make_op(std::move(shape), std::move(v), {input, weight}, back);
}

/// Matrix-vector map without bias.
inline Tensor linear(const Tensor& input, const Tensor& weight) {
  return dense(input, weight, Tensor());
}

// ---- convolution ----

/// 2-D convolution with stride 1 and zero same-padding, so the output keeps
/// the input's spatial size. input [H,W,Cin] or [B,H,W,Cin]; kernels
/// [kh,kw,Cin,Cout] with odd kh, kw; bias [Cout].
inline Tensor conv2d_same(const Tensor& input, const Tensor& kernels,
                          const Tensor& bias) {
  if (kernels.rank() != 4) throw ShapeError("conv2d_same: kernels must be rank 4");
  const int kh = kernels.dim(0), kw = kernels.dim(1);
  const int cin = kernels.dim(2), cout = kernels.dim(3);
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ShapeError("conv2d_same: kernel spatial size must be odd");
  }
  const bool batched = input.rank() == 4;
  if (!batched && input.rank() != 3) {
    throw ShapeError("conv2d_same: input must be rank 3 or 4");
  }
  const std::int64_t batch = batched ? input.dim(0) : 1;
  const int height = input.dim(batched ? 1 : 0);
  const int width = input.dim(batched ? 2 : 1);
  if (input.dim(batched ? 3 : 2) != cin) {
    throw ShapeError("conv2d_same: input channels " +
                     std::to_string(input.dim(batched ? 3 : 2)) +
                     " do not match kernel C_in " + std::to_string(cin));
  }
  if (bias.rank() != 1 || bias.dim(0) != cout) {
    throw ShapeError("conv2d_same: bias shape " + shape_str(bias.shape()));
  }
  Shape shape = batched ? Shape{static_cast<int>(batch), height, width, cout}
                        : Shape{height, width, cout};
  std::vector<double> v(static_cast<std::size_t>(batch) * height * width * cout);
  const double* x = input.data();
  const double* k = kernels.data();
  const double* bz = bias.data();
  const int oy = kh / 2, ox = kw / 2;
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* xb = x + b * height * width * cin;
    double* ob = v.data() + b * height * width * cout;
    for (int y = 0; y < height; ++y) {
      for (int xpos = 0; xpos < width; ++xpos) {
        double* out = ob + (static_cast<std::int64_t>(y) * width + xpos) * cout;
        for (int c = 0; c < cout; ++c) out[c] = bz[c];
        for (int ky = 0; ky < kh; ++ky) {
          const int iy = y + ky - oy;
          if (iy < 0 || iy >= height) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int ix = xpos + kx - ox;
            if (ix < 0 || ix >= width) continue;
            const double* xi = xb + (static_cast<std::int64_t>(iy) * width + ix) * cin;
            const double* kk = k + (static_cast<std::int64_t>(ky) * kw + kx) * cin * cout;
            for (int ci = 0; ci < cin; ++ci) {
              const double xv = xi[ci];
              if (xv == 0.0) continue;
              const double* kc = kk + static_cast<std::int64_t>(ci) * cout;
              for (int c = 0; c < cout; ++c) out[c] += xv * kc[c];
            }
          }
        }
      }
    }
  }
  auto back = [batch, height, width, cin, cout, kh, kw, oy, ox](detail::Node& nd) {
    detail::Node& xi = *nd.parents[0];
    detail::Node& ki = *nd.parents[1];
    detail::Node& bi = *nd.parents[2];
    const double* g = nd.g.data();
    const double* x = xi.v.data();
    const double* k = ki.v.data();
    const bool need_x = xi.tracked;
    const bool need_k = ki.tracked;
    if (bi.tracked) {
      double* bg = bi.g.data();
      const std::int64_t cells = batch * height * width;
      for (std::int64_t i = 0; i < cells; ++i) {
        const double* gi = g + i * cout;
        for (int c = 0; c < cout; ++c) bg[c] += gi[c];
      }
    }
    if (!need_x && !need_k) return;
    double* xg = need_x ? xi.g.data() : nullptr;
    double* kg = need_k ? ki.g.data() : nullptr;
    for (std::int64_t b = 0; b < batch; ++b) {
      const double* xb = x + b * height * width * cin;
      double* xgb = need_x ? xg + b * height * width * cin : nullptr;
      const double* gb = g + b * height * width * cout;
      for (int y = 0; y < height; ++y) {
        for (int xpos = 0; xpos < width; ++xpos) {
          const double* go = gb + (static_cast<std::int64_t>(y) * width + xpos) * cout;
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = y + ky - oy;
            if (iy < 0 || iy >= height) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = xpos + kx - ox;
              if (ix < 0 || ix >= width) continue;
              const std::int64_t xoff = (static_cast<std::int64_t>(iy) * width + ix) * cin;
              const double* kk = k + (static_cast<std::int64_t>(ky) * kw + kx) * cin * cout;
              for (int ci = 0; ci < cin; ++ci) {
                const double* kc = kk + static_cast<std::int64_t>(ci) * cout;
                if (need_x) {
                  double acc = 0.0;
                  for (int c = 0; c < cout; ++c) acc += go[c] * kc[c];
                  xgb[xoff + ci] += acc;
                }
                if (need_k) {
                  const double xv = xb[xoff + ci];
                  if (xv == 0.0) continue;
                  double* kgc = kg + ((static_cast<std::int64_t>(ky) * kw + kx) * cin + ci) * cout;
                  for (int c = 0; c < cout; ++c) kgc[c] += xv * go[c];
                }
              }
            }
          }
        }
      }
    }
  };
  return detail::make_op(std::move(shape), std::move(v), {input, kernels, bias}, back);
}

}  // namespace gridcast
