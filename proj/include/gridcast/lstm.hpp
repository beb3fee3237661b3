#pragma once

#include <string>
#include <vector>

#include "gridcast/common.hpp"
#include "gridcast/nn.hpp"
#include "gridcast/random.hpp"
#include "gridcast/tensor.hpp"

// Single-layer LSTM over the per-step joint vectors. Sequences start from a
// zero state and only the final hidden vector feeds the prediction head.

namespace gridcast {

/// Gate parameters: for each of input/forget/output/candidate, an input map
/// W [hidden x in], a recurrent map U [hidden x hidden], and a bias [hidden].
struct LstmParams {
  int input_dim = 0;
  int hidden = 128;
  Tensor w_i, u_i, b_i;
  Tensor w_f, u_f, b_f;
  Tensor w_o, u_o, b_o;
  Tensor w_g, u_g, b_g;

  void init(int in_dim, int hidden_dim, Rng& rng) {
    if (in_dim < 1 || hidden_dim < 1) {
      throw ConfigError("lstm: dimensions must be >= 1");
    }
    input_dim = in_dim;
    hidden = hidden_dim;
    auto gate = [&](Tensor& w, Tensor& u, Tensor& b) {
      w = Tensor::zeros({hidden, input_dim});
      glorot_init(w, input_dim, hidden, rng);
      w.set_tracked();
      u = Tensor::zeros({hidden, hidden});
      glorot_init(u, hidden, hidden, rng);
      u.set_tracked();
      b = Tensor::zeros({hidden}).set_tracked();
    };
    gate(w_i, u_i, b_i);
    gate(w_f, u_f, b_f);
    gate(w_o, u_o, b_o);
    gate(w_g, u_g, b_g);
  }
};

struct LstmState {
  Tensor h;
  Tensor c;
};

/// State of all zeros, shaped to match an input of the given batch size
/// (batch < 0 means unbatched vectors).
inline LstmState lstm_zero_state(const LstmParams& params, int batch = -1) {
  const Shape shape =
      batch < 0 ? Shape{params.hidden} : Shape{batch, params.hidden};
  return {Tensor::zeros(shape), Tensor::zeros(shape)};
}

/// Joint per-step input: spatial encoding followed by context (the
/// concatenation is just block order — context may be empty).
inline Tensor concat_step_input(const Tensor& spatial, const Tensor& context) {
  if (!context.defined() || context.size() == 0) return spatial;
  return concat(spatial, context);
}

/// One recurrence: gates i/f/o through sigmoid, candidate through tanh,
/// c' = f*c + i*cand, h' = o*tanh(c').
inline LstmState lstm_step(const Tensor& g, const LstmState& state,
                           const LstmParams& params) {
  const bool batched = g.rank() == 2;
  if (g.rank() != 1 && !batched) {
    throw ShapeError("lstm_step: input must be rank 1 or 2");
  }
  if (g.dim(g.rank() - 1) != params.input_dim) {
    throw ShapeError("lstm_step: input " + shape_str(g.shape()) +
                     " does not match input_dim " + std::to_string(params.input_dim));
  }
  if (state.h.shape() != state.c.shape() ||
      state.h.dim(state.h.rank() - 1) != params.hidden) {
    throw ShapeError("lstm_step: state does not match hidden size " +
                     std::to_string(params.hidden));
  }
  Tensor gate_i = sigmoid(add(dense(g, params.w_i, params.b_i), linear(state.h, params.u_i)));
  Tensor gate_f = sigmoid(add(dense(g, params.w_f, params.b_f), linear(state.h, params.u_f)));
  Tensor gate_o = sigmoid(add(dense(g, params.w_o, params.b_o), linear(state.h, params.u_o)));
  Tensor cand = gridcast::tanh(add(dense(g, params.w_g, params.b_g), linear(state.h, params.u_g)));
  Tensor c_next = add(mul(gate_f, state.c), mul(gate_i, cand));
  Tensor h_next = mul(gate_o, gridcast::tanh(c_next));
  return {h_next, c_next};
}

/// Runs the recurrence over a whole sequence from a zero state and returns
/// the final hidden vector. The sequence must have the configured length.
inline Tensor lstm_sequence(const std::vector<Tensor>& inputs,
                            const LstmParams& params, int expected_len) {
  if (static_cast<int>(inputs.size()) != expected_len || inputs.empty()) {
    throw ShapeError("lstm_sequence: got " + std::to_string(inputs.size()) +
                     " steps, expected " + std::to_string(expected_len));
  }
  const bool batched = inputs.front().rank() == 2;
  LstmState state = lstm_zero_state(params, batched ? inputs.front().dim(0) : -1);
  for (const Tensor& g : inputs) state = lstm_step(g, state, params);
  return state.h;
}

}  // namespace gridcast
