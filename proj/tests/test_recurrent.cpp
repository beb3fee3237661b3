#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gridcast/lstm.hpp"
#include "gridcast/random.hpp"
#include "gridcast/spatial.hpp"
#include "support/gradcheck.hpp"

using namespace gridcast;
using testsupport::gradcheck;

namespace {

std::vector<double> grid9() { return {1, 2, 3, 4, 5, 6, 7, 8, 9}; }

}  // namespace

TEST(Patch, CornerZeroPadded) {
  auto g = grid9();
  Tensor p = extract_patch(g.data(), 3, 3, 0, 3);  // corner (0,0)
  ASSERT_EQ(p.shape(), (Shape{3, 3, 1}));
  EXPECT_EQ(p.values(), (std::vector<double>{0, 0, 0, 0, 1, 2, 0, 4, 5}));
}

TEST(Patch, CenterGetsWholeGrid) {
  auto g = grid9();
  Tensor p = extract_patch(g.data(), 3, 3, 4, 3);  // center (1,1)
  EXPECT_EQ(p.values(), g);
  EXPECT_DOUBLE_EQ(p.values()[static_cast<std::size_t>((3 * 3) / 2)], 5.0);
}

TEST(Patch, UniformValueExceptPadding) {
  std::vector<double> g(16, 0.7);
  Tensor p = extract_patch(g.data(), 4, 4, 5, 5);  // (1,1) with S=5
  int sevens = 0, zeros = 0;
  for (double v : p.values()) {
    if (v == 0.7) ++sevens;
    if (v == 0.0) ++zeros;
  }
  EXPECT_EQ(sevens, 16);  // 4x4 visible window
  EXPECT_EQ(zeros, 9);
  EXPECT_THROW(extract_patch(g.data(), 4, 4, 16, 5), ShapeError);
}

TEST(LocalCnn, ZeroPatchZeroOutput) {
  Rng rng(71);
  PatchConfig cfg;
  cfg.S = 5;
  cfg.K = 2;
  cfg.filters = 3;
  cfg.d = 4;
  SpatialParams params;
  params.init(cfg, rng);
  for (auto& b : params.biases) std::fill(b.values().begin(), b.values().end(), 0.0);
  std::fill(params.fc_b.values().begin(), params.fc_b.values().end(), 0.0);
  Tensor out = local_cnn_forward(Tensor::zeros({5, 5, 1}), params, false);
  ASSERT_EQ(out.shape(), (Shape{4}));
  for (double v : out.values()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(LocalCnn, OutputDimIndependentOfPatchSide) {
  Rng rng(72);
  for (int S : {3, 5, 9}) {
    PatchConfig cfg;
    cfg.S = S;
    cfg.K = 1;
    cfg.filters = 2;
    cfg.d = 64;
    SpatialParams params;
    params.init(cfg, rng);
    Tensor patch = Tensor::full({S, S, 1}, 0.3);
    EXPECT_EQ(local_cnn_forward(patch, params, false).shape(), (Shape{64}));
  }
}

TEST(LocalCnn, SharedParametersGiveEqualOutputs) {
  Rng rng(73);
  PatchConfig cfg;
  cfg.S = 3;
  cfg.K = 1;
  cfg.filters = 2;
  cfg.d = 4;
  SpatialParams params;
  params.init(cfg, rng);
  Tensor patch = Tensor::zeros({3, 3, 1});
  for (double& v : patch.values()) v = rng.uniform(0, 1);
  Tensor a = local_cnn_forward(patch, params, false);
  Tensor b = local_cnn_forward(patch.clone(), params, false);
  EXPECT_EQ(a.values(), b.values());
  for (double v : a.values()) EXPECT_GE(v, 0.0);  // relu head
}

TEST(LocalCnn, BatchMatchesSingleInference) {
  Rng rng(74);
  PatchConfig cfg;
  cfg.S = 5;
  cfg.K = 2;
  cfg.filters = 3;
  cfg.d = 6;
  SpatialParams params;
  params.init(cfg, rng);
  Tensor pa = Tensor::zeros({5, 5, 1});
  Tensor pb = Tensor::zeros({5, 5, 1});
  for (double& v : pa.values()) v = rng.uniform(0, 1);
  for (double& v : pb.values()) v = rng.uniform(0, 1);
  std::vector<double> stacked = pa.values();
  stacked.insert(stacked.end(), pb.values().begin(), pb.values().end());
  Tensor batch = Tensor::from({2, 5, 5, 1}, stacked);
  Tensor y = local_cnn_forward(batch, params, false);
  Tensor ya = local_cnn_forward(pa, params, false);
  Tensor yb = local_cnn_forward(pb, params, false);
  ASSERT_EQ(y.shape(), (Shape{2, 6}));
  for (int j = 0; j < 6; ++j) {
    EXPECT_DOUBLE_EQ(y.values()[static_cast<std::size_t>(j)], ya.values()[static_cast<std::size_t>(j)]);
    EXPECT_DOUBLE_EQ(y.values()[static_cast<std::size_t>(6 + j)], yb.values()[static_cast<std::size_t>(j)]);
  }
}

TEST(LocalCnn, KernelGradientsMatchFiniteDifferences) {
  Rng rng(75);
  PatchConfig cfg;
  cfg.S = 3;
  cfg.K = 2;
  cfg.filters = 2;
  cfg.d = 3;
  SpatialParams params;
  params.init(cfg, rng);
  Tensor patch = Tensor::zeros({4, 3, 3, 1});
  for (double& v : patch.values()) v = rng.uniform(0.1, 1.0);
  std::vector<Tensor> leaves{patch};
  for (auto& k : params.kernels) leaves.push_back(k);
  for (auto& b : params.biases) leaves.push_back(b);
  for (auto& n : params.norms) {
    leaves.push_back(n.scale);
    leaves.push_back(n.shift);
  }
  leaves.push_back(params.fc_w);
  leaves.push_back(params.fc_b);
  auto r = gradcheck(leaves, [&] {
    Tensor y = local_cnn_forward(patch, params, true);
    return sum(mul(y, y));
  });
  EXPECT_LE(r.max_rel_err, 1e-5) << "checked " << r.checked;
}

TEST(StepInput, ConcatExamples) {
  Tensor s = Tensor::row({1, 2});
  Tensor e = Tensor::row({3});
  EXPECT_EQ(concat_step_input(s, e).values(), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(concat_step_input(s, Tensor()).values(), s.values());
  Tensor d64 = Tensor::zeros({64});
  Tensor r10 = Tensor::zeros({10});
  EXPECT_EQ(concat_step_input(d64, r10).size(), 74);
}

TEST(Lstm, ZeroParamsZeroState) {
  Rng rng(81);
  LstmParams params;
  params.init(3, 4, rng);
  // zero out everything: gates sit at sigma(0)=0.5, candidate at tanh(0)=0
  for (Tensor* t : {&params.w_i, &params.u_i, &params.b_i, &params.w_f, &params.u_f,
                    &params.b_f, &params.w_o, &params.u_o, &params.b_o, &params.w_g,
                    &params.u_g, &params.b_g}) {
    std::fill(t->values().begin(), t->values().end(), 0.0);
  }
  LstmState next = lstm_step(Tensor::zeros({3}), lstm_zero_state(params), params);
  for (double v : next.c.values()) EXPECT_DOUBLE_EQ(v, 0.0);
  for (double v : next.h.values()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Lstm, SaturatedGatesPreserveMemory) {
  Rng rng(82);
  LstmParams params;
  params.init(2, 3, rng);
  for (Tensor* t : {&params.w_i, &params.u_i, &params.b_i, &params.w_f, &params.u_f,
                    &params.b_f, &params.w_o, &params.u_o, &params.b_o, &params.w_g,
                    &params.u_g, &params.b_g}) {
    std::fill(t->values().begin(), t->values().end(), 0.0);
  }
  std::fill(params.b_f.values().begin(), params.b_f.values().end(), 10.0);
  std::fill(params.b_i.values().begin(), params.b_i.values().end(), -10.0);
  LstmState state = lstm_zero_state(params);
  state.c = Tensor::row({0.4, -0.2, 0.9});
  LstmState next = lstm_step(Tensor::row({1, -1}), state, params);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(next.c.values()[static_cast<std::size_t>(j)],
                state.c.values()[static_cast<std::size_t>(j)], 1e-3);
  }
}

TEST(Lstm, GateRangesHold) {
  Rng rng(83);
  LstmParams params;
  params.init(4, 5, rng);
  Tensor g = Tensor::zeros({4});
  for (double& v : g.values()) v = rng.uniform(-3, 3);
  LstmState state = lstm_zero_state(params);
  for (int step = 0; step < 6; ++step) {
    state = lstm_step(g, state, params);
    for (double v : state.h.values()) {
      EXPECT_GT(v, -1.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

TEST(Lstm, SequenceBaseCasesAndErrors) {
  Rng rng(84);
  LstmParams params;
  params.init(3, 4, rng);
  Tensor g = Tensor::row({0.5, -0.3, 0.8});
  // h=1 reduces to one step from zero state
  Tensor h1 = lstm_sequence({g}, params, 1);
  LstmState manual = lstm_step(g, lstm_zero_state(params), params);
  EXPECT_EQ(h1.values(), manual.h.values());
  EXPECT_THROW(lstm_sequence({g, g}, params, 3), ShapeError);
  EXPECT_THROW(lstm_sequence({}, params, 0), ShapeError);
  EXPECT_THROW(lstm_step(Tensor::row({1, 2}), lstm_zero_state(params), params),
               ShapeError);

  // all-zero inputs and parameters -> zero output
  LstmParams zero;
  zero.init(3, 4, rng);
  for (Tensor* t : {&zero.w_i, &zero.u_i, &zero.b_i, &zero.w_f, &zero.u_f, &zero.b_f,
                    &zero.w_o, &zero.u_o, &zero.b_o, &zero.w_g, &zero.u_g, &zero.b_g}) {
    std::fill(t->values().begin(), t->values().end(), 0.0);
  }
  Tensor hz = lstm_sequence({Tensor::zeros({3}), Tensor::zeros({3})}, zero, 2);
  for (double v : hz.values()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Lstm, OrderSensitivity) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    LstmParams params;
    params.init(2, 3, rng);
    std::vector<Tensor> seq;
    for (int t = 0; t < 4; ++t) {
      Tensor g = Tensor::zeros({2});
      for (double& v : g.values()) v = rng.uniform(-1, 1);
      seq.push_back(g);
    }
    std::vector<Tensor> rev(seq.rbegin(), seq.rend());
    Tensor fwd = lstm_sequence(seq, params, 4);
    Tensor bwd = lstm_sequence(rev, params, 4);
    EXPECT_NE(fwd.values(), bwd.values()) << "seed " << seed;
  }
}

TEST(Lstm, BpttGradientsMatchFiniteDifferences) {
  Rng rng(85);
  LstmParams params;
  params.init(3, 4, rng);
  std::vector<Tensor> seq;
  for (int t = 0; t < 5; ++t) {
    Tensor g = Tensor::zeros({2, 3});  // batch of 2
    for (double& v : g.values()) v = rng.uniform(-1, 1);
    seq.push_back(g);
  }
  std::vector<Tensor> leaves{params.w_i, params.u_i, params.b_i, params.w_f,
                             params.u_f, params.b_f, params.w_o, params.u_o,
                             params.b_o, params.w_g, params.u_g, params.b_g,
                             seq[0], seq[4]};
  auto r = gradcheck(leaves, [&] {
    Tensor h = lstm_sequence(seq, params, 5);
    return sum(mul(h, h));
  });
  EXPECT_LE(r.max_rel_err, 1e-5) << "checked " << r.checked;
}
