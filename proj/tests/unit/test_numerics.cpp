#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dspg/error.hpp"
#include "dspg/numerics/gradient_check.hpp"
#include "dspg/numerics/layers.hpp"
#include "dspg/numerics/ops.hpp"

using namespace dspg;
using namespace dspg::numerics;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(scale * rng.normal());
  return t;
}

std::vector<float> values(const Tape& tape, Var v) {
  const Tensor t = tape.value(v);
  return {t.data().begin(), t.data().end()};
}

// Fixed random weighting turns any op output into a scalar with a
// non-degenerate gradient.
Var weighted_sum(Tape& tape, Var x, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = random_tensor(x.shape(), rng);
  return sum(mul(x, tape.constant(w)));
}

}  // namespace

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<float>(5)), DimensionError);
  Tensor t({2, 3}, 1.5f);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_FALSE(t.has_grad());
  EXPECT_EQ(t.grad().size(), 6u);
  EXPECT_TRUE(t.all_finite());
  t[4] = std::nanf("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Rng, SeededStreamsRepeat) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(7);
  c.normal();
  const std::string state = c.serialize();
  const double next = c.uniform();
  Rng d(0);
  d.deserialize(state);
  EXPECT_EQ(d.uniform(), next);
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_EQ(derive_seed(1, "protein"), derive_seed(1, "protein"));
}

TEST(Rng, BelowIsInRange) {
  Rng r(3);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}

TEST(Matmul, IdentityLeavesInputUnchanged) {
  Tape tape;
  Rng rng(1);
  Tensor x = random_tensor({2, 5}, rng);
  Var y = matmul(tape.constant(Tensor({2, 2}, {1, 0, 0, 1})), tape.constant(x));
  EXPECT_EQ(values(tape, y), std::vector<float>(x.data().begin(), x.data().end()));
}

TEST(Matmul, HandArithmetic) {
  Tape tape;
  Var y = matmul(tape.constant(Tensor({2, 2}, {1, 2, 3, 4})), tape.constant(Tensor({2, 1}, {0, 1})));
  EXPECT_EQ(tape.shape(y), (Shape{2, 1}));
  EXPECT_EQ(values(tape, y), (std::vector<float>{2, 4}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Tape tape;
  try {
    matmul(tape.constant(Tensor({2, 3})), tape.constant(Tensor({4, 5})));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("[4x5]"), std::string::npos) << e.what();
  }
}

TEST(Matmul, GradientOfSumIsOnesTimesBTransposed) {
  Rng rng(2);
  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 5}, rng);
  a.set_requires_grad(true);
  Tape tape;
  Var out = sum(matmul(tape.param(a), tape.constant(b)));
  tape.backward(out);
  tape.accumulate_param_grads();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      double row = 0.0;
      for (std::size_t j = 0; j < 5; ++j) row += b.at(k, j);
      EXPECT_NEAR(a.grad()[i * 4 + k], row, 1e-5);
    }
  auto r = gradient_check([&](Tape& t) { return sum(matmul(t.param(a), t.constant(b))); }, {&a});
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(Softmax, UniformAndStable) {
  Tape tape(Precision::f64);
  auto v = tape.values(softmax(tape.constant(Tensor({1, 3}, {0, 0, 0})), 1));
  for (double p : v) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);
  auto w = tape.values(softmax(tape.constant(Tensor({1, 2}, {1000, 0})), 1));
  EXPECT_NEAR(w[0], 1.0, 1e-9);
  EXPECT_NEAR(w[1], 0.0, 1e-9);
}

TEST(Softmax, RandomRowsSumToOneAlongEitherAxis) {
  Rng rng(3);
  Tensor x = random_tensor({4, 5}, rng, 3.0);
  Tape tape;
  const auto rows = values(tape, softmax(tape.constant(x), 1));
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_GT(rows[i * 5 + j], 0.0f);
      s += rows[i * 5 + j];
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
  const auto cols = values(tape, softmax(tape.constant(x), 0));
  for (std::size_t j = 0; j < 5; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) s += cols[i * 5 + j];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(CrossEntropy, ConfidentUniformAndMasked) {
  Tape tape(Precision::f64);
  std::vector<float> confident(23, 0.0f);
  confident[4] = 1e6f;
  const int target = 4;
  const std::uint8_t on = 1;
  EXPECT_NEAR(tape.item(cross_entropy(tape.constant({1, 23}, confident), std::span(&target, 1), std::span(&on, 1))),
              0.0, 1e-9);
  EXPECT_NEAR(tape.item(cross_entropy(tape.constant(Tensor({1, 23})), std::span(&target, 1), std::span(&on, 1))),
              std::log(23.0), 1e-12);

  Rng rng(4);
  Tensor logits = random_tensor({3, 23}, rng);
  logits.set_requires_grad(true);
  Tape t2;
  const std::vector<int> targets{1, 2, 3};
  const std::vector<std::uint8_t> off{0, 0, 0};
  Var loss = cross_entropy(t2.param(logits), targets, off);
  EXPECT_EQ(t2.item(loss), 0.0);
  t2.backward(loss);
  t2.accumulate_param_grads();
  for (float g : logits.grad()) EXPECT_EQ(g, 0.0f);
}

TEST(CrossEntropy, MatchesManualLogSoftmax) {
  Rng rng(5);
  Tensor logits = random_tensor({4, 6}, rng, 2.0);
  const std::vector<int> targets{0, 5, 2, 2};
  const std::vector<std::uint8_t> mask{1, 0, 1, 1};
  double expect = 0.0;
  for (std::size_t r : {0u, 2u, 3u}) {
    double m = -1e30, s = 0.0;
    for (std::size_t j = 0; j < 6; ++j) m = std::max(m, static_cast<double>(logits.at(r, j)));
    for (std::size_t j = 0; j < 6; ++j) s += std::exp(logits.at(r, j) - m);
    expect += -(logits.at(r, targets[r]) - m - std::log(s));
  }
  Tape tape;
  EXPECT_NEAR(tape.item(cross_entropy(tape.constant(logits), targets, mask)), expect / 3.0, 1e-5);
}

TEST(CrossEntropy, TargetOutsideVocabularyIsRejected) {
  Tape tape;
  const std::vector<int> targets{23};
  const std::vector<std::uint8_t> mask{1};
  EXPECT_THROW(cross_entropy(tape.constant(Tensor({1, 23})), targets, mask), VocabularyError);
}

TEST(LayerNorm, ClosedFormCases) {
  Tape tape(Precision::f64);
  Var gain = tape.constant(Tensor({2}, {1, 1}));
  Var bias = tape.constant(Tensor({2}));
  auto two = tape.values(layer_norm(tape.constant(Tensor({1, 2}, {1, 3})), gain, bias));
  // eps makes the result marginally smaller than +-1.
  EXPECT_NEAR(two[0], -1.0, 1e-4);
  EXPECT_NEAR(two[1], 1.0, 1e-4);
  Var g4 = tape.constant(Tensor({4}, 1.0f)), b4 = tape.constant(Tensor({4}));
  for (double v : tape.values(layer_norm(tape.constant(Tensor({1, 4}, 2.5f)), g4, b4))) EXPECT_EQ(v, 0.0);
}

TEST(LayerNorm, RandomRowsAreStandardized) {
  Rng rng(6);
  const std::size_t n = 64;
  Tensor x = random_tensor({3, n}, rng, 4.0);
  Tape tape;
  const auto y = values(tape, layer_norm(tape.constant(x), tape.constant(Tensor({n}, 1.0f)), tape.constant(Tensor({n}))));
  for (std::size_t r = 0; r < 3; ++r) {
    double m = 0.0, v = 0.0;
    for (std::size_t j = 0; j < n; ++j) m += y[r * n + j];
    m /= n;
    for (std::size_t j = 0; j < n; ++j) v += (y[r * n + j] - m) * (y[r * n + j] - m);
    v /= n;
    EXPECT_LT(std::abs(m), 1e-6);
    EXPECT_NEAR(v, 1.0, 1e-4);
  }
}

TEST(GradientCheck, SumOfSquares) {
  Rng rng(7);
  Tensor x = random_tensor({5, 3}, rng);
  auto r = gradient_check([&](Tape& t) {
    Var v = t.param(x);
    return sum(mul(v, v));
  }, {&x});
  EXPECT_LT(r.max_relative_error, 1e-7);
  EXPECT_EQ(r.coordinates_checked, 15u);
}

TEST(GradientCheck, NonFiniteFunctionIsAnError) {
  Tensor x({1}, 1.0f);
  EXPECT_THROW(gradient_check([&](Tape& t) { return scale(t.param(x), std::nan("")); }, {&x}), EvaluationError);
}

// Every differentiable primitive, checked against central differences.
struct OpCase {
  const char* name;
  Shape shape;
  std::function<Var(Tape&, Var)> op;
};

class PrimitiveGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(PrimitiveGradient, MatchesFiniteDifferences) {
  const OpCase& c = GetParam();
  Rng rng(11);
  Tensor x = random_tensor(c.shape, rng);
  auto r = gradient_check([&](Tape& t) { return weighted_sum(t, c.op(t, t.param(x)), 99); }, {&x});
  EXPECT_LT(r.max_relative_error, 1e-3) << c.name;
}

Var constant_like(Tape& t, Shape s, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  return t.constant(random_tensor(std::move(s), rng, scale));
}

INSTANTIATE_TEST_SUITE_P(
    Ops, PrimitiveGradient,
    ::testing::Values(
        OpCase{"matmul_left", {3, 4}, [](Tape& t, Var x) { return matmul(x, constant_like(t, {4, 2}, 1)); }},
        OpCase{"matmul_right", {4, 2}, [](Tape& t, Var x) { return matmul(constant_like(t, {3, 4}, 1), x); }},
        OpCase{"add", {3, 4}, [](Tape& t, Var x) { return add(x, constant_like(t, {3, 4}, 2)); }},
        OpCase{"sub", {3, 4}, [](Tape& t, Var x) { return sub(constant_like(t, {3, 4}, 2), x); }},
        OpCase{"mul", {3, 4}, [](Tape& t, Var x) { return mul(x, constant_like(t, {3, 4}, 3)); }},
        OpCase{"scale", {3, 4}, [](Tape&, Var x) { return scale(x, -2.5); }},
        OpCase{"add_bias", {4}, [](Tape& t, Var x) { return add_bias(constant_like(t, {3, 4}, 4), x); }},
        OpCase{"sigmoid", {3, 4}, [](Tape&, Var x) { return sigmoid(x); }},
        OpCase{"gelu", {3, 4}, [](Tape&, Var x) { return gelu(x); }},
        OpCase{"relu", {3, 4}, [](Tape&, Var x) { return relu(x); }},
        OpCase{"softmax_rows", {3, 5}, [](Tape&, Var x) { return softmax(x, 1); }},
        OpCase{"softmax_cols", {3, 5}, [](Tape&, Var x) { return softmax(x, 0); }},
        OpCase{"layer_norm_input", {3, 6},
               [](Tape& t, Var x) { return layer_norm(x, constant_like(t, {6}, 5), constant_like(t, {6}, 6)); }},
        OpCase{"layer_norm_gain", {6},
               [](Tape& t, Var x) { return layer_norm(constant_like(t, {3, 6}, 5), x, constant_like(t, {6}, 6)); }},
        OpCase{"concat_cols", {3, 2}, [](Tape& t, Var x) { return concat_cols(x, constant_like(t, {3, 4}, 7)); }},
        OpCase{"concat_rows", {2, 4}, [](Tape& t, Var x) { return concat_rows(constant_like(t, {3, 4}, 7), x); }},
        OpCase{"slice_rows", {5, 3}, [](Tape&, Var x) { return slice_rows(x, 1, 3); }},
        OpCase{"gather_rows", {4, 3},
               [](Tape&, Var x) {
                 static const std::vector<int> ids{3, 0, 3, 1};
                 return gather_rows(x, ids);
               }},
        OpCase{"reshape", {2, 6}, [](Tape&, Var x) { return reshape(x, {3, 4}); }},
        OpCase{"vector_norms", {6, 4}, [](Tape&, Var x) { return vector_norms(x); }},
        OpCase{"gate_vectors_v", {6, 4}, [](Tape& t, Var x) { return gate_vectors(x, constant_like(t, {2, 4}, 8)); }},
        OpCase{"gate_vectors_gate", {2, 4}, [](Tape& t, Var x) { return gate_vectors(constant_like(t, {6, 4}, 8), x); }},
        OpCase{"group_mean", {6, 3}, [](Tape&, Var x) { return group_mean(x, 3); }},
        OpCase{"repeat_rows", {2, 3}, [](Tape&, Var x) { return repeat_rows(x, 4); }},
        OpCase{"gather_max", {6, 3},
               [](Tape&, Var x) {
                 static const std::vector<std::vector<int>> groups{{0, 1, 2}, {2, 3, 5}, {4}};
                 return gather_max(x, groups);
               }},
        OpCase{"max_rows", {5, 3}, [](Tape&, Var x) { return max_rows(x); }},
        OpCase{"broadcast_rows", {1, 3}, [](Tape&, Var x) { return broadcast_rows(x, 4); }},
        OpCase{"mean", {3, 4}, [](Tape&, Var x) { return mean(x); }},
        OpCase{"attention_causal", {5, 8},
               [](Tape& t, Var x) {
                 return attention(x, matmul(x, constant_like(t, {8, 8}, 9, 0.5)), constant_like(t, {5, 8}, 10), 2,
                                  AttentionMask{true, 0});
               }},
        OpCase{"attention_prefix", {5, 8},
               [](Tape& t, Var x) {
                 return attention(constant_like(t, {5, 8}, 12), x, x, 4, AttentionMask{true, 2});
               }},
        OpCase{"attention_full", {4, 6},
               [](Tape& t, Var x) { return attention(x, x, constant_like(t, {4, 6}, 13), 3, AttentionMask{}); }}),
    [](const ::testing::TestParamInfo<OpCase>& info) { return std::string(info.param.name); });

TEST(Attention, MatchesNaiveMultiHeadComputation) {
  const std::size_t t = 4, h = 6, heads = 2, dh = h / heads;
  Rng rng(14);
  Tensor q = random_tensor({t, h}, rng), k = random_tensor({t, h}, rng), v = random_tensor({t, h}, rng);
  for (bool causal : {false, true}) {
    Tape tape(Precision::f64);
    const auto got = tape.values(attention(tape.constant(q), tape.constant(k), tape.constant(v), heads, {causal, 0}));
    for (std::size_t hd = 0; hd < heads; ++hd)
      for (std::size_t i = 0; i < t; ++i) {
        std::vector<double> s(t, -1e300);
        double m = -1e300;
        for (std::size_t j = 0; j < t; ++j) {
          if (causal && j > i) continue;
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) dot += q.at(i, hd * dh + c) * k.at(j, hd * dh + c);
          s[j] = dot / std::sqrt(static_cast<double>(dh));
          m = std::max(m, s[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < t; ++j) z += (causal && j > i) ? 0.0 : std::exp(s[j] - m);
        for (std::size_t c = 0; c < dh; ++c) {
          double o = 0.0;
          for (std::size_t j = 0; j < t; ++j)
            if (!(causal && j > i)) o += std::exp(s[j] - m) / z * v.at(j, hd * dh + c);
          EXPECT_NEAR(got[i * h + hd * dh + c], o, 1e-6);
        }
      }
  }
}

TEST(Attention, PrefixMaskLetsPrefixSeeItselfOnly) {
  AttentionMask m{true, 3};
  EXPECT_TRUE(m.allowed(0, 2));
  EXPECT_TRUE(m.allowed(2, 0));
  EXPECT_FALSE(m.allowed(2, 3));
  EXPECT_TRUE(m.allowed(4, 3));
  EXPECT_FALSE(m.allowed(4, 5));
}

TEST(GatherMax, TiesGoToFirstListedRow) {
  Tensor x({3, 1}, {2, 2, 1});
  x.set_requires_grad(true);
  Tape tape;
  const std::vector<std::vector<int>> groups{{1, 0, 2}};
  Var y = gather_max(tape.param(x), groups);
  tape.backward(sum(y));
  tape.accumulate_param_grads();
  EXPECT_EQ(x.grad()[1], 1.0f);
  EXPECT_EQ(x.grad()[0], 0.0f);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(15);
  Linear lin(4, 3, rng, 0.5);
  Tape tape;
  Var y = gelu(lin.forward(tape, tape.constant(random_tensor({2, 4}, rng))));
  const std::vector<float> zeros(6, 0.0f);
  tape.backward(y, zeros);
  tape.accumulate_param_grads();
  for (float g : lin.weight.grad()) EXPECT_EQ(g, 0.0f);
  for (float g : lin.bias.grad()) EXPECT_EQ(g, 0.0f);
}

TEST(Backward, RepeatedRunsAreBitIdentical) {
  auto run = [] {
    Rng rng(16);
    TransformerConfig cfg{16, 2, 2, 2, 0.0};
    Transformer tr(cfg, rng);
    Tensor x = random_tensor({5, 16}, rng);
    Tape tape;
    Var out = sum(tr.forward(tape, tape.constant(x), AttentionMask{true, 0}));
    tape.backward(out);
    tape.accumulate_param_grads();
    ParamList ps;
    tr.collect("t", ps);
    std::vector<float> grads;
    for (auto& p : ps) grads.insert(grads.end(), p.tensor->grad().begin(), p.tensor->grad().end());
    grads.push_back(static_cast<float>(tape.item(out)));
    return grads;
  };
  EXPECT_EQ(run(), run());
}

TEST(Transformer, GradientCheckThroughBlocks) {
  Rng rng(17);
  TransformerConfig cfg{8, 2, 2, 2, 0.0};
  Transformer tr(cfg, rng);
  Tensor x = random_tensor({4, 8}, rng);
  ParamList ps;
  tr.collect("t", ps);
  std::vector<Tensor*> params{&x};
  for (auto& p : ps) params.push_back(p.tensor);
  auto r = gradient_check([&](Tape& t) { return weighted_sum(t, tr.forward(t, t.param(x), {true, 0}), 5); }, params);
  EXPECT_LT(r.max_relative_error, 1e-3);
}

TEST(Dropout, IdentityAtZeroAndInvertedScaling) {
  Rng rng(18);
  Tensor x({1000, 1}, 1.0f);
  Tape tape;
  EXPECT_EQ(values(tape, dropout(tape.constant(x), 0.0, rng)), std::vector<float>(1000, 1.0f));
  const auto y = values(tape, dropout(tape.constant(x), 0.5, rng));
  std::size_t kept = 0;
  for (float v : y) {
    EXPECT_TRUE(v == 0.0f || v == 2.0f);
    kept += v != 0.0f;
  }
  EXPECT_NEAR(static_cast<double>(kept) / 1000.0, 0.5, 0.06);
}

TEST(Tape, NonRecordingTapeRecordsNothing) {
  Rng rng(19);
  Linear lin(3, 3, rng, 1.0);
  Tape tape(Precision::f32, false);
  lin.forward(tape, tape.constant(random_tensor({2, 3}, rng)));
  EXPECT_EQ(tape.op_count(), 0u);
}

TEST(Sinusoidal, FirstRowAlternatesZeroOne) {
  Tensor p = sinusoidal_positions(3, 4);
  EXPECT_EQ(p.at(0, 0), 0.0f);
  EXPECT_EQ(p.at(0, 1), 1.0f);
  EXPECT_NEAR(p.at(1, 0), std::sin(1.0), 1e-6);
}
