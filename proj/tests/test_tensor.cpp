#include <gtest/gtest.h>

#include <cmath>

#include "gradient_suite.hpp"
#include "hopgat/errors.hpp"
#include "hopgat/rng.hpp"
#include "hopgat/tensor.hpp"
#include "oracles.hpp"

using namespace hopgat;

namespace {

Tensor mat(std::size_t r, std::size_t c, std::vector<double> v) { return Tensor::matrix(r, c, std::move(v)); }

}  // namespace

TEST(TensorTest, ShapeQueries) {
  const Tensor t({2, 3});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(shape_string(t.shape()), "[2,3]");
  const Tensor v = Tensor::vector({1, 2, 3, 4});
  EXPECT_EQ(v.rows(), 1u);
  EXPECT_EQ(v.cols(), 4u);
  EXPECT_EQ(Tensor::identity(3).at(1, 1), 1.0);
  EXPECT_EQ(Tensor::identity(3).at(1, 2), 0.0);
}

TEST(TensorTest, MatmulValues) {
  Tape t;
  const Var a = t.constant(mat(2, 3, {1, 2, 3, 4, 5, 6}));
  const Var b = t.constant(mat(3, 2, {7, 8, 9, 10, 11, 12}));
  const Tensor& c = matmul(a, b).value();
  EXPECT_EQ(c.values(), (std::vector<double>{58, 64, 139, 154}));
  EXPECT_THROW(matmul(a, a), DimensionError);
}

TEST(TensorTest, ElementwiseValues) {
  Tape t;
  const Var x = t.constant(Tensor::vector({-2.0, 0.5}));
  EXPECT_DOUBLE_EQ(leaky_relu(x, 0.2).value()[0], -0.4);
  EXPECT_DOUBLE_EQ(leaky_relu(x, 0.2).value()[1], 0.5);
  EXPECT_DOUBLE_EQ(elu(x).value()[0], std::exp(-2.0) - 1.0);
  EXPECT_DOUBLE_EQ(sigmoid(x).value()[1], 1.0 / (1.0 + std::exp(-0.5)));
  EXPECT_DOUBLE_EQ(square(x).value()[0], 4.0);
  EXPECT_DOUBLE_EQ(mean(x).item(), -0.75);
}

TEST(TensorTest, SigmoidSaturatesWithoutOverflow) {
  Tape t;
  const Var x = t.constant(Tensor::vector({-800.0, 800.0}));
  EXPECT_EQ(sigmoid(x).value()[0], 0.0);
  EXPECT_EQ(sigmoid(x).value()[1], 1.0);
}

TEST(TensorTest, NonFiniteValuesAreRejected) {
  Tape t;
  const Var x = t.constant(Tensor::vector({1000.0}));
  EXPECT_THROW(hopgat::exp(x), NumericError);
}

TEST(TensorTest, MixingTapesIsAUsageError) {
  Tape t1, t2;
  const Var a = t1.constant(Tensor::vector({1.0}));
  const Var b = t2.constant(Tensor::vector({1.0}));
  EXPECT_THROW(add(a, b), UsageError);
}

TEST(TensorTest, SecondBackwardSweepThrows) {
  Parameter p("p", Tensor::vector({1.0, 2.0}));
  Tape t;
  const Var loss = sum(square(t.leaf(p)));
  t.backward(loss);
  EXPECT_THROW(t.backward(loss), UsageError);
}

TEST(TensorTest, BackwardNeedsScalar) {
  Parameter p("p", Tensor::vector({1.0, 2.0}));
  Tape t;
  EXPECT_THROW(t.backward(square(t.leaf(p))), UsageError);
}

TEST(TensorTest, GradientsAccumulateAcrossUses) {
  // d/dp (p*p + 3p) = 2p + 3, with p bound twice.
  Parameter p("p", Tensor::vector({2.0}));
  Tape t;
  const Var a = t.leaf(p), b = t.leaf(p);
  t.backward(sum(add(mul(a, b), scale(a, 3.0))));
  EXPECT_DOUBLE_EQ(p.grad[0], 7.0);
}

TEST(TensorTest, ConstantsReceiveNoParameterGradient) {
  Parameter p("p", Tensor::vector({1.0, -1.0}));
  Tape t;
  const Var c = t.constant(Tensor::vector({5.0, 6.0}));
  EXPECT_FALSE(c.requires_grad());
  t.backward(sum(mul(t.leaf(p), c)));
  EXPECT_EQ(p.grad.values(), (std::vector<double>{5.0, 6.0}));
}

// Backward is linear in the seed: grad(a·s1 + b·s2) = a·grad(s1) + b·grad(s2).
TEST(TensorTest, BackwardIsLinearInTheSeed) {
  Rng rng(11);
  Parameter w("w", oracle::random_tensor({4, 3}, rng));
  const Tensor x = oracle::random_tensor({5, 4}, rng);
  const Tensor s1 = oracle::random_tensor({5, 3}, rng), s2 = oracle::random_tensor({5, 3}, rng);
  auto grad_for = [&](const Tensor& seed) {
    w.zero_grad();
    Tape t;
    t.backward(elu(matmul(t.constant(x), t.leaf(w))), seed);
    return w.grad;
  };
  const Tensor g1 = grad_for(s1), g2 = grad_for(s2);
  Tensor mix({5, 3});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.0 * s1[i] - 0.5 * s2[i];
  const Tensor gm = grad_for(mix);
  for (std::size_t i = 0; i < gm.size(); ++i) EXPECT_NEAR(gm[i], 2.0 * g1[i] - 0.5 * g2[i], 1e-12);
}

TEST(TensorTest, DropoutKeepsExpectationAndRate) {
  Rng rng(5);
  Tape t;
  const Var x = t.constant(Tensor({100, 100}, 1.0));
  const Tensor& y = dropout(x, 0.5, rng, true).value();
  std::size_t kept = 0;
  double total = 0.0;
  for (double v : y.data()) {
    kept += v != 0.0;
    total += v;
  }
  EXPECT_NEAR(static_cast<double>(kept) / 10000.0, 0.5, 0.02);
  EXPECT_NEAR(total / 10000.0, 1.0, 0.03);
}

TEST(TensorTest, DropoutIsIdentityInEvalModeAndAtRateZero) {
  Rng rng(5);
  Tape t;
  const Var x = t.constant(Tensor::vector({1.0, 2.0}));
  EXPECT_EQ(dropout(x, 0.5, rng, false).id(), x.id());
  EXPECT_EQ(dropout(x, 0.0, rng, true).id(), x.id());
  EXPECT_THROW(dropout(x, 1.0, rng, true), ConfigError);
}

TEST(TensorTest, MaskedSoftmaxRowsSumToOneOnMask) {
  Tape t;
  const Var x = t.constant(mat(2, 3, {1.0, 2.0, 3.0, -1.0, 0.0, 100.0}));
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 0};
  const Tensor& s = masked_softmax(x, mask).value();
  EXPECT_NEAR(s.at(0, 0) + s.at(0, 1), 1.0, 1e-15);
  EXPECT_EQ(s.at(0, 2), 0.0);
  EXPECT_EQ(s.at(1, 2), 0.0);  // a huge masked logit has no effect
  EXPECT_NEAR(s.at(1, 1), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  const std::vector<std::uint8_t> empty_row{1, 0, 0, 0, 0, 0};
  EXPECT_THROW(masked_softmax(x, empty_row), UsageError);
}

// The sparse segment softmax must agree with the dense masked version.
TEST(TensorTest, SegmentSoftmaxMatchesDenseMaskedSoftmax) {
  Rng rng(3);
  const std::size_t n = 9;
  std::vector<std::uint8_t> mask(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i * n + i] = 1;
    for (std::size_t j = 0; j < n; ++j)
      if (rng.uniform() < 0.3) mask[i * n + j] = 1;
  }
  const Tensor dense = oracle::random_tensor({n, n}, rng, -3.0, 3.0);
  std::vector<std::size_t> offsets{0};
  std::vector<double> packed;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j]) packed.push_back(dense.at(i, j));
    offsets.push_back(packed.size());
  }
  Tape t;
  const Tensor& a = masked_softmax(t.constant(dense), mask).value();
  const Tensor& b = segment_softmax(t.constant(Tensor::vector(packed)), offsets).value();
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (mask[i * n + j]) EXPECT_NEAR(a.at(i, j), b[p++], 1e-15);
}

TEST(TensorTest, CrossEntropyMatchesBruteForce) {
  Rng rng(8);
  const Tensor logits = oracle::random_tensor({6, 4}, rng, -3.0, 3.0);
  std::vector<int> labels{0, 3, 1, 2, 2, 0};
  const std::vector<std::uint32_t> rows{0, 1, 4, 5};
  Tape t;
  EXPECT_NEAR(softmax_cross_entropy(t.constant(logits), labels, rows).item(),
              oracle::brute_cross_entropy(logits, labels, rows), 1e-13);
}

TEST(TensorTest, SigmoidBceMatchesDirectFormula) {
  const Tensor logits = mat(2, 2, {0.3, -1.2, 2.0, 0.0});
  const Tensor targets = mat(2, 2, {1, 0, 0, 1});
  const std::vector<std::uint32_t> rows{0, 1};
  double expect = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logits[i]));
    expect -= targets[i] * std::log(p) + (1 - targets[i]) * std::log(1 - p);
  }
  Tape t;
  EXPECT_NEAR(sigmoid_bce(t.constant(logits), targets, rows).item(), expect / 4.0, 1e-14);
}

class OpGradientTest : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(OpGradientTest, CentralDifferencesAgree) {
  for (auto& c : gradient_suite::op_cases(GetParam())) {
    const auto r = oracle::check_gradients(c.params, c.fn);
    EXPECT_LE(r.worst, 1e-5) << c.name << ": " << r.where;
    EXPECT_GT(r.checked, 0u) << c.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradientTest, ::testing::Values(1u, 2u, 3u));
