#include <gtest/gtest.h>

#include <cmath>

#include "hopgat/adam.hpp"
#include "hopgat/errors.hpp"
#include "hopgat/metrics.hpp"
#include "hopgat/rng.hpp"
#include "oracles.hpp"

using namespace hopgat;

// Reference trajectory computed independently: minimise w² from w = 1.
TEST(AdamTest, QuadraticTrajectory) {
  Parameter w("w", Tensor::vector({1.0}));
  Adam adam({0.1, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 200; ++i) {
    Tape t;
    t.backward(sum(square(t.leaf(w))));
    adam.step(std::vector<Parameter*>{&w});
  }
  EXPECT_NEAR(w.value[0], -7.21798647770884e-06, 1e-15);
  EXPECT_EQ(adam.steps(), 200u);
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr · sign(g) for any g.
  Parameter w("w", Tensor::vector({3.0, -2.0}));
  Adam adam({0.01});
  Tape t;
  t.backward(sum(square(t.leaf(w))));
  adam.step(std::vector<Parameter*>{&w});
  EXPECT_NEAR(w.value[0], 2.99, 1e-9);
  EXPECT_NEAR(w.value[1], -1.99, 1e-9);
  EXPECT_FALSE(w.has_grad);
}

TEST(AdamTest, MissingGradIsAUsageError) {
  Parameter w("w", Tensor::vector({1.0}));
  Adam adam;
  EXPECT_THROW(adam.step(std::vector<Parameter*>{&w}), UsageError);
}

TEST(MetricsTest, UniformLogitsGiveLogClassCount) {
  Graph g;
  g.num_nodes = 4;
  g.num_classes = 5;
  g.labels = {0, 1, 2, 4};
  Tape t;
  const Var s = t.constant(Tensor({4, 5}, 0.3));
  const std::vector<std::uint32_t> nodes{0, 1, 2, 3};
  EXPECT_NEAR(classification_loss(s, g, nodes).item(), std::log(5.0), 1e-15);
  EXPECT_THROW(classification_loss(s, g, std::vector<std::uint32_t>{}), ConfigError);
}

TEST(MetricsTest, AccuracyCounts) {
  const Tensor s = Tensor::matrix(3, 2, {1.0, 0.0, 0.0, 1.0, 2.0, -1.0});
  const std::vector<int> labels{0, 1, 1};
  EXPECT_DOUBLE_EQ(accuracy(s, labels, std::vector<std::uint32_t>{0, 1}), 1.0);
  const AccuracyCount c = count_correct(s, labels, std::vector<std::uint32_t>{0, 1, 2});
  EXPECT_EQ(c.correct, 2u);
  EXPECT_EQ(c.total, 3u);
  EXPECT_THROW(accuracy(s, labels, std::vector<std::uint32_t>{}), ConfigError);
}

TEST(MetricsTest, MicroF1MatchesBruteForce) {
  Rng rng(20);
  const Tensor scores = oracle::random_tensor({20, 6}, rng, -2.0, 2.0);
  Tensor targets({20, 6});
  for (double& v : targets.data()) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
  std::vector<std::uint32_t> nodes;
  for (std::uint32_t v = 0; v < 20; v += 2) nodes.push_back(v);
  const F1Count c = count_f1(scores, targets, nodes);
  const oracle::Counts b = oracle::brute_f1_counts(scores, targets, nodes);
  EXPECT_EQ(c.tp, b.tp);
  EXPECT_EQ(c.fp, b.fp);
  EXPECT_EQ(c.fn, b.fn);
  EXPECT_DOUBLE_EQ(micro_f1(scores, targets, nodes),
                   2.0 * b.tp / static_cast<double>(2 * b.tp + b.fp + b.fn));
}

TEST(MetricsTest, DegenerateMicroF1IsOne) {
  const Tensor scores({3, 2}, -5.0);
  const Tensor targets({3, 2});
  const F1Count c = count_f1(scores, targets, std::vector<std::uint32_t>{0, 1, 2});
  EXPECT_TRUE(c.degenerate());
  EXPECT_EQ(c.value(), 1.0);
}

TEST(MetricsTest, MultiLabelLossIsBce) {
  Graph g;
  g.num_nodes = 2;
  g.num_classes = 2;
  g.label_mode = LabelMode::multi;
  g.label_matrix = Tensor::matrix(2, 2, {1, 0, 0, 1});
  Tape t;
  const Var s = t.constant(Tensor({2, 2}));
  EXPECT_NEAR(classification_loss(s, g, std::vector<std::uint32_t>{0, 1}).item(), std::log(2.0), 1e-15);
}
