#include "hopgat/metrics.hpp"

#include <cmath>

#include "hopgat/errors.hpp"

namespace hopgat {

Var classification_loss(Var scores, const Graph& g, std::span<const std::uint32_t> nodes) {
  if (nodes.empty()) throw ConfigError("classification loss over an empty node set");
  if (g.label_mode == LabelMode::single) return softmax_cross_entropy(scores, g.labels, nodes);
  return sigmoid_bce(scores, g.label_matrix, nodes);
}

AccuracyCount count_correct(const Tensor& scores, std::span<const int> labels, std::span<const std::uint32_t> nodes) {
  if (nodes.empty()) throw ConfigError("accuracy over an empty split");
  AccuracyCount c;
  const std::size_t k = scores.cols();
  for (std::uint32_t v : nodes) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (scores.at(v, j) > scores.at(v, best)) best = j;
    c.correct += static_cast<int>(best) == labels[v];
    ++c.total;
  }
  return c;
}

double accuracy(const Tensor& scores, std::span<const int> labels, std::span<const std::uint32_t> nodes) {
  return count_correct(scores, labels, nodes).value();
}

F1Count count_f1(const Tensor& scores, const Tensor& targets, std::span<const std::uint32_t> nodes, double threshold) {
  if (nodes.empty()) throw ConfigError("micro-F1 over an empty split");
  if (scores.shape() != targets.shape()) throw DimensionError("micro-F1: scores and targets differ in shape");
  F1Count c;
  const std::size_t k = scores.cols();
  for (std::uint32_t v : nodes) {
    for (std::size_t j = 0; j < k; ++j) {
      const bool predicted = 1.0 / (1.0 + std::exp(-scores.at(v, j))) >= threshold;
      const bool actual = targets.at(v, j) > 0.5;
      c.tp += predicted && actual;
      c.fp += predicted && !actual;
      c.fn += !predicted && actual;
    }
  }
  return c;
}

double micro_f1(const Tensor& scores, const Tensor& targets, std::span<const std::uint32_t> nodes, double threshold) {
  return count_f1(scores, targets, nodes, threshold).value();
}

}  // namespace hopgat
