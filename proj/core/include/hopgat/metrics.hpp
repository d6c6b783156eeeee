#pragma once

#include <cstdint>
#include <span>

#include "hopgat/graph.hpp"
#include "hopgat/tensor.hpp"

namespace hopgat {

// Softmax cross-entropy (single-label) or per-label sigmoid BCE (multi-label),
// averaged over `nodes`. Throws ConfigError when `nodes` is empty.
Var classification_loss(Var scores, const Graph& g, std::span<const std::uint32_t> nodes);

struct AccuracyCount {
  std::uint64_t correct = 0;
  std::uint64_t total = 0;
  double value() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

// Arg-max predictions against class ids.
AccuracyCount count_correct(const Tensor& scores, std::span<const int> labels, std::span<const std::uint32_t> nodes);
double accuracy(const Tensor& scores, std::span<const int> labels, std::span<const std::uint32_t> nodes);

struct F1Count {
  std::uint64_t tp = 0, fp = 0, fn = 0;

  F1Count& operator+=(const F1Count& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  // No positives predicted or present at all: F1 is taken as 1.
  bool degenerate() const { return tp + fp + fn == 0; }
  double value() const {
    return degenerate() ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  }
};

// Pooled TP/FP/FN over nodes and labels, predicting positive when
// sigmoid(score) >= threshold.
F1Count count_f1(const Tensor& scores, const Tensor& targets, std::span<const std::uint32_t> nodes,
                 double threshold = 0.5);
double micro_f1(const Tensor& scores, const Tensor& targets, std::span<const std::uint32_t> nodes,
                double threshold = 0.5);

}  // namespace hopgat
