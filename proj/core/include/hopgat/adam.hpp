#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hopgat/tensor.hpp"

namespace hopgat {

struct AdamOptions {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Moment buffers are matched to parameters by
// position, so the same parameter list must be passed to every step().
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Applies one update from each parameter's accumulated grad, then clears
  // the grads. Throws UsageError if a parameter has no grad.
  void step(std::span<Parameter* const> params);

  std::uint64_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamOptions options_;
  std::uint64_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace hopgat
