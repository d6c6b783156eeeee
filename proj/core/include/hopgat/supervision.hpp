#pragma once

#include <cstdint>
#include <span>

#include "hopgat/attention.hpp"
#include "hopgat/graph.hpp"
#include "hopgat/tensor.hpp"

namespace hopgat {

// Target logit for a pair at hop distance hv: 1 for the node itself, 1 - hv
// below max_hv, and 1 - max_hv for everything at or beyond it.
double ground_truth(int hv, int max_hv);

// Supervised pairs for one batch: every near pair (hv < max_hv, self pairs
// included) plus a random subset of the far pairs (hv >= max_hv).
struct PairSample {
  PairList near;
  PairList far;
  double ratio = 1.0;
  std::uint64_t far_total = 0;

  std::size_t size() const { return near.size() + far.size(); }
  // near followed by far, without CSR offsets.
  PairList combined() const;
};

class PairSampler {
 public:
  // Throws ConfigError unless 0 < ratio <= 1. `hops` must outlive the sampler.
  PairSampler(const HopMatrix& hops, double ratio);

  // Draws round(ratio × far_total) distinct far pairs. Deterministic in seed.
  PairSample sample(std::uint64_t seed) const;

  const PairList& near_pairs() const { return near_; }
  std::uint64_t far_total() const { return far_total_; }
  std::uint64_t far_sample_size() const;

 private:
  const HopMatrix* hops_;
  double ratio_;
  PairList near_;
  std::uint64_t far_total_ = 0;
};

// Mean squared distance between raw logits and their targets, averaged over
// every (layer, head) field and every supervised pair.
Var attention_loss(std::span<const HeadScores> fields, const PairSample& sample, int max_hv);

// All heads of all layers of a forward pass, in layer-major order.
std::vector<HeadScores> collect_fields(const ModelOutput& out);

}  // namespace hopgat
