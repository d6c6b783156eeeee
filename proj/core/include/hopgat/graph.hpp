#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "hopgat/tensor.hpp"

namespace hopgat {

enum class LabelMode { single, multi };

// Undirected attributed graph with node splits. `visible` lists the training
// nodes whose labels the classification loss may use.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  Tensor features;  // num_nodes × F
  LabelMode label_mode = LabelMode::single;
  std::size_t num_classes = 0;
  std::vector<int> labels;  // single-label: class id per node
  Tensor label_matrix;      // multi-label: num_nodes × num_classes, entries 0/1
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
  std::vector<std::uint32_t> visible;

  std::size_t feature_dim() const { return features.cols(); }

  // Throws ConfigError on out-of-range endpoints, overlapping splits, a
  // visible node outside train, or label storage inconsistent with the mode.
  void validate() const;

  // Symmetrised neighbour lists, sorted, without duplicates or self loops.
  std::vector<std::vector<std::uint32_t>> adjacency() const;
};

// All-pairs shortest-path hop counts, saturated: any distance ≥ max_hv (and
// unreachable pairs) is stored as max_hv.
class HopMatrix {
 public:
  HopMatrix() = default;
  HopMatrix(std::size_t n, int max_hv);

  std::size_t size() const { return n_; }
  int max_hv() const { return max_hv_; }
  int at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  bool saturated(std::size_t i, std::size_t j) const { return at(i, j) >= max_hv_; }
  void set(std::size_t i, std::size_t j, int hv) { values_[i * n_ + j] = static_cast<std::uint8_t>(hv); }

  // Number of ordered pairs (i != j allowed or not) per stored hop value.
  std::vector<std::uint64_t> histogram() const;

 private:
  std::size_t n_ = 0;
  int max_hv_ = 1;
  std::vector<std::uint8_t> values_;
};

// Truncated BFS from every node. max_hv must be in [1, 255].
HopMatrix compute_hop_matrix(const Graph& g, int max_hv);

// Node pairs grouped by center node (CSR). Pairs of one center are sorted by
// neighbour id. A list built by sampling has empty `offsets`.
struct PairList {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> centers;
  std::vector<std::uint32_t> neighbors;
  std::vector<std::uint8_t> hops;

  std::size_t size() const { return centers.size(); }
  void push_back(std::uint32_t i, std::uint32_t j, int hv) {
    centers.push_back(i);
    neighbors.push_back(j);
    hops.push_back(static_cast<std::uint8_t>(hv));
  }
};

// Every ordered pair (i, j) with hop(i, j) <= max_hop, self pairs included.
PairList neighborhood_pairs(const HopMatrix& hops, int max_hop);

// ceil(rate × train_size), capped at train_size.
std::size_t visible_count(std::size_t train_size, double rate);

// Marks visible_count(|train|, rate) training nodes label-visible, drawn
// without replacement. Deterministic under `seed`.
Graph subsample_labels(const Graph& g, double rate, std::uint64_t seed);

struct ConsistencyRow {
  int hop = 0;
  bool saturated = false;  // bucket for hop >= max_hv
  std::uint64_t pairs = 0;
  std::uint64_t same_label = 0;
  double rate = 0.0;  // same_label / pairs, 0 for an empty bucket
};

// Fraction of unordered node pairs sharing a label, per hop value 1..max_hv-1
// plus the saturated bucket. Single-label graphs only.
std::vector<ConsistencyRow> label_consistency_by_hop(const Graph& g, const HopMatrix& hops);

struct SbmOptions {
  std::size_t blocks = 2;
  std::size_t nodes_per_block = 150;
  double p_in = 0.05;
  double p_out = 0.002;
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
  double val_fraction = 1.0 / 6.0;
  double test_fraction = 1.0 / 3.0;
};

// Stochastic block model. Features are the one-hot block signature plus
// N(0, feature_noise²) noise; labels are block ids. Splits are stratified
// per block; every training node starts label-visible.
Graph generate_sbm(const SbmOptions& options);

}  // namespace hopgat
