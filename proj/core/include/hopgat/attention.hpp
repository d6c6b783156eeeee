#pragma once

// Graph attention layers.
//
// Every head transforms its input with W and scores nodes with three
// one-output feedforward maps: a_c on the center node, a_n on the neighbour,
// and a_he on the hop encoding of their distance. The per-pair logit is then
//
//   baseline:  LeakyReLU(s_c(i) + s_n(j))
//   product:   s_c(i) · (s_n(j) + s_he(hv_ij))
//   addition:  LeakyReLU(s_he(hv_ij) · (s_c(i) + s_n(j)))
//
// Scores are computed once per node (and once per hop value), so the logit of
// any pair, inside the aggregation neighbourhood or not, is a cheap gather.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hopgat/graph.hpp"
#include "hopgat/hop_codec.hpp"
#include "hopgat/tensor.hpp"

namespace hopgat {

class Rng;

enum class AttentionKind { baseline, product, addition };

std::string_view to_string(AttentionKind kind);
AttentionKind parse_attention_kind(std::string_view text);

struct LayerConfig {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::size_t heads = 1;
  AttentionKind kind = AttentionKind::addition;
  bool final_layer = false;  // average heads instead of concatenating
  double dp1 = 0.0;          // on the layer input
  double dp2 = 0.0;          // on normalised attention coefficients
  double dp3 = 0.0;          // on transformed features before aggregation
  double leaky_slope = 0.2;

  std::size_t output_width() const { return final_layer ? out_dim : heads * out_dim; }
  void validate() const;
};

struct ModelConfig {
  std::vector<LayerConfig> layers;
  int max_hv = 2;

  // Layers with the given head counts and per-head widths. The last layer
  // averages its heads.
  static ModelConfig stack(std::size_t in_dim, const std::vector<std::size_t>& heads,
                           const std::vector<std::size_t>& widths, AttentionKind kind, double dp1,
                           double dp2, double dp3, int max_hv);

  AttentionKind kind() const { return layers.empty() ? AttentionKind::baseline : layers.front().kind; }
  bool has_skip(std::size_t layer) const { return layers.size() > 2 && layer > 0; }
  // Largest hop value inside the aggregation neighbourhood.
  int neighborhood_hop() const { return kind() == AttentionKind::baseline ? 1 : max_hv - 1; }
  std::size_t num_classes() const { return layers.empty() ? 0 : layers.back().output_width(); }
  void validate() const;
};

struct HeadParams {
  Parameter weight;  // in_dim × out_dim
  Parameter center_weight, center_bias;
  Parameter neighbor_weight, neighbor_bias;
  Parameter hop_weight, hop_bias;  // unused by the baseline kind
};

struct LayerParams {
  std::vector<HeadParams> heads;
  std::optional<Parameter> skip;  // projection when the skip path changes width
};

// Scorer outputs of one head on one graph. Together with the kind they fix
// the logit of every node pair.
struct HeadScores {
  AttentionKind kind = AttentionKind::baseline;
  double leaky_slope = 0.2;
  Var center;    // N×1
  Var neighbor;  // N×1
  Var hop;       // (max_hv+1)×1, unset for baseline
};

// Raw logits e_ij for the listed pairs, on the scores' tape.
Var pair_logits(const HeadScores& scores, const PairList& pairs);

// Per-graph structures shared by every forward pass.
struct GraphContext {
  HopMatrix hops;
  PairList neighborhood;
  Tensor features;

  static GraphContext build(const Graph& g, const ModelConfig& config);
};

struct LayerOutput {
  Var features;
  std::vector<HeadScores> heads;
  std::vector<Var> attention;  // α over the neighbourhood pairs, per head
};

// One attention layer. `table` may be null for the baseline kind.
LayerOutput layer_forward(Tape& tape, Var input, const PairList& neighborhood, const LayerConfig& config,
                          LayerParams& params, const HopEncodingTable* table, bool training, Rng& rng);

struct ModelOutput {
  Var scores;  // N × classes, pre-softmax/sigmoid
  std::vector<LayerOutput> layers;
};

class Model {
 public:
  Model() = default;
  // Glorot-uniform weights, zero biases.
  Model(ModelConfig config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  std::vector<LayerParams>& layers() { return layers_; }
  const std::vector<LayerParams>& layers() const { return layers_; }
  const HopEncodingTable* table(std::size_t layer) const;

  ModelOutput forward(Tape& tape, const GraphContext& ctx, bool training, Rng& rng);

  // Every trainable tensor in a fixed order; names are "layer{l}/head{k}/role".
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  // Weights subject to L2 regularisation (biases excluded).
  std::vector<Parameter*> weight_matrices();

 private:
  ModelConfig config_;
  std::vector<LayerParams> layers_;
  std::vector<HopEncodingTable> tables_;
};

}  // namespace hopgat
