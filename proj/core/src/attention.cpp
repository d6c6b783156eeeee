#include "hopgat/attention.hpp"

#include <cmath>

#include "hopgat/errors.hpp"
#include "hopgat/rng.hpp"

namespace hopgat {

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({fan_in, fan_out});
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

std::vector<std::uint32_t> widen(const std::vector<std::uint8_t>& v) { return {v.begin(), v.end()}; }

// x (N×d) · w (d×1) + b
Var score(Tape& tape, Var x, Parameter& w, Parameter& b) {
  return add_row(matmul(x, tape.leaf(w)), tape.leaf(b));
}

}  // namespace

std::string_view to_string(AttentionKind kind) {
  switch (kind) {
    case AttentionKind::baseline: return "baseline";
    case AttentionKind::product: return "product";
    case AttentionKind::addition: return "addition";
  }
  return "?";
}

AttentionKind parse_attention_kind(std::string_view text) {
  if (text == "baseline" || text == "gat") return AttentionKind::baseline;
  if (text == "product") return AttentionKind::product;
  if (text == "addition") return AttentionKind::addition;
  throw ConfigError("unknown attention kind '" + std::string(text) + "'");
}

void LayerConfig::validate() const {
  if (in_dim < 1 || out_dim < 1 || heads < 1) throw ConfigError("layer dims and head count must be >= 1");
  for (double r : {dp1, dp2, dp3}) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("dropout rates must be in [0, 1)");
  }
  if (!(leaky_slope >= 0.0)) throw ConfigError("leaky slope must be non-negative");
}

ModelConfig ModelConfig::stack(std::size_t in_dim, const std::vector<std::size_t>& heads,
                               const std::vector<std::size_t>& widths, AttentionKind kind, double dp1,
                               double dp2, double dp3, int max_hv) {
  if (heads.size() != widths.size() || heads.empty()) {
    throw ConfigError("head and width lists must be non-empty and equally long");
  }
  ModelConfig cfg;
  cfg.max_hv = max_hv;
  std::size_t dim = in_dim;
  for (std::size_t l = 0; l < heads.size(); ++l) {
    LayerConfig layer;
    layer.in_dim = dim;
    layer.out_dim = widths[l];
    layer.heads = heads[l];
    layer.kind = kind;
    layer.final_layer = l + 1 == heads.size();
    layer.dp1 = dp1;
    layer.dp2 = dp2;
    layer.dp3 = dp3;
    cfg.layers.push_back(layer);
    dim = layer.output_width();
  }
  cfg.validate();
  return cfg;
}

void ModelConfig::validate() const {
  if (layers.empty()) throw ConfigError("model needs at least one layer");
  if (max_hv < 2 || max_hv > 255) throw ConfigError("max_hv must be in [2, 255]");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    layers[l].validate();
    if (layers[l].kind != layers.front().kind) throw ConfigError("all layers must share one attention kind");
    if (layers[l].final_layer != (l + 1 == layers.size())) throw ConfigError("only the last layer averages heads");
    if (l > 0 && layers[l].in_dim != layers[l - 1].output_width()) {
      throw ConfigError("layer " + std::to_string(l) + " expects " + std::to_string(layers[l].in_dim) +
                        " inputs but the previous layer emits " + std::to_string(layers[l - 1].output_width()));
    }
  }
}

Var pair_logits(const HeadScores& s, const PairList& pairs) {
  const Var c = gather(s.center, pairs.centers);
  const Var n = gather(s.neighbor, pairs.neighbors);
  switch (s.kind) {
    case AttentionKind::baseline:
      return leaky_relu(c + n, s.leaky_slope);
    case AttentionKind::product:
      return c * (n + gather(s.hop, widen(pairs.hops)));
    case AttentionKind::addition:
      return leaky_relu(gather(s.hop, widen(pairs.hops)) * (c + n), s.leaky_slope);
  }
  throw InternalError("pair_logits: unknown attention kind");
}

GraphContext GraphContext::build(const Graph& g, const ModelConfig& config) {
  if (g.feature_dim() != config.layers.front().in_dim) {
    throw ConfigError("graph has " + std::to_string(g.feature_dim()) + " features but the model expects " +
                      std::to_string(config.layers.front().in_dim));
  }
  GraphContext ctx;
  ctx.hops = compute_hop_matrix(g, config.max_hv);
  ctx.neighborhood = neighborhood_pairs(ctx.hops, config.neighborhood_hop());
  ctx.features = g.features;
  return ctx;
}

LayerOutput layer_forward(Tape& tape, Var input, const PairList& neighborhood, const LayerConfig& config,
                          LayerParams& params, const HopEncodingTable* table, bool training, Rng& rng) {
  if (params.heads.size() != config.heads) throw InternalError("layer_forward: head count mismatch");
  if (config.kind != AttentionKind::baseline && table == nullptr) {
    throw InternalError("layer_forward: hop-aware layer without a hop table");
  }
  LayerOutput out;
  const Var x = dropout(input, config.dp1, rng, training);
  const Var hop_rows = table ? tape.constant(table->rows()) : Var{};
  std::vector<Var> head_outputs;
  for (HeadParams& hp : params.heads) {
    const Var wh = matmul(x, tape.leaf(hp.weight));
    HeadScores s;
    s.kind = config.kind;
    s.leaky_slope = config.leaky_slope;
    s.center = score(tape, wh, hp.center_weight, hp.center_bias);
    s.neighbor = score(tape, wh, hp.neighbor_weight, hp.neighbor_bias);
    if (config.kind != AttentionKind::baseline) s.hop = score(tape, hop_rows, hp.hop_weight, hp.hop_bias);

    const Var logits = pair_logits(s, neighborhood);
    const Var alpha = segment_softmax(logits, neighborhood.offsets);
    const Var alpha_drop = dropout(alpha, config.dp2, rng, training);
    const Var wh_drop = dropout(wh, config.dp3, rng, training);
    const Var agg = aggregate(neighborhood.offsets, neighborhood.neighbors, alpha_drop, wh_drop);
    head_outputs.push_back(config.final_layer ? agg : elu(agg));
    out.heads.push_back(s);
    out.attention.push_back(alpha);
  }
  out.features = config.final_layer ? average(head_outputs) : concat_cols(head_outputs);
  return out;
}

Model::Model(ModelConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(init_seed);
  for (std::size_t l = 0; l < config_.layers.size(); ++l) {
    const LayerConfig& lc = config_.layers[l];
    const std::size_t d = hop_table_width(lc.out_dim);
    if (lc.kind != AttentionKind::baseline) tables_.emplace_back(d, config_.max_hv);
    LayerParams lp;
    for (std::size_t k = 0; k < lc.heads; ++k) {
      const std::string prefix = "layer" + std::to_string(l) + "/head" + std::to_string(k) + "/";
      HeadParams hp;
      hp.weight = Parameter(prefix + "W", glorot(lc.in_dim, lc.out_dim, rng));
      hp.center_weight = Parameter(prefix + "a_c", glorot(lc.out_dim, 1, rng));
      hp.center_bias = Parameter(prefix + "b_c", Tensor({1, 1}));
      hp.neighbor_weight = Parameter(prefix + "a_n", glorot(lc.out_dim, 1, rng));
      hp.neighbor_bias = Parameter(prefix + "b_n", Tensor({1, 1}));
      if (lc.kind != AttentionKind::baseline) {
        hp.hop_weight = Parameter(prefix + "a_he", glorot(d, 1, rng));
        hp.hop_bias = Parameter(prefix + "b_he", Tensor({1, 1}));
      }
      lp.heads.push_back(std::move(hp));
    }
    if (config_.has_skip(l) && lc.in_dim != lc.output_width()) {
      lp.skip = Parameter("layer" + std::to_string(l) + "/skip", glorot(lc.in_dim, lc.output_width(), rng));
    }
    layers_.push_back(std::move(lp));
  }
}

const HopEncodingTable* Model::table(std::size_t layer) const {
  return tables_.empty() ? nullptr : &tables_.at(layer);
}

ModelOutput Model::forward(Tape& tape, const GraphContext& ctx, bool training, Rng& rng) {
  if (ctx.hops.max_hv() != config_.max_hv) throw ConfigError("hop matrix built with a different max_hv");
  ModelOutput out;
  Var h = tape.constant(ctx.features);
  for (std::size_t l = 0; l < config_.layers.size(); ++l) {
    LayerOutput lo = layer_forward(tape, h, ctx.neighborhood, config_.layers[l], layers_[l], table(l), training, rng);
    Var next = lo.features;
    if (config_.has_skip(l)) {
      auto& skip = layers_[l].skip;
      next = next + (skip ? matmul(h, tape.leaf(*skip)) : h);
    }
    h = next;
    out.layers.push_back(std::move(lo));
  }
  out.scores = h;
  return out;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> ps;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (HeadParams& hp : layers_[l].heads) {
      for (Parameter* p : {&hp.weight, &hp.center_weight, &hp.center_bias, &hp.neighbor_weight, &hp.neighbor_bias}) {
        ps.push_back(p);
      }
      if (config_.layers[l].kind != AttentionKind::baseline) {
        ps.push_back(&hp.hop_weight);
        ps.push_back(&hp.hop_bias);
      }
    }
    if (layers_[l].skip) ps.push_back(&*layers_[l].skip);
  }
  return ps;
}

std::vector<const Parameter*> Model::parameters() const {
  auto ps = const_cast<Model*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::vector<Parameter*> Model::weight_matrices() {
  std::vector<Parameter*> ws;
  for (Parameter* p : parameters()) {
    const std::string& n = p->name;
    if (n.find("/b_") == std::string::npos) ws.push_back(p);
  }
  return ws;
}

}  // namespace hopgat
