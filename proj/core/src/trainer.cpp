#include "hopgat/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hopgat/adam.hpp"
#include "hopgat/errors.hpp"
#include "hopgat/metrics.hpp"
#include "hopgat/rng.hpp"
#include "hopgat/supervision.hpp"

namespace hopgat {

namespace {

// Independent random streams derived from the run seed.
enum Stream : std::uint64_t { kInit = 0, kDropout = 1, kSampling = 2, kLabels = 3, kProbes = 4, kShuffle = 5 };

const std::vector<std::uint32_t>& split_nodes(const Graph& g, Split split) {
  switch (split) {
    case Split::train: return g.train;
    case Split::val: return g.val;
    case Split::test: return g.test;
  }
  throw InternalError("unknown split");
}

void check_dataset(const ExperimentConfig& config, const std::vector<Graph>& graphs) {
  if (graphs.empty()) throw ConfigError("dataset has no graphs");
  const Graph& first = graphs.front();
  for (const Graph& g : graphs) {
    g.validate();
    if (g.feature_dim() != first.feature_dim()) throw ConfigError("graphs disagree on feature width");
    if (g.label_mode != first.label_mode || g.num_classes != first.num_classes) {
      throw ConfigError("graphs disagree on label mode or class count");
    }
  }
  if (config.widths.back() != first.num_classes) {
    throw ConfigError("final layer width " + std::to_string(config.widths.back()) + " does not match " +
                      std::to_string(first.num_classes) + " classes");
  }
  if ((first.label_mode == LabelMode::multi) != (config.mode == TaskMode::inductive)) {
    throw ConfigError("multi-label data runs in inductive mode and single-label data in transductive mode");
  }
}

std::vector<Tensor> copy_values(const Model& model) {
  std::vector<Tensor> values;
  for (const Parameter* p : model.parameters()) values.push_back(p->value);
  return values;
}

void restore_values(Model& model, const std::vector<Tensor>& values) {
  auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

std::string_view to_string(TaskMode mode) { return mode == TaskMode::inductive ? "inductive" : "transductive"; }

TaskMode parse_task_mode(std::string_view text) {
  if (text == "transductive") return TaskMode::transductive;
  if (text == "inductive") return TaskMode::inductive;
  throw ConfigError("unknown task mode '" + std::string(text) + "'");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  if (max_hv < 2 || max_hv > 255) throw ConfigError("max_hv must be in [2, 255]");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (heads.empty() || heads.size() != widths.size()) throw ConfigError("heads and widths must be equally long");
  for (double r : {dp1, dp2, dp3}) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("dropout rates must be in [0, 1)");
  }
  if (!(l2 >= 0.0)) throw ConfigError("L2 weight must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(label_rate > 0.0 && label_rate <= 1.0)) throw ConfigError("label rate must be in (0, 1]");
  if (!(sample_ratio > 0.0 && sample_ratio <= 1.0)) throw ConfigError("sample ratio must be in (0, 1]");
  if (force_gamma && !(*force_gamma >= 0.0 && *force_gamma <= 1.0)) throw ConfigError("forced gamma must be in [0, 1]");
  schedule.validate();
}

ModelConfig ExperimentConfig::model_config(std::size_t in_dim) const {
  ModelConfig mc = ModelConfig::stack(in_dim, heads, widths, attention, dp1, dp2, dp3, max_hv);
  for (auto& layer : mc.layers) layer.leaky_slope = leaky_slope;
  return mc;
}

ExperimentConfig ExperimentConfig::baseline_arm() const {
  ExperimentConfig c = *this;
  c.attention = AttentionKind::baseline;
  c.supervise = false;
  c.force_gamma.reset();
  return c;
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.preset = std::string(name);
  c.schedule = ScheduleConfig{100.0, 1.0, 0.85, 0.25};
  if (name == "cora") {
    c.dp1 = 0.2, c.dp2 = 0.0, c.dp3 = 0.2, c.l2 = 1e-4;
    c.attention = AttentionKind::addition;
    c.heads = {8, 1}, c.widths = {8, 7};
    c.learning_rate = 0.005;
    c.schedule.decay = 0.95;
    c.sample_ratio = 0.0003;
  } else if (name == "citeseer") {
    c.dp1 = 0.6, c.dp2 = 0.2, c.dp3 = 0.6, c.l2 = 0.0;
    c.attention = AttentionKind::addition;
    c.heads = {8, 1}, c.widths = {8, 6};
    c.learning_rate = 0.005;
    c.sample_ratio = 0.0005;
  } else if (name == "pubmed") {
    c.dp1 = 0.0, c.dp2 = 0.0, c.dp3 = 0.0, c.l2 = 0.0;
    c.attention = AttentionKind::addition;
    c.heads = {8, 8}, c.widths = {8, 3};
    c.learning_rate = 0.01;
    c.sample_ratio = 0.0001;
  } else if (name == "ppi") {
    c.mode = TaskMode::inductive;
    c.dp1 = 0.0, c.dp2 = 0.0, c.dp3 = 0.0, c.l2 = 0.0;
    c.attention = AttentionKind::product;
    c.heads = {4, 4, 6}, c.widths = {256, 256, 121};
    c.batch_size = 2;
    c.learning_rate = 0.005;
    c.sample_ratio = 0.0005;
  } else if (name == "sbm") {
    c.dp1 = 0.2, c.dp2 = 0.0, c.dp3 = 0.2, c.l2 = 5e-4;
    c.attention = AttentionKind::addition;
    // One head per layer: with several heads some settle at s_he ≈ 0 where
    // the attention loss no longer moves them.
    c.heads = {1, 1}, c.widths = {8, 2};
    c.learning_rate = 0.005;
    c.sample_ratio = 0.03;
    c.label_rate = 0.2;
    c.max_epochs = 1000;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> preset_names() { return {"cora", "citeseer", "pubmed", "ppi", "sbm"}; }

namespace {

EvalResult evaluate_in(Model& model, const std::vector<Graph>& graphs, const std::vector<const GraphContext*>& contexts,
                       Split split) {
  EvalResult result;
  AccuracyCount acc;
  F1Count f1;
  double loss_sum = 0.0;
  std::size_t nodes = 0;
  Rng unused(0);
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    const auto& ids = split_nodes(g, split);
    if (ids.empty()) continue;
    Tape tape;
    const ModelOutput out = model.forward(tape, *contexts[gi], false, unused);
    loss_sum += classification_loss(out.scores, g, ids).item() * static_cast<double>(ids.size());
    nodes += ids.size();
    if (g.label_mode == LabelMode::single) {
      const AccuracyCount c = count_correct(out.scores.value(), g.labels, ids);
      acc.correct += c.correct;
      acc.total += c.total;
    } else {
      f1 += count_f1(out.scores.value(), g.label_matrix, ids);
      result.micro_f1 = true;
    }
  }
  if (nodes == 0) throw ConfigError("split '" + std::string(to_string(split)) + "' is empty");
  result.loss = loss_sum / static_cast<double>(nodes);
  if (result.micro_f1) {
    result.metric = f1.value();
    result.degenerate = f1.degenerate();
  } else {
    result.metric = acc.value();
  }
  return result;
}

}  // namespace

EvalResult evaluate(Model& model, const std::vector<Graph>& graphs, Split split) {
  std::vector<GraphContext> owned;
  std::vector<const GraphContext*> contexts(graphs.size(), nullptr);
  owned.reserve(graphs.size());
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    if (split_nodes(graphs[gi], split).empty()) continue;
    owned.push_back(GraphContext::build(graphs[gi], model.config()));
    contexts[gi] = &owned.back();
  }
  return evaluate_in(model, graphs, contexts, split);
}

std::vector<Graph> subsample_labels(const std::vector<Graph>& graphs, double rate, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::uint32_t>> pool;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi)
    for (std::uint32_t v : graphs[gi].train) pool.emplace_back(gi, v);
  if (pool.empty()) throw ConfigError("subsample_labels: no training nodes");
  const std::size_t k = visible_count(pool.size(), rate);
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  std::vector<Graph> out = graphs;
  for (Graph& g : out) g.visible.clear();
  for (std::size_t i = 0; i < k; ++i) out[pool[i].first].visible.push_back(pool[i].second);
  for (Graph& g : out) std::sort(g.visible.begin(), g.visible.end());
  return out;
}

PairList probe_pairs(const HopMatrix& hops, std::uint64_t seed, std::size_t cap) {
  PairList near = neighborhood_pairs(hops, hops.max_hv() - 1);
  Rng rng(seed);
  PairList probes;
  if (near.size() > cap) {
    std::vector<std::size_t> idx(near.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    for (std::size_t p : idx) probes.push_back(near.centers[p], near.neighbors[p], near.hops[p]);
  } else {
    probes = near;
    probes.offsets.clear();
  }
  const std::size_t near_count = probes.size();
  const auto n = static_cast<std::uint64_t>(hops.size());
  const std::uint64_t far_total = n * n - near.size();
  if (far_total > 0) {
    const double ratio = std::min(1.0, static_cast<double>(near_count) / static_cast<double>(far_total));
    const PairSample far = PairSampler(hops, ratio).sample(rng.next());
    for (std::size_t p = 0; p < far.far.size(); ++p) {
      probes.push_back(far.far.centers[p], far.far.neighbors[p], far.far.hops[p]);
    }
  }
  return probes;
}

LogitSnapshot snapshot_logits(Model& model, const GraphContext& ctx, const PairList& probes, std::size_t epoch) {
  LogitSnapshot snap;
  snap.epoch = epoch;
  Rng unused(0);
  Tape tape;
  const ModelOutput out = model.forward(tape, ctx, false, unused);
  for (const LayerOutput& layer : out.layers) {
    auto& per_head = snap.logits.emplace_back();
    for (const HeadScores& head : layer.heads) per_head.push_back(pair_logits(head, probes).value().values());
  }
  return snap;
}

TrainResult train(const ExperimentConfig& config, const std::vector<Graph>& input) {
  config.validate();
  check_dataset(config, input);
  const std::vector<Graph> graphs = subsample_labels(input, config.label_rate, Rng::mix(config.seed, kLabels));

  TrainResult result;
  Model model(config.model_config(graphs.front().feature_dim()), Rng::mix(config.seed, kInit));
  const ModelConfig& mc = model.config();

  std::vector<GraphContext> contexts;
  contexts.reserve(graphs.size());
  for (const Graph& g : graphs) contexts.push_back(GraphContext::build(g, mc));
  std::vector<const GraphContext*> context_ptrs;
  for (const GraphContext& ctx : contexts) context_ptrs.push_back(&ctx);

  std::vector<std::size_t> train_ids;
  bool has_val = false, has_test = false;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    if (!graphs[gi].visible.empty()) train_ids.push_back(gi);
    has_val = has_val || !graphs[gi].val.empty();
    has_test = has_test || !graphs[gi].test.empty();
  }
  if (train_ids.empty()) throw ConfigError("no label-visible training nodes");
  if (!has_val) throw ConfigError("validation split is empty; early stopping needs it");

  std::vector<std::optional<PairSampler>> samplers(graphs.size());
  if (config.supervise) {
    for (std::size_t gi : train_ids) samplers[gi].emplace(contexts[gi].hops, config.sample_ratio);
  }

  if (config.snapshot_every > 0) {
    SnapshotSet set;
    set.max_hv = config.max_hv;
    set.probes = probe_pairs(contexts[train_ids.front()].hops, Rng::mix(config.seed, kProbes));
    result.snapshots = std::move(set);
  }

  Adam adam(AdamOptions{config.learning_rate});
  Rng dropout_rng(Rng::mix(config.seed, kDropout));
  ScheduleState schedule = ScheduleState::initial(config.schedule);
  const std::vector<Parameter*> params = model.parameters();
  const std::vector<Parameter*> weights = model.weight_matrices();

  double best_metric_seen = -std::numeric_limits<double>::infinity();
  double best_loss_seen = std::numeric_limits<double>::infinity();
  std::size_t since_improvement = 0;
  std::vector<Tensor> best_values = copy_values(model);
  result.best_val.metric = -std::numeric_limits<double>::infinity();
  result.best_val.loss = std::numeric_limits<double>::infinity();
  std::uint64_t batch_counter = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    if (epoch > 0 && config.supervise) step_temperature(schedule, config.schedule);

    std::vector<std::size_t> order = train_ids;
    if (order.size() > 1) {
      Rng shuffle(Rng::mix(Rng::mix(config.seed, kShuffle), epoch));
      for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[shuffle.below(k)]);
    }

    TraceRow row;
    row.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      Tape tape;
      Var cls, att;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t gi = order[b];
        const ModelOutput out = model.forward(tape, contexts[gi], true, dropout_rng);
        const Var c = classification_loss(out.scores, graphs[gi], graphs[gi].visible);
        cls = cls.valid() ? cls + c : c;
        if (config.supervise) {
          const PairSample sample = samplers[gi]->sample(Rng::mix(Rng::mix(config.seed, kSampling), batch_counter));
          const std::vector<HeadScores> fields = collect_fields(out);
          const Var a = attention_loss(fields, sample, config.max_hv);
          att = att.valid() ? att + a : a;
        }
        ++batch_counter;
      }

      Var total = cls;
      double gamma = 0.0;
      if (config.supervise) {
        gamma = config.force_gamma ? *config.force_gamma : compute_gamma(att.item(), schedule, config.schedule);
        schedule.gamma = gamma;
        total = total_loss(cls, att, gamma);
        row.l_att += att.item();
      }
      if (config.l2 > 0.0) {
        Var reg;
        for (Parameter* w : weights) {
          const Var s = sum(square(tape.leaf(*w)));
          reg = reg.valid() ? reg + s : s;
        }
        total = total + scale(reg, config.l2);
      }
      if (!std::isfinite(total.item())) throw NumericError("training loss diverged at epoch " + std::to_string(epoch));
      row.l_cls += cls.item();
      row.gamma = gamma;
      tape.backward(total);
      adam.step(params);
      ++batches;
    }
    row.l_cls /= static_cast<double>(batches);
    row.l_att /= static_cast<double>(batches);
    row.temp = schedule.temp;
    row.saturated = schedule.saturated;

    const EvalResult val = evaluate_in(model, graphs, context_ptrs, Split::val);
    row.val_loss = val.loss;
    row.val_metric = val.metric;
    result.trace.push_back(row);
    result.epochs_run = epoch + 1;

    bool improved = false;
    if (val.metric > best_metric_seen) {
      best_metric_seen = val.metric;
      improved = true;
    }
    if (val.loss < best_loss_seen) {
      best_loss_seen = val.loss;
      improved = true;
    }
    since_improvement = improved ? 0 : since_improvement + 1;
    if (val.metric > result.best_val.metric ||
        (val.metric == result.best_val.metric && val.loss < result.best_val.loss)) {
      result.best_val = val;
      result.best_epoch = epoch;
      best_values = copy_values(model);
    }

    if (result.snapshots && epoch % config.snapshot_every == 0) {
      result.snapshots->snapshots.push_back(
          snapshot_logits(model, contexts[train_ids.front()], result.snapshots->probes, epoch));
    }
    if (since_improvement >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }

  if (result.snapshots && (result.snapshots->snapshots.empty() ||
                           result.snapshots->snapshots.back().epoch + 1 != result.epochs_run)) {
    result.snapshots->snapshots.push_back(
        snapshot_logits(model, contexts[train_ids.front()], result.snapshots->probes, result.epochs_run - 1));
  }

  restore_values(model, best_values);
  if (has_test) result.test = evaluate_in(model, graphs, context_ptrs, Split::test);
  result.model = std::move(model);
  return result;
}

AttentionHistogram attention_histogram(const SnapshotSet& set, std::size_t layer, std::size_t head, std::size_t bins) {
  if (set.snapshots.empty()) throw UsageError("no logit snapshots recorded; train with snapshots enabled");
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const LogitSnapshot& s : set.snapshots) {
    if (layer >= s.logits.size() || head >= s.logits[layer].size()) {
      throw UsageError("snapshot has no layer " + std::to_string(layer) + " head " + std::to_string(head));
    }
    for (double v : s.logits[layer][head]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  AttentionHistogram h;
  h.lo = lo;
  h.hi = hi;
  h.bins = bins;
  const std::size_t n_buckets = static_cast<std::size_t>(set.max_hv) + 1;
  for (const LogitSnapshot& s : set.snapshots) {
    SnapshotHistogram sh;
    sh.epoch = s.epoch;
    sh.buckets.resize(n_buckets);
    for (std::size_t b = 0; b < n_buckets; ++b) {
      sh.buckets[b].label = b + 1 == n_buckets ? ">=" + std::to_string(set.max_hv) : std::to_string(b);
      sh.buckets[b].histogram.assign(bins, 0);
    }
    const auto& values = s.logits[layer][head];
    for (std::size_t p = 0; p < values.size(); ++p) {
      HopBucketStats& bucket = sh.buckets[std::min<std::size_t>(set.probes.hops[p], n_buckets - 1)];
      ++bucket.count;
      bucket.mean += values[p];
      auto bin = static_cast<std::size_t>((values[p] - lo) / (hi - lo) * static_cast<double>(bins));
      ++bucket.histogram[std::min(bin, bins - 1)];
    }
    for (auto& bucket : sh.buckets) {
      if (bucket.count) bucket.mean /= static_cast<double>(bucket.count);
    }
    h.series.push_back(std::move(sh));
  }
  return h;
}

SeedSummary summarize(std::vector<double> values) {
  SeedSummary s;
  s.values = std::move(values);
  if (s.values.empty()) return s;
  const double n = static_cast<double>(s.values.size());
  s.mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);
  return s;
}

std::vector<SweepRow> sweep_label_rates(const ExperimentConfig& config, const std::vector<Graph>& graphs,
                                        const std::vector<double>& rates, const std::vector<std::uint64_t>& seeds) {
  std::vector<SweepRow> rows;
  for (double rate : rates) {
    for (const bool hop_aware : {true, false}) {
      ExperimentConfig arm = hop_aware ? config : config.baseline_arm();
      arm.label_rate = rate;
      std::vector<double> metrics;
      for (std::uint64_t seed : seeds) {
        arm.seed = seed;
        metrics.push_back(train(arm, graphs).test.metric);
      }
      rows.push_back({rate, hop_aware ? "hopgat" : "gat", summarize(std::move(metrics))});
    }
  }
  return rows;
}

}  // namespace hopgat
