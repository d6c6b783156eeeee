#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hopgat/attention.hpp"
#include "hopgat/graph.hpp"
#include "hopgat/schedule.hpp"

namespace hopgat {

enum class TaskMode { transductive, inductive };

std::string_view to_string(TaskMode mode);
TaskMode parse_task_mode(std::string_view text);

struct ExperimentConfig {
  std::string preset = "custom";
  std::string dataset;
  TaskMode mode = TaskMode::transductive;
  AttentionKind attention = AttentionKind::addition;
  bool supervise = true;              // attention loss and annealing on/off
  std::optional<double> force_gamma;  // pins γ, for ablations
  int max_hv = 2;
  std::vector<std::size_t> heads{8, 1};
  std::vector<std::size_t> widths{8, 7};
  double dp1 = 0.2;
  double dp2 = 0.0;
  double dp3 = 0.2;
  double leaky_slope = 0.2;
  double l2 = 1e-4;
  double learning_rate = 0.005;
  std::size_t batch_size = 1;  // graphs per optimizer step
  double label_rate = 1.0;
  double sample_ratio = 0.0003;
  ScheduleConfig schedule{100.0, 1.0, 0.95, 0.25};
  std::size_t patience = 100;
  std::size_t max_epochs = 100000;
  std::uint64_t seed = 0;
  std::size_t snapshot_every = 0;  // 0 disables logit snapshots

  void validate() const;
  ModelConfig model_config(std::size_t in_dim) const;
  // Same setup with plain GAT attention and no supervision.
  ExperimentConfig baseline_arm() const;
};

// Named defaults: cora, citeseer, pubmed, ppi, and the synthetic sbm fixture.
ExperimentConfig preset(std::string_view name);
std::vector<std::string> preset_names();

enum class Split { train, val, test };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct EvalResult {
  double metric = 0.0;  // accuracy, or micro-F1 for multi-label graphs
  double loss = 0.0;
  bool micro_f1 = false;
  bool degenerate = false;  // micro-F1 with no positives anywhere
};

// Eval-mode forward over every graph that has nodes in `split`; counts are
// pooled across graphs. Throws ConfigError if the split is empty everywhere.
EvalResult evaluate(Model& model, const std::vector<Graph>& graphs, Split split);

struct TraceRow {
  std::size_t epoch = 0;
  double temp = 0.0;
  double gamma = 0.0;
  double l_cls = 0.0;
  double l_att = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
  bool saturated = false;
};

// Raw logits on a fixed probe set of pairs, recorded during training.
struct LogitSnapshot {
  std::size_t epoch = 0;
  std::vector<std::vector<std::vector<double>>> logits;  // [layer][head][pair]
};

struct SnapshotSet {
  int max_hv = 2;
  PairList probes;
  std::vector<LogitSnapshot> snapshots;
};

struct TrainResult {
  Model model;  // parameters of the best validation epoch
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  EvalResult best_val;
  EvalResult test;
  std::vector<TraceRow> trace;
  std::optional<SnapshotSet> snapshots;
};

// Applies the label rate (pooled over all graphs), then trains with Adam,
// annealed attention supervision and early stopping on validation loss and
// metric. Throws NumericError if the loss diverges.
TrainResult train(const ExperimentConfig& config, const std::vector<Graph>& graphs);

// Label-visible sampling across several graphs: ceil(rate × total train
// nodes) nodes drawn from the pooled training nodes.
std::vector<Graph> subsample_labels(const std::vector<Graph>& graphs, double rate, std::uint64_t seed);

// Logits of one head on the probe pairs of a trained model, for snapshotting.
LogitSnapshot snapshot_logits(Model& model, const GraphContext& ctx, const PairList& probes, std::size_t epoch);
// Near pairs of the graph (capped) plus an equally sized far sample.
PairList probe_pairs(const HopMatrix& hops, std::uint64_t seed, std::size_t cap = 50000);

struct HopBucketStats {
  std::string label;  // "0", "1", ..., ">=max_hv"
  std::uint64_t count = 0;
  double mean = 0.0;
  std::vector<std::uint64_t> histogram;
};

struct SnapshotHistogram {
  std::size_t epoch = 0;
  std::vector<HopBucketStats> buckets;
};

struct AttentionHistogram {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t bins = 0;
  std::vector<SnapshotHistogram> series;
};

// Histograms of raw logits grouped into hop buckets {0, 1, ..., >= max_hv}.
AttentionHistogram attention_histogram(const SnapshotSet& set, std::size_t layer, std::size_t head,
                                       std::size_t bins = 40);

struct SeedSummary {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};
SeedSummary summarize(std::vector<double> values);

struct SweepRow {
  double label_rate = 1.0;
  std::string arm;  // "hopgat" or "gat"
  SeedSummary test;
};

// Trains both arms at each label rate over the seed list.
std::vector<SweepRow> sweep_label_rates(const ExperimentConfig& config, const std::vector<Graph>& graphs,
                                        const std::vector<double>& rates, const std::vector<std::uint64_t>& seeds);

}  // namespace hopgat
