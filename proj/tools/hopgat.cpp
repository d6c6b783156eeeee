// hopgat command-line front end.
//
//   hopgat train --preset cora --dataset cora.json --out runs/cora
//   hopgat eval --checkpoint runs/cora/checkpoint.json --dataset cora.json --split test
//   hopgat analyze-hops --dataset cora.json --max-hop 6 --out runs/hops
//   hopgat export-attention-hist --snapshots runs/sbm/snapshots.json --layer 1 --head 0 --out runs/hist
//   hopgat sweep-label-rates --preset sbm --rates 0.2,0.4 --seeds 0,1,2 --out runs/sweep
//   hopgat make-sbm --out sbm.json
//
// Experiment settings resolve as: preset, then --config file (flat
// "key = value" lines named like the long flags; "_" may stand for "-"),
// then explicit flags.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hopgat/errors.hpp"
#include "hopgat/graph.hpp"
#include "hopgat/io.hpp"
#include "hopgat/plot.hpp"
#include "hopgat/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hopgat;

namespace {

struct SbmFlags {
  SbmOptions options;

  void add(CLI::App* app) {
    app->add_option("--sbm-blocks", options.blocks, "SBM block count");
    app->add_option("--sbm-nodes", options.nodes_per_block, "SBM nodes per block");
    app->add_option("--sbm-p-in", options.p_in, "SBM intra-block edge probability");
    app->add_option("--sbm-p-out", options.p_out, "SBM inter-block edge probability");
    app->add_option("--sbm-noise", options.feature_noise, "SBM feature noise stddev");
    app->add_option("--sbm-seed", options.seed, "SBM generator seed");
  }
};

// Flags that override fields of ExperimentConfig. Everything is optional so
// that unset flags leave the preset/config-file value alone.
struct ExperimentFlags {
  std::string preset_name = "sbm";
  std::string config_file;
  std::string dataset;
  std::optional<std::string> mode, attention;
  std::optional<bool> supervise;
  std::optional<double> force_gamma;
  std::optional<int> max_hv;
  std::vector<std::size_t> heads, widths;
  std::vector<double> dropout;
  std::optional<double> leaky_slope, l2, lr, label_rate, sample_ratio;
  std::optional<double> temp_ini, temp_fin, decay, gamma_str;
  std::optional<std::size_t> batch_size, patience, max_epochs, snapshot_every;
  std::optional<std::uint64_t> seed;
  SbmFlags sbm;
  CLI::App* app = nullptr;

  void add(CLI::App* sub) {
    app = sub;
    sub->add_option("--preset", preset_name, "Named defaults: cora, citeseer, pubmed, ppi, sbm")->capture_default_str();
    sub->add_option("--config", config_file, "Flat key = value file, keys named like the long flags");
    sub->add_option("--dataset", dataset, "Graph container (JSON); omit with --preset sbm to generate the fixture");
    sub->add_option("--mode", mode, "transductive | inductive");
    sub->add_option("--attention", attention, "baseline (gat) | product | addition");
    sub->add_option("--supervise", supervise, "Attention supervision on/off");
    sub->add_option("--force-gamma", force_gamma, "Pin gamma to a constant");
    sub->add_option("--max-hv", max_hv, "Hop saturation value");
    sub->add_option("--heads", heads, "Heads per layer, e.g. 8,1")->delimiter(',');
    sub->add_option("--widths", widths, "Per-head output width per layer, e.g. 8,7")->delimiter(',');
    sub->add_option("--dropout", dropout, "Three rates: input, attention, features")->delimiter(',');
    sub->add_option("--leaky-slope", leaky_slope);
    sub->add_option("--l2", l2, "L2 weight on weight matrices");
    sub->add_option("--lr", lr, "Adam learning rate");
    sub->add_option("--batch-size", batch_size, "Graphs per optimizer step");
    sub->add_option("--label-rate", label_rate, "Fraction of training labels visible");
    sub->add_option("--sample-ratio", sample_ratio, "Fraction of far pairs supervised per step");
    sub->add_option("--temp-ini", temp_ini);
    sub->add_option("--temp-fin", temp_fin);
    sub->add_option("--decay", decay, "Temperature decay per epoch");
    sub->add_option("--gamma-str", gamma_str, "Gamma cap after saturation");
    sub->add_option("--patience", patience);
    sub->add_option("--max-epochs", max_epochs);
    sub->add_option("--seed", seed);
    sub->add_option("--snapshot-every", snapshot_every, "Record logit snapshots every N epochs (0 = off)");
    sbm.add(sub);
  }

  // Values from the config file fill every flag the command line left unset.
  void apply_config_file() {
    if (config_file.empty()) return;
    if (!fs::exists(config_file)) throw ConfigError("config file '" + config_file + "' not found");
    CLI::ConfigTOML parser;
    for (const CLI::ConfigItem& item : parser.from_file(config_file)) {
      if (item.name == "config") throw ConfigError("config files cannot include other config files");
      std::string key = item.name;
      std::replace(key.begin(), key.end(), '_', '-');
      CLI::Option* opt = app->get_option_no_throw("--" + key);
      if (opt == nullptr) throw ConfigError("config file: unknown key '" + item.name + "'");
      if (opt->count() > 0) continue;
      opt->add_result(item.inputs);
      opt->run_callback();
    }
  }

  ExperimentConfig resolve() {
    apply_config_file();
    ExperimentConfig c = preset(preset_name);
    c.dataset = dataset;
    if (mode) c.mode = parse_task_mode(*mode);
    if (attention) c.attention = parse_attention_kind(*attention);
    if (supervise) c.supervise = *supervise;
    if (force_gamma) c.force_gamma = *force_gamma;
    if (max_hv) c.max_hv = *max_hv;
    if (!heads.empty()) c.heads = heads;
    if (!widths.empty()) c.widths = widths;
    if (!dropout.empty()) {
      if (dropout.size() != 3) throw ConfigError("--dropout takes exactly three rates");
      c.dp1 = dropout[0], c.dp2 = dropout[1], c.dp3 = dropout[2];
    }
    if (leaky_slope) c.leaky_slope = *leaky_slope;
    if (l2) c.l2 = *l2;
    if (lr) c.learning_rate = *lr;
    if (batch_size) c.batch_size = *batch_size;
    if (label_rate) c.label_rate = *label_rate;
    if (sample_ratio) c.sample_ratio = *sample_ratio;
    if (temp_ini) c.schedule.temp_ini = *temp_ini;
    if (temp_fin) c.schedule.temp_fin = *temp_fin;
    if (decay) c.schedule.decay = *decay;
    if (gamma_str) c.schedule.gamma_str = *gamma_str;
    if (patience) c.patience = *patience;
    if (max_epochs) c.max_epochs = *max_epochs;
    if (seed) c.seed = *seed;
    if (snapshot_every) c.snapshot_every = *snapshot_every;
    c.validate();
    return c;
  }

  std::vector<Graph> load_graphs(const ExperimentConfig& c) const {
    if (!dataset.empty()) return load_container(dataset);
    if (c.preset != "sbm") throw ConfigError("--dataset is required unless --preset sbm");
    return {generate_sbm(sbm.options)};
  }
};

void write_svg(const fs::path& path, const std::string& svg) {
  write_text(path, svg);
  std::cerr << "wrote " << path.string() << "\n";
}

json eval_json(const EvalResult& r) {
  return {{"metric", r.metric}, {"metric_name", r.micro_f1 ? "micro_f1" : "accuracy"}, {"loss", r.loss},
          {"degenerate", r.degenerate}};
}

void warn_degenerate(const EvalResult& r, std::string_view split) {
  if (r.degenerate) {
    std::cerr << "warning: no positive labels or predictions on " << split
              << "; micro-F1 reported as 1.0 by convention\n";
  }
}

void plot_trace(const fs::path& dir, const std::vector<TraceRow>& trace) {
  Series gamma{"gamma", {}, {}}, cls{"L_cls", {}, {}}, att{"L_att", {}, {}}, val{"val loss", {}, {}};
  for (const TraceRow& r : trace) {
    const double e = static_cast<double>(r.epoch);
    gamma.x.push_back(e), gamma.y.push_back(r.gamma);
    cls.x.push_back(e), cls.y.push_back(r.l_cls);
    att.x.push_back(e), att.y.push_back(r.l_att);
    val.x.push_back(e), val.y.push_back(r.val_loss);
  }
  write_svg(dir / "gamma.svg", svg_line_chart({gamma}, {"Loss balance", "epoch", "gamma"}));
  write_svg(dir / "losses.svg", svg_line_chart({cls, att, val}, {"Losses", "epoch", "loss"}));
}

int cmd_train(ExperimentFlags& flags, const std::vector<std::uint64_t>& seeds, const fs::path& out) {
  ExperimentConfig config = flags.resolve();
  const std::vector<Graph> graphs = flags.load_graphs(config);
  std::vector<std::uint64_t> run_seeds = seeds.empty() ? std::vector<std::uint64_t>{config.seed} : seeds;

  json report;
  report["config"] = json::parse(dump_config(config));
  report["runs"] = json::array();
  std::vector<double> tests, vals;
  for (std::uint64_t s : run_seeds) {
    config.seed = s;
    const fs::path dir = run_seeds.size() == 1 ? out : out / ("seed" + std::to_string(s));
    const TrainResult result = train(config, graphs);
    warn_degenerate(result.best_val, "val");
    warn_degenerate(result.test, "test");
    save_checkpoint(dir / "checkpoint.json", config, result.model);
    write_text(dir / "trace.csv", trace_csv(result.trace));
    if (result.snapshots) write_text(dir / "snapshots.json", dump_snapshots(*result.snapshots));
    plot_trace(dir, result.trace);
    report["runs"].push_back({{"seed", s},
                              {"epochs_run", result.epochs_run},
                              {"best_epoch", result.best_epoch},
                              {"stopped_early", result.stopped_early},
                              {"val", eval_json(result.best_val)},
                              {"test", eval_json(result.test)}});
    tests.push_back(result.test.metric);
    vals.push_back(result.best_val.metric);
    std::printf("seed %llu: epochs %zu, best epoch %zu, val %.4f, test %.4f\n", static_cast<unsigned long long>(s),
                result.epochs_run, result.best_epoch, result.best_val.metric, result.test.metric);
  }
  const SeedSummary t = summarize(tests), v = summarize(vals);
  report["summary"] = {{"test", {{"mean", t.mean}, {"std", t.stddev}}}, {"val", {{"mean", v.mean}, {"std", v.stddev}}}};
  write_text(out / "metrics.json", report.dump(2) + "\n");
  std::printf("test %.4f +- %.4f over %zu seed(s)\n", t.mean, t.stddev, tests.size());
  return 0;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& dataset, const std::string& split_name) {
  Checkpoint ck = load_checkpoint(checkpoint);
  const std::vector<Graph> graphs = load_container(dataset);
  const Split split = parse_split(split_name);
  const EvalResult r = evaluate(ck.model, graphs, split);
  warn_degenerate(r, split_name);
  json j = eval_json(r);
  j["split"] = split_name;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze_hops(const std::vector<Graph>& graphs, int max_hop, const fs::path& out) {
  if (max_hop < 2) throw ConfigError("--max-hop must be >= 2");
  std::vector<ConsistencyRow> total;
  for (const Graph& g : graphs) {
    const auto rows = label_consistency_by_hop(g, compute_hop_matrix(g, max_hop));
    if (total.empty()) total = rows;
    else
      for (std::size_t i = 0; i < rows.size(); ++i) {
        total[i].pairs += rows[i].pairs;
        total[i].same_label += rows[i].same_label;
      }
  }
  std::string table = "hop,consistency\n";
  Series curve{"consistency", {}, {}};
  for (ConsistencyRow& r : total) {
    r.rate = r.pairs ? static_cast<double>(r.same_label) / static_cast<double>(r.pairs) : 0.0;
    const std::string hop = r.saturated ? ">=" + std::to_string(r.hop) : std::to_string(r.hop);
    char line[96];
    std::snprintf(line, sizeof line, "%s,%.6f\n", hop.c_str(), r.rate);
    table += line;
    if (r.pairs) curve.x.push_back(r.hop), curve.y.push_back(r.rate);
  }
  std::cout << table;
  write_text(out / "consistency.csv", table);
  write_svg(out / "consistency.svg", svg_line_chart({curve}, {"Label consistency by hop", "hop", "same-label rate"}));
  return 0;
}

int cmd_export_hist(const fs::path& snapshots, std::size_t layer, std::size_t head, std::size_t bins,
                    const fs::path& out) {
  const SnapshotSet set = parse_snapshots(read_text(snapshots));
  const AttentionHistogram h = attention_histogram(set, layer, head, bins);
  json j;
  j["lo"] = h.lo, j["hi"] = h.hi, j["bins"] = h.bins, j["layer"] = layer, j["head"] = head;
  j["series"] = json::array();
  for (const SnapshotHistogram& s : h.series) {
    json buckets = json::array();
    for (const HopBucketStats& b : s.buckets) {
      buckets.push_back({{"hop", b.label}, {"count", b.count}, {"mean", b.mean}, {"histogram", b.histogram}});
    }
    j["series"].push_back({{"epoch", s.epoch}, {"buckets", std::move(buckets)}});
  }
  write_text(out / "attention_hist.json", j.dump(2) + "\n");

  const SnapshotHistogram& last = h.series.back();
  std::vector<HistogramSeries> bars;
  for (const HopBucketStats& b : last.buckets) {
    bars.push_back({"hop " + b.label, {b.histogram.begin(), b.histogram.end()}});
    std::printf("epoch %zu hop %-4s count %8llu mean %+.4f\n", last.epoch, b.label.c_str(),
                static_cast<unsigned long long>(b.count), b.mean);
  }
  write_svg(out / "attention_hist.svg",
            svg_histogram(bars, h.lo, h.hi,
                          {"Raw attention logits, epoch " + std::to_string(last.epoch), "logit e", "pairs"}));
  std::vector<Series> means(last.buckets.size());
  for (std::size_t b = 0; b < means.size(); ++b) means[b].name = "hop " + last.buckets[b].label;
  for (const SnapshotHistogram& s : h.series)
    for (std::size_t b = 0; b < means.size(); ++b) {
      means[b].x.push_back(static_cast<double>(s.epoch));
      means[b].y.push_back(s.buckets[b].count ? s.buckets[b].mean : NAN);
    }
  write_svg(out / "bucket_means.svg", svg_line_chart(means, {"Mean logit per hop bucket", "epoch", "mean e"}));
  return 0;
}

int cmd_sweep(ExperimentFlags& flags, const std::vector<double>& rates, const std::vector<std::uint64_t>& seeds,
              const fs::path& out) {
  const ExperimentConfig config = flags.resolve();
  const std::vector<Graph> graphs = flags.load_graphs(config);
  const auto rows = sweep_label_rates(config, graphs, rates, seeds);
  std::string csv = "label_rate,arm,mean,std,n\n";
  Series hop{"hopgat", {}, {}}, gat{"gat", {}, {}};
  json j = json::array();
  for (const SweepRow& r : rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%g,%s,%.6f,%.6f,%zu\n", r.label_rate, r.arm.c_str(), r.test.mean, r.test.stddev,
                  r.test.values.size());
    csv += line;
    (r.arm == "gat" ? gat : hop).x.push_back(r.label_rate);
    (r.arm == "gat" ? gat : hop).y.push_back(r.test.mean);
    j.push_back({{"label_rate", r.label_rate}, {"arm", r.arm}, {"values", r.test.values}, {"mean", r.test.mean},
                 {"std", r.test.stddev}});
  }
  std::cout << csv;
  write_text(out / "sweep.csv", csv);
  write_text(out / "sweep.json", j.dump(2) + "\n");
  write_svg(out / "sweep.svg", svg_line_chart({hop, gat}, {"Test metric by label rate", "label rate", "test metric"}));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Hop-aware supervised graph attention: training and analysis");
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "Train one model per seed; writes checkpoint, trace, metrics");
  ExperimentFlags train_flags;
  train_flags.add(train_cmd);
  std::vector<std::uint64_t> train_seeds;
  std::string train_out = "run";
  train_cmd->add_option("--seeds", train_seeds, "Run once per seed and report mean/std")->delimiter(',');
  train_cmd->add_option("--out", train_out, "Output directory")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  std::string eval_ckpt, eval_data, eval_split = "test";
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--dataset", eval_data)->required();
  eval_cmd->add_option("--split", eval_split)->capture_default_str();

  auto* hops_cmd = app.add_subcommand("analyze-hops", "Label consistency rate per hop distance");
  std::string hops_data, hops_out = "hops";
  int hops_max = 6;
  SbmFlags hops_sbm;
  hops_cmd->add_option("--dataset", hops_data, "Graph container; omitted = SBM fixture");
  hops_cmd->add_option("--max-hop", hops_max, "Saturation bucket")->capture_default_str();
  hops_cmd->add_option("--out", hops_out)->capture_default_str();
  hops_sbm.add(hops_cmd);

  auto* hist_cmd = app.add_subcommand("export-attention-hist", "Histogram series of recorded raw logits");
  std::string hist_snaps, hist_out = "hist";
  std::size_t hist_layer = 0, hist_head = 0, hist_bins = 40;
  hist_cmd->add_option("--snapshots", hist_snaps, "snapshots.json from train --snapshot-every")->required();
  hist_cmd->add_option("--layer", hist_layer)->capture_default_str();
  hist_cmd->add_option("--head", hist_head)->capture_default_str();
  hist_cmd->add_option("--bins", hist_bins)->capture_default_str();
  hist_cmd->add_option("--out", hist_out)->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep-label-rates", "Both arms at several label rates over seeds");
  ExperimentFlags sweep_flags;
  sweep_flags.add(sweep_cmd);
  std::vector<double> sweep_rates{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::uint64_t> sweep_seeds{0, 1, 2, 3, 4};
  std::string sweep_out = "sweep";
  sweep_cmd->add_option("--rates", sweep_rates)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_seeds)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out)->capture_default_str();

  auto* sbm_cmd = app.add_subcommand("make-sbm", "Write the synthetic SBM fixture as a graph container");
  SbmFlags sbm_flags;
  std::string sbm_out;
  sbm_flags.add(sbm_cmd);
  sbm_cmd->add_option("--out", sbm_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(train_flags, train_seeds, train_out);
    if (*eval_cmd) return cmd_eval(eval_ckpt, eval_data, eval_split);
    if (*hops_cmd) {
      const auto graphs = hops_data.empty() ? std::vector<Graph>{generate_sbm(hops_sbm.options)} : load_container(hops_data);
      return cmd_analyze_hops(graphs, hops_max, hops_out);
    }
    if (*hist_cmd) return cmd_export_hist(hist_snaps, hist_layer, hist_head, hist_bins, hist_out);
    if (*sweep_cmd) return cmd_sweep(sweep_flags, sweep_rates, sweep_seeds, sweep_out);
    if (*sbm_cmd) {
      save_container(sbm_out, {generate_sbm(sbm_flags.options)});
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
