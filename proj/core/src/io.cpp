#include "hopgat/io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hopgat/errors.hpp"

namespace hopgat {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string(where) + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + ": bad field '" + key + "': " + e.what());
  }
}

json tensor_to_json(const Tensor& t) { return {{"shape", t.shape()}, {"values", t.values()}}; }

Tensor tensor_from_json(const json& j, const char* where) {
  auto shape = field<Shape>(j, "shape", where);
  auto values = field<std::vector<double>>(j, "values", where);
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  if (n != values.size()) throw ConfigError(std::string(where) + ": tensor shape and value count disagree");
  return Tensor(std::move(shape), std::move(values));
}

json graph_to_json(const Graph& g) {
  json j;
  j["num_nodes"] = g.num_nodes;
  j["directed"] = false;
  json edges = json::array();
  for (const auto& [u, v] : g.edges) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  j["features"] = {{"rows", g.features.rows()}, {"cols", g.features.cols()}, {"values", g.features.values()}};
  json labels;
  labels["num_classes"] = g.num_classes;
  if (g.label_mode == LabelMode::single) {
    labels["mode"] = "single";
    labels["values"] = g.labels;
  } else {
    labels["mode"] = "multi";
    json rows = json::array();
    for (std::size_t r = 0; r < g.label_matrix.rows(); ++r) {
      std::vector<int> row(g.label_matrix.cols());
      for (std::size_t c = 0; c < row.size(); ++c) row[c] = g.label_matrix.at(r, c) > 0.5 ? 1 : 0;
      rows.push_back(std::move(row));
    }
    labels["values"] = std::move(rows);
  }
  j["labels"] = std::move(labels);
  j["masks"] = {{"train", g.train}, {"val", g.val}, {"test", g.test}};
  return j;
}

Graph graph_from_json(const json& j) {
  const char* where = "graph container";
  Graph g;
  g.num_nodes = field<std::size_t>(j, "num_nodes", where);
  if (j.value("directed", false)) throw ConfigError("graph container: directed graphs are not supported");
  for (const auto& e : field<std::vector<std::vector<std::uint32_t>>>(j, "edges", where)) {
    if (e.size() != 2) throw ConfigError("graph container: every edge needs two endpoints");
    g.edges.emplace_back(e[0], e[1]);
  }
  const json& f = j.at("features");
  const auto rows = field<std::size_t>(f, "rows", "features");
  const auto cols = field<std::size_t>(f, "cols", "features");
  auto values = field<std::vector<double>>(f, "values", "features");
  if (values.size() != rows * cols) throw ConfigError("graph container: feature values do not fill rows × cols");
  g.features = Tensor({rows, cols}, std::move(values));

  const json& l = j.at("labels");
  const auto mode = field<std::string>(l, "mode", "labels");
  if (mode == "single") {
    g.label_mode = LabelMode::single;
    g.labels = field<std::vector<int>>(l, "values", "labels");
    int top = -1;
    for (int y : g.labels) top = std::max(top, y);
    g.num_classes = l.contains("num_classes") ? l["num_classes"].get<std::size_t>() : static_cast<std::size_t>(top + 1);
  } else if (mode == "multi") {
    g.label_mode = LabelMode::multi;
    const auto matrix = field<std::vector<std::vector<double>>>(l, "values", "labels");
    const std::size_t k = matrix.empty() ? 0 : matrix.front().size();
    g.num_classes = l.value("num_classes", k);
    g.label_matrix = Tensor({matrix.size(), g.num_classes});
    for (std::size_t r = 0; r < matrix.size(); ++r) {
      if (matrix[r].size() != g.num_classes) throw ConfigError("graph container: ragged multi-label rows");
      for (std::size_t c = 0; c < g.num_classes; ++c) g.label_matrix.at(r, c) = matrix[r][c];
    }
  } else {
    throw ConfigError("graph container: unknown label mode '" + mode + "'");
  }

  const json& m = j.at("masks");
  g.train = field<std::vector<std::uint32_t>>(m, "train", "masks");
  g.val = field<std::vector<std::uint32_t>>(m, "val", "masks");
  g.test = field<std::vector<std::uint32_t>>(m, "test", "masks");
  g.visible = g.train;
  g.validate();
  return g;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["dataset"] = c.dataset;
  j["mode"] = to_string(c.mode);
  j["attention"] = to_string(c.attention);
  j["supervise"] = c.supervise;
  j["force_gamma"] = c.force_gamma ? json(*c.force_gamma) : json(nullptr);
  j["max_hv"] = c.max_hv;
  j["heads"] = c.heads;
  j["widths"] = c.widths;
  j["dropout"] = {c.dp1, c.dp2, c.dp3};
  j["leaky_slope"] = c.leaky_slope;
  j["l2"] = c.l2;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["label_rate"] = c.label_rate;
  j["sample_ratio"] = c.sample_ratio;
  j["schedule"] = {{"temp_ini", c.schedule.temp_ini},
                   {"temp_fin", c.schedule.temp_fin},
                   {"decay", c.schedule.decay},
                   {"gamma_str", c.schedule.gamma_str}};
  j["patience"] = c.patience;
  j["max_epochs"] = c.max_epochs;
  j["seed"] = c.seed;
  j["snapshot_every"] = c.snapshot_every;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  const char* where = "config";
  ExperimentConfig c;
  c.preset = j.value("preset", c.preset);
  c.dataset = j.value("dataset", c.dataset);
  c.mode = parse_task_mode(field<std::string>(j, "mode", where));
  c.attention = parse_attention_kind(field<std::string>(j, "attention", where));
  c.supervise = field<bool>(j, "supervise", where);
  if (j.contains("force_gamma") && !j["force_gamma"].is_null()) c.force_gamma = j["force_gamma"].get<double>();
  c.max_hv = field<int>(j, "max_hv", where);
  c.heads = field<std::vector<std::size_t>>(j, "heads", where);
  c.widths = field<std::vector<std::size_t>>(j, "widths", where);
  const auto dp = field<std::vector<double>>(j, "dropout", where);
  if (dp.size() != 3) throw ConfigError("config: dropout needs three rates");
  c.dp1 = dp[0], c.dp2 = dp[1], c.dp3 = dp[2];
  c.leaky_slope = field<double>(j, "leaky_slope", where);
  c.l2 = field<double>(j, "l2", where);
  c.learning_rate = field<double>(j, "learning_rate", where);
  c.batch_size = field<std::size_t>(j, "batch_size", where);
  c.label_rate = field<double>(j, "label_rate", where);
  c.sample_ratio = field<double>(j, "sample_ratio", where);
  const json& s = j.at("schedule");
  c.schedule.temp_ini = field<double>(s, "temp_ini", "schedule");
  c.schedule.temp_fin = field<double>(s, "temp_fin", "schedule");
  c.schedule.decay = field<double>(s, "decay", "schedule");
  c.schedule.gamma_str = field<double>(s, "gamma_str", "schedule");
  c.patience = field<std::size_t>(j, "patience", where);
  c.max_epochs = field<std::size_t>(j, "max_epochs", where);
  c.seed = field<std::uint64_t>(j, "seed", where);
  c.snapshot_every = j.value("snapshot_every", std::size_t{0});
  c.validate();
  return c;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string dump_container(const std::vector<Graph>& graphs) {
  json j;
  j["format_version"] = kContainerVersion;
  j["graphs"] = json::array();
  for (const Graph& g : graphs) j["graphs"].push_back(graph_to_json(g));
  return j.dump();
}

std::vector<Graph> parse_container(const std::string& text) {
  const json j = parse_json(text, "graph container");
  const int version = field<int>(j, "format_version", "graph container");
  if (version != kContainerVersion) {
    throw ConfigError("graph container: unsupported format_version " + std::to_string(version));
  }
  std::vector<Graph> graphs;
  for (const json& g : j.at("graphs")) graphs.push_back(graph_from_json(g));
  if (graphs.empty()) throw ConfigError("graph container holds no graphs");
  return graphs;
}

void save_container(const std::filesystem::path& path, const std::vector<Graph>& graphs) {
  write_text(path, dump_container(graphs));
}

std::vector<Graph> load_container(const std::filesystem::path& path) { return parse_container(read_text(path)); }

std::string dump_config(const ExperimentConfig& config) { return config_to_json(config).dump(2); }

ExperimentConfig parse_config(const std::string& text) { return config_from_json(parse_json(text, "config")); }

std::string dump_checkpoint(const ExperimentConfig& config, const Model& model) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["config"] = config_to_json(config);
  j["in_dim"] = model.config().layers.front().in_dim;
  json params = json::object();
  for (const Parameter* p : model.parameters()) params[p->name] = tensor_to_json(p->value);
  j["params"] = std::move(params);
  return j.dump();
}

Checkpoint parse_checkpoint(const std::string& text) {
  const json j = parse_json(text, "checkpoint");
  if (field<int>(j, "format_version", "checkpoint") != kCheckpointVersion) {
    throw ConfigError("checkpoint: unsupported format_version");
  }
  Checkpoint ck;
  ck.config = config_from_json(j.at("config"));
  ck.in_dim = field<std::size_t>(j, "in_dim", "checkpoint");
  ck.model = Model(ck.config.model_config(ck.in_dim), 0);
  const json& params = j.at("params");
  auto slots = ck.model.parameters();
  if (params.size() != slots.size()) {
    throw ConfigError("checkpoint: holds " + std::to_string(params.size()) + " tensors, the config implies " +
                      std::to_string(slots.size()));
  }
  for (Parameter* p : slots) {
    if (!params.contains(p->name)) throw ConfigError("checkpoint: missing tensor '" + p->name + "'");
    Tensor t = tensor_from_json(params[p->name], "checkpoint");
    if (t.shape() != p->value.shape()) {
      throw ConfigError("checkpoint: tensor '" + p->name + "' has shape " + shape_string(t.shape()) + ", expected " +
                        shape_string(p->value.shape()));
    }
    p->value = std::move(t);
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const Model& model) {
  write_text(path, dump_checkpoint(config, model));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_text(path)); }

std::string dump_snapshots(const SnapshotSet& set) {
  json j;
  j["max_hv"] = set.max_hv;
  j["probes"] = {{"centers", set.probes.centers}, {"neighbors", set.probes.neighbors}, {"hops", set.probes.hops}};
  json snaps = json::array();
  for (const LogitSnapshot& s : set.snapshots) snaps.push_back({{"epoch", s.epoch}, {"logits", s.logits}});
  j["snapshots"] = std::move(snaps);
  return j.dump();
}

SnapshotSet parse_snapshots(const std::string& text) {
  const json j = parse_json(text, "snapshots");
  SnapshotSet set;
  set.max_hv = field<int>(j, "max_hv", "snapshots");
  const json& p = j.at("probes");
  set.probes.centers = field<std::vector<std::uint32_t>>(p, "centers", "probes");
  set.probes.neighbors = field<std::vector<std::uint32_t>>(p, "neighbors", "probes");
  set.probes.hops = field<std::vector<std::uint8_t>>(p, "hops", "probes");
  if (set.probes.neighbors.size() != set.probes.size() || set.probes.hops.size() != set.probes.size()) {
    throw ConfigError("snapshots: probe lists differ in length");
  }
  for (const json& s : j.at("snapshots")) {
    LogitSnapshot snap;
    snap.epoch = field<std::size_t>(s, "epoch", "snapshot");
    snap.logits = field<std::vector<std::vector<std::vector<double>>>>(s, "logits", "snapshot");
    for (const auto& layer : snap.logits)
      for (const auto& head : layer)
        if (head.size() != set.probes.size()) throw ConfigError("snapshots: logit count differs from probe count");
    set.snapshots.push_back(std::move(snap));
  }
  return set;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,temp,gamma,saturated,l_cls,l_att,val_loss,val_metric\n";
  for (const TraceRow& r : trace) {
    out << r.epoch << ',' << r.temp << ',' << r.gamma << ',' << (r.saturated ? 1 : 0) << ',' << r.l_cls << ','
        << r.l_att << ',' << r.val_loss << ',' << r.val_metric << '\n';
  }
  return out.str();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

}  // namespace hopgat
