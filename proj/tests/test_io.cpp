#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "hopgat/errors.hpp"
#include "hopgat/io.hpp"
#include "hopgat/rng.hpp"
#include "oracles.hpp"

using namespace hopgat;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("hopgat_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
  std::filesystem::remove_all(dir);
  return dir;
}

void expect_same_graph(const Graph& a, const Graph& b) {
  EXPECT_EQ(a.num_nodes, b.num_nodes);
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_EQ(a.features.shape(), b.features.shape());
  EXPECT_EQ(a.features.values(), b.features.values());
  EXPECT_EQ(a.label_mode, b.label_mode);
  EXPECT_EQ(a.num_classes, b.num_classes);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.label_matrix.values(), b.label_matrix.values());
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(b.visible, b.train);
}

Graph multi_label_graph() {
  Rng rng(2);
  Graph g = oracle::random_graph(rng, 8, 0.3, 3, 4);
  g.label_mode = LabelMode::multi;
  g.labels.clear();
  g.label_matrix = Tensor({8, 4});
  for (double& v : g.label_matrix.data()) v = rng.uniform() < 0.5 ? 1.0 : 0.0;
  return g;
}

}  // namespace

TEST(IoTest, ContainerRoundTripIsExact) {
  Rng rng(1);
  const std::vector<Graph> graphs{oracle::random_graph(rng, 12, 0.2, 5, 3), multi_label_graph()};
  const auto back = parse_container(dump_container(graphs));
  ASSERT_EQ(back.size(), 2u);
  expect_same_graph(graphs[0], back[0]);
  expect_same_graph(graphs[1], back[1]);

  const auto dir = temp_dir();
  save_container(dir / "nested" / "g.json", graphs);
  expect_same_graph(graphs[0], load_container(dir / "nested" / "g.json")[0]);
  std::filesystem::remove_all(dir);
}

TEST(IoTest, ContainerRejectsBadDocuments) {
  Rng rng(3);
  const std::string good = dump_container({oracle::random_graph(rng, 4, 0.5)});
  std::string directed = good;
  directed.replace(directed.find("\"directed\":false"), 16, "\"directed\":true");
  EXPECT_THROW(parse_container(directed), ConfigError);
  std::string version = good;
  version.replace(version.find("\"format_version\":1"), 18, "\"format_version\":9");
  EXPECT_THROW(parse_container(version), ConfigError);
  EXPECT_THROW(parse_container("{not json"), ConfigError);
  EXPECT_THROW(parse_container(R"({"format_version":1,"graphs":[{"num_nodes":2}]})"), ConfigError);
  EXPECT_THROW(load_container("/nonexistent/graph.json"), ConfigError);
}

TEST(IoTest, ConfigRoundTrip) {
  ExperimentConfig c = preset("citeseer");
  c.force_gamma = 0.125;
  c.seed = 77;
  c.snapshot_every = 3;
  c.schedule.decay = 0.9;
  const ExperimentConfig back = parse_config(dump_config(c));
  EXPECT_EQ(dump_config(back), dump_config(c));
  EXPECT_EQ(back.force_gamma, c.force_gamma);
  EXPECT_EQ(back.heads, c.heads);
  EXPECT_EQ(back.dp2, c.dp2);
  EXPECT_EQ(back.schedule.decay, 0.9);
  EXPECT_EQ(back.attention, c.attention);
}

TEST(IoTest, CheckpointRoundTripIsBitExact) {
  Rng rng(5);
  const Graph g = oracle::random_graph(rng, 10, 0.3, 4, 2);
  ExperimentConfig c = preset("sbm");
  c.heads = {2, 2, 1};
  c.widths = {3, 3, 2};
  Model m(c.model_config(4), 9);
  for (Parameter* p : m.parameters())
    for (double& v : p->value.data()) v = rng.uniform(-1.0, 1.0) * 1e-3 + v / 3.0;
  const Checkpoint back = parse_checkpoint(dump_checkpoint(c, m));
  EXPECT_EQ(back.in_dim, 4u);
  const auto a = m.parameters();
  const auto b = back.model.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k]->name, b[k]->name);
    EXPECT_EQ(a[k]->value.values(), b[k]->value.values());
  }
  const auto dir = temp_dir();
  save_checkpoint(dir / "ck.json", c, m);
  Checkpoint loaded = load_checkpoint(dir / "ck.json");
  EXPECT_EQ(evaluate(loaded.model, {g}, Split::val).loss, evaluate(m, {g}, Split::val).loss);
  std::filesystem::remove_all(dir);
}

TEST(IoTest, CheckpointRejectsShapeMismatch) {
  ExperimentConfig c = preset("sbm");
  Model m(c.model_config(4), 1);
  std::string text = dump_checkpoint(c, m);
  const auto pos = text.find("\"in_dim\":4");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 10, "\"in_dim\":5");
  EXPECT_THROW(parse_checkpoint(text), ConfigError);
}

TEST(IoTest, SnapshotRoundTrip) {
  SnapshotSet set;
  set.max_hv = 3;
  set.probes.push_back(0, 1, 1);
  set.probes.push_back(2, 0, 3);
  set.snapshots.push_back({0, {{{0.1, -0.2}}, {{1.0 / 3.0, 2.0}, {5e-300, -7.0}}}});
  set.snapshots.push_back({9, {{{1.1, -1.2}}, {{0.0, 0.5}, {1.5, -2.0}}}});
  const SnapshotSet back = parse_snapshots(dump_snapshots(set));
  EXPECT_EQ(back.max_hv, 3);
  EXPECT_EQ(back.probes.centers, set.probes.centers);
  EXPECT_EQ(back.probes.neighbors, set.probes.neighbors);
  EXPECT_EQ(back.probes.hops, set.probes.hops);
  ASSERT_EQ(back.snapshots.size(), 2u);
  EXPECT_EQ(back.snapshots[1].epoch, 9u);
  EXPECT_EQ(back.snapshots[0].logits, set.snapshots[0].logits);
}

TEST(IoTest, TraceCsv) {
  TraceRow r;
  r.epoch = 3;
  r.temp = 61.4125;
  r.gamma = 0.5;
  r.saturated = true;
  r.l_cls = 0.25;
  r.l_att = 1.0;
  r.val_loss = 0.75;
  r.val_metric = 0.875;
  std::istringstream in(trace_csv({r}));
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header, "epoch,temp,gamma,saturated,l_cls,l_att,val_loss,val_metric");
  EXPECT_EQ(line, "3,61.412500000000001,0.5,1,0.25,1,0.75,0.875");
}
