#include "hopgat/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "hopgat/errors.hpp"
#include "hopgat/rng.hpp"

namespace hopgat {

void Graph::validate() const {
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw ConfigError("edge (" + std::to_string(u) + ", " + std::to_string(v) + ") outside [0, " +
                        std::to_string(num_nodes) + ")");
    }
  }
  if (features.rank() != 2 || features.rows() != num_nodes) {
    throw ConfigError("features must be num_nodes × F, got " + shape_string(features.shape()));
  }
  if (label_mode == LabelMode::single) {
    if (labels.size() != num_nodes) throw ConfigError("single-label graph needs one label per node");
    if (label_matrix.size() != 0) throw ConfigError("single-label graph carries a multi-label matrix");
    for (int y : labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
        throw ConfigError("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
      }
    }
  } else {
    if (!labels.empty()) throw ConfigError("multi-label graph carries single labels");
    if (label_matrix.rank() != 2 || label_matrix.rows() != num_nodes || label_matrix.cols() != num_classes) {
      throw ConfigError("multi-label matrix must be num_nodes × num_classes");
    }
  }
  std::vector<std::uint8_t> owner(num_nodes, 0);
  auto mark = [&](const std::vector<std::uint32_t>& split, std::uint8_t tag, const char* name) {
    for (std::uint32_t v : split) {
      if (v >= num_nodes) throw ConfigError(std::string(name) + " split has node outside the graph");
      if (owner[v] != 0) throw ConfigError(std::string(name) + " split overlaps another split at node " + std::to_string(v));
      owner[v] = tag;
    }
  };
  mark(train, 1, "train");
  mark(val, 2, "val");
  mark(test, 3, "test");
  std::vector<std::uint8_t> seen(num_nodes, 0);
  for (std::uint32_t v : visible) {
    if (v >= num_nodes || owner[v] != 1) throw ConfigError("label-visible node " + std::to_string(v) + " is not a training node");
    if (seen[v]++) throw ConfigError("label-visible node listed twice");
  }
}

std::vector<std::vector<std::uint32_t>> Graph::adjacency() const {
  std::vector<std::vector<std::uint32_t>> adj(num_nodes);
  for (const auto& [u, v] : edges) {
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

HopMatrix::HopMatrix(std::size_t n, int max_hv) : n_(n), max_hv_(max_hv) {
  values_.assign(n * n, static_cast<std::uint8_t>(max_hv));
}

std::vector<std::uint64_t> HopMatrix::histogram() const {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(max_hv_) + 1, 0);
  for (std::uint8_t v : values_) ++counts[v];
  return counts;
}

HopMatrix compute_hop_matrix(const Graph& g, int max_hv) {
  if (max_hv < 1 || max_hv > 255) throw ConfigError("max_hv must be in [1, 255]");
  const std::size_t n = g.num_nodes;
  const auto adj = g.adjacency();
  HopMatrix hops(n, max_hv);

  // Rows are independent, so sources are split across threads.
  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<int> dist(n, -1);
    std::vector<std::uint32_t> frontier, next, touched;
    for (std::size_t s = begin; s < end; ++s) {
      frontier.assign(1, static_cast<std::uint32_t>(s));
      touched.assign(1, static_cast<std::uint32_t>(s));
      dist[s] = 0;
      hops.set(s, s, 0);
      for (int depth = 1; depth < max_hv && !frontier.empty(); ++depth) {
        next.clear();
        for (std::uint32_t u : frontier) {
          for (std::uint32_t v : adj[u]) {
            if (dist[v] >= 0) continue;
            dist[v] = depth;
            hops.set(s, v, depth);
            next.push_back(v);
            touched.push_back(v);
          }
        }
        frontier.swap(next);
      }
      for (std::uint32_t v : touched) dist[v] = -1;
    }
  };

  const std::size_t workers =
      n < 2048 ? 1 : std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 16));
  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return hops;
}

PairList neighborhood_pairs(const HopMatrix& hops, int max_hop) {
  PairList pairs;
  const std::size_t n = hops.size();
  pairs.offsets.reserve(n + 1);
  pairs.offsets.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const int hv = hops.at(i, j);
      if (hv <= max_hop) pairs.push_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), hv);
    }
    pairs.offsets.push_back(pairs.size());
  }
  return pairs;
}

std::size_t visible_count(std::size_t train_size, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("label rate must be in (0, 1], got " + std::to_string(rate));
  const double exact = rate * static_cast<double>(train_size);
  // Slack absorbs products such as 0.6 * 1000 = 600.0000000000001.
  const auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::min(count, train_size);
}

Graph subsample_labels(const Graph& g, double rate, std::uint64_t seed) {
  if (g.train.empty()) throw ConfigError("subsample_labels: training split is empty");
  const std::size_t k = visible_count(g.train.size(), rate);
  std::vector<std::uint32_t> pool = g.train;
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  Graph out = g;
  out.visible = std::move(pool);
  return out;
}

std::vector<ConsistencyRow> label_consistency_by_hop(const Graph& g, const HopMatrix& hops) {
  if (g.label_mode != LabelMode::single) {
    throw ConfigError("label consistency is defined for single-label graphs only");
  }
  if (hops.size() != g.num_nodes) throw DimensionError("hop matrix does not match the graph");
  const int max_hv = hops.max_hv();
  std::vector<ConsistencyRow> rows(static_cast<std::size_t>(max_hv));
  for (int hv = 1; hv <= max_hv; ++hv) {
    rows[hv - 1].hop = hv;
    rows[hv - 1].saturated = hv == max_hv;
  }
  const std::size_t n = g.num_nodes;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ConsistencyRow& row = rows[hops.at(i, j) - 1];
      ++row.pairs;
      if (g.labels[i] == g.labels[j]) ++row.same_label;
    }
  }
  for (auto& row : rows) {
    row.rate = row.pairs ? static_cast<double>(row.same_label) / static_cast<double>(row.pairs) : 0.0;
  }
  return rows;
}

Graph generate_sbm(const SbmOptions& o) {
  if (o.blocks < 2 || o.nodes_per_block < 3) throw ConfigError("SBM needs at least 2 blocks of 3 nodes");
  if (!(o.p_in >= 0.0 && o.p_in <= 1.0 && o.p_out >= 0.0 && o.p_out <= 1.0)) {
    throw ConfigError("SBM edge probabilities must lie in [0, 1]");
  }
  if (!(o.p_in > o.p_out)) throw ConfigError("SBM requires p_in > p_out");
  if (o.feature_noise < 0.0) throw ConfigError("SBM feature noise must be non-negative");
  if (o.val_fraction < 0.0 || o.test_fraction < 0.0 || o.val_fraction + o.test_fraction >= 1.0) {
    throw ConfigError("SBM split fractions must leave a training split");
  }

  Graph g;
  g.num_nodes = o.blocks * o.nodes_per_block;
  g.num_classes = o.blocks;
  g.labels.resize(g.num_nodes);
  for (std::size_t v = 0; v < g.num_nodes; ++v) g.labels[v] = static_cast<int>(v / o.nodes_per_block);

  Rng rng(o.seed);
  for (std::size_t u = 0; u < g.num_nodes; ++u) {
    for (std::size_t v = u + 1; v < g.num_nodes; ++v) {
      const double p = g.labels[u] == g.labels[v] ? o.p_in : o.p_out;
      if (rng.uniform() < p) g.edges.emplace_back(u, v);
    }
  }

  g.features = Tensor({g.num_nodes, o.blocks});
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    for (std::size_t c = 0; c < o.blocks; ++c) {
      const double signature = static_cast<std::size_t>(g.labels[v]) == c ? 1.0 : 0.0;
      g.features.at(v, c) = signature + (o.feature_noise > 0.0 ? o.feature_noise * rng.normal() : 0.0);
    }
  }

  const auto n_val = static_cast<std::size_t>(std::lround(o.val_fraction * o.nodes_per_block));
  const auto n_test = static_cast<std::size_t>(std::lround(o.test_fraction * o.nodes_per_block));
  for (std::size_t b = 0; b < o.blocks; ++b) {
    std::vector<std::uint32_t> members(o.nodes_per_block);
    for (std::size_t k = 0; k < o.nodes_per_block; ++k) members[k] = static_cast<std::uint32_t>(b * o.nodes_per_block + k);
    for (std::size_t k = members.size(); k > 1; --k) std::swap(members[k - 1], members[rng.below(k)]);
    for (std::size_t k = 0; k < members.size(); ++k) {
      auto& split = k < n_val ? g.val : k < n_val + n_test ? g.test : g.train;
      split.push_back(members[k]);
    }
  }
  for (auto* split : {&g.train, &g.val, &g.test}) std::sort(split->begin(), split->end());
  g.visible = g.train;
  g.validate();
  return g;
}

}  // namespace hopgat
