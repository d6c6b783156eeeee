#pragma once

// On-disk formats. Graph containers, checkpoints, configs and logit
// snapshots are JSON documents; doubles are written with round-trip precision
// so a save/load cycle is bit-exact. Schedule traces are CSV.

#include <filesystem>
#include <string>
#include <vector>

#include "hopgat/attention.hpp"
#include "hopgat/graph.hpp"
#include "hopgat/trainer.hpp"

namespace hopgat {

inline constexpr int kContainerVersion = 1;
inline constexpr int kCheckpointVersion = 1;

// Graph container:
//   {"format_version": 1, "graphs": [{"num_nodes", "directed": false,
//    "edges": [[u, v], ...], "features": {"rows", "cols", "values"},
//    "labels": {"mode": "single"|"multi", "num_classes", "values"},
//    "masks": {"train", "val", "test"}}]}
// Single-label values are class ids; multi-label values are num_nodes rows of
// 0/1 entries. Every training node is label-visible after loading.
std::string dump_container(const std::vector<Graph>& graphs);
std::vector<Graph> parse_container(const std::string& text);
void save_container(const std::filesystem::path& path, const std::vector<Graph>& graphs);
std::vector<Graph> load_container(const std::filesystem::path& path);

std::string dump_config(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::string& text);

struct Checkpoint {
  ExperimentConfig config;
  std::size_t in_dim = 0;
  Model model;
};

std::string dump_checkpoint(const ExperimentConfig& config, const Model& model);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config, const Model& model);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string dump_snapshots(const SnapshotSet& set);
SnapshotSet parse_snapshots(const std::string& text);

// epoch,temp,gamma,saturated,l_cls,l_att,val_loss,val_metric
std::string trace_csv(const std::vector<TraceRow>& trace);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hopgat
