#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gduq/dense.hpp"
#include "gduq/rng.hpp"

namespace gduq {

enum class TaskKind { GraphClassification, NodeClassification };
enum class ShiftKind { None, Size, Covariate, Concept };

std::string to_string(TaskKind t);
std::string to_string(ShiftKind s);
TaskKind task_from_string(const std::string& s);
ShiftKind shift_from_string(const std::string& s);

// One graph sample. Graph tasks carry graph_label; node tasks carry
// node_labels plus the transductive node_mask for the split the copy lives in.
struct Graph {
  Matrix node_features;  // N x d
  Matrix adjacency;      // N x N, entries in [0,1], symmetric for generated data
  std::optional<int> graph_label;
  std::optional<std::vector<int>> node_labels;
  std::optional<std::vector<int>> node_mask;
  std::string graph_id;

  std::size_t num_nodes() const { return node_features.rows; }
  std::size_t feature_dim() const { return node_features.cols; }
  void validate() const;

  bool operator==(const Graph& o) const = default;
};

struct DatasetSplits {
  std::vector<Graph> train;
  std::vector<Graph> id_val;
  std::vector<Graph> id_test;
  std::vector<Graph> ood_test;
  ShiftKind shift_kind = ShiftKind::None;
  int num_classes = 0;
  TaskKind task = TaskKind::GraphClassification;

  void validate() const;
  bool operator==(const DatasetSplits& o) const = default;
};

enum class BaseStructure { Path, Cycle, Tree, Ladder };
enum class MotifKind { House, Triangle, Clique4, Star };

std::string to_string(BaseStructure b);
std::string to_string(MotifKind m);
BaseStructure base_from_string(const std::string& s);
MotifKind motif_from_string(const std::string& s);
int motif_size(MotifKind m);

struct GeneratorConfig {
  TaskKind task = TaskKind::GraphClassification;
  int num_graphs = 0;  // node task: total node count of the one generated graph
  std::vector<BaseStructure> base_structures;
  std::vector<MotifKind> motifs;
  std::array<int, 2> size_range{0, 0};  // total node count per graph, inclusive
  int feature_dim = 0;
  double spurious_feature_strength = 0.0;  // P(spurious channel == label) on train/id
  double ood_spurious_strength = 0.0;      // same on ood_test
  double ood_mean_shift = 0.0;             // node task: additive shift on channel 0 of ood nodes
  double sbm_p_intra = 0.15;               // node task: within-block edge probability
  double sbm_p_inter = 0.02;               // node task: cross-block edge probability
  std::uint64_t seed = 0;

  void validate() const;
};

// Motif-classification graphs: a base structure with one labeled motif
// attached. Concept shift comes from the spurious feature channel (last
// column, graph-wide value); covariate shift from holding out one base
// structure for ood_test.
DatasetSplits gen_motif_dataset(const GeneratorConfig& cfg);

// Re-splits a pool of graphs by node count: train takes sizes up to the
// train_q quantile, ood_test sizes from the test_q quantile up, the middle
// half-splits into id_val/id_test. Nearest-rank quantiles.
DatasetSplits make_size_shift_splits(std::vector<Graph> graphs, double train_q = 0.5,
                                     double test_q = 0.9, std::uint64_t shuffle_seed = 0xD5);

// Two-block SBM node-classification graph with class-conditional Gaussian
// features and transductive role masks.
DatasetSplits gen_node_dataset(const GeneratorConfig& cfg);

// Line-delimited JSON; see FORMAT.md for the schema. Round trip is exact.
void save_dataset(const DatasetSplits& splits, const std::string& path);
DatasetSplits load_dataset(const std::string& path);

}  // namespace gduq
