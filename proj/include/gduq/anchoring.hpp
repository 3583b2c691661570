#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gduq/graph.hpp"
#include "gduq/model.hpp"
#include "gduq/rng.hpp"

namespace gduq {

// Where inference anchors come from. Node-feature anchoring carries a
// diagonal Gaussian fitted to training node features; hidden-layer and
// readout anchoring carry a frozen set of representations drawn once from
// the in-distribution validation split.
struct AnchorSource {
  enum class Kind { Gaussian, FrozenSet };
  Kind kind = Kind::Gaussian;
  AnchoringMode::Kind mode = AnchoringMode::Kind::NodeFeature;

  std::vector<double> mean;    // Gaussian, length d
  std::vector<double> stddev;  // Gaussian, length d, clamped at kMinStd

  std::vector<Matrix> frozen;  // FrozenSet: K items (readout 1xh, hidden N_k x h)
  std::uint64_t backbone_fingerprint = 0;  // params the frozen set was built under
  std::uint64_t rng_seed = 0;  // training seed the source was produced under

  static constexpr double kMinStd = 1e-6;
};

AnchorSource fit_node_feature_gaussian(const std::vector<Graph>& train);

// Fresh i.i.d. anchor rows, one per node; training-time use.
Matrix sample_training_anchors(const AnchorSource& src, std::size_t n, Rng& rng);

// Uniformly random row permutation of the batch node matrix.
Matrix shuffle_anchor_batch(const Matrix& node_matrix, Rng& rng);

// Draws K distinct validation graphs and stores their representations under
// the current parameters: pooled graph vectors for readout mode, layer-(r-1)
// node matrices for hidden-layer mode.
AnchorSource build_frozen_anchor_set(const ModelSpec& spec, const Params& params,
                                     const std::vector<Graph>& id_val, int k, Rng& rng,
                                     AnchoringMode::Kind mode);

// The K per-run anchor vectors, drawn once per evaluation run and cached.
// In the default broadcast mode every node shares anchor k; with
// per_node_draws (Gaussian sources only) anchor k is a cached stream seed and
// each node gets its own i.i.d. draw.
struct InferenceAnchors {
  AnchoringMode::Kind mode = AnchoringMode::Kind::None;
  std::vector<Matrix> anchors;  // each 1 x dim (broadcast mode)
  bool per_node = false;
  std::vector<double> mean, stddev;            // per-node mode
  std::vector<std::uint64_t> member_seeds;     // per-node mode, one per anchor
  int count() const {
    return static_cast<int>(per_node ? member_seeds.size() : anchors.size());
  }
};

InferenceAnchors draw_inference_anchors(const AnchorSource& src, int k, Rng& rng,
                                        bool per_node_draws = false);

// The k-th anchor materialized for n nodes: n copies of the cached vector, or
// n fresh rows from the cached stream in per-node mode.
Matrix broadcast_inference_anchor(const InferenceAnchors& anchors, int k, std::size_t n);

// Pretrained-frozen contract: frozen anchors must match the backbone they
// were built under; recomputing against changed parameters is an error.
void verify_anchor_source(const ModelSpec& spec, const Params& params, const AnchorSource& src);

// ---- aggregation ------------------------------------------------------------

struct EnsemblePrediction {
  std::vector<double> mu;        // column mean of member probabilities
  std::vector<double> sigma;     // column sample std (divisor K-1), 0 when K=1
  std::vector<double> mu_calib;  // mu * (1 - sigma), clamped at 0, renormalized
  Matrix per_anchor_probs;       // K x q
};

EnsemblePrediction aggregate_members(const Matrix& per_anchor_probs);

// ---- training ----------------------------------------------------------------

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct TrainResult {
  Params params;
  std::optional<AnchorSource> source;  // absent for anchoring = none
  std::vector<double> epoch_losses;    // mean training loss per epoch
};

// Anchored training: fresh anchors per batch (per-node Gaussian samples for
// node-feature mode, batch shuffles for hidden-layer/readout), cross entropy,
// Adam. Deterministic given cfg.seed.
TrainResult train(const ModelSpec& spec, const DatasetSplits& splits, const TrainConfig& cfg);

// Readout-anchored head training on a frozen pretrained backbone: the head is
// reinitialized at doubled input width and is the only thing the optimizer
// sees; pooled representations are computed once up front.
TrainResult train_readout_head(const ModelSpec& spec, const Params& backbone,
                               const DatasetSplits& splits, const TrainConfig& cfg);

// ---- inference ----------------------------------------------------------------

// Graph-task prediction aggregated over the K cached anchors.
EnsemblePrediction infer_graph(const ModelSpec& spec, const Params& params, const Graph& graph,
                               const InferenceAnchors& anchors);

// Node-task prediction, one aggregate per node.
std::vector<EnsemblePrediction> infer_nodes(const ModelSpec& spec, const Params& params,
                                            const Graph& graph, const InferenceAnchors& anchors);

// Convenience form that draws the anchor cache itself.
EnsemblePrediction infer(const ModelSpec& spec, const Params& params, const Graph& graph,
                         const AnchorSource& src, int k, Rng& rng);

}  // namespace gduq
