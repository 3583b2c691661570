#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gduq/graph.hpp"
#include "gduq/rng.hpp"
#include "gduq/tensor.hpp"

namespace gduq {

enum class Backbone { GCN, GIN };

std::string to_string(Backbone b);
Backbone backbone_from_string(const std::string& s);

struct AnchoringMode {
  enum class Kind { None, NodeFeature, HiddenLayer, Readout };
  Kind kind = Kind::None;
  int layer = 2;        // r, HiddenLayer only; 2 <= r <= num_mp_layers
  int num_anchors = 10;  // K
  bool pretrained_frozen_backbone = false;  // Readout only
  // Node-feature anchored input is [X0 - C || X0] when true, [X0 - C || C]
  // when false. Both concatenation conventions are supported.
  bool nfa_concat_original = true;
};

std::string to_string(AnchoringMode::Kind k);
AnchoringMode::Kind anchoring_kind_from_string(const std::string& s);

struct ModelSpec {
  Backbone backbone = Backbone::GIN;
  int num_mp_layers = 3;
  int hidden_dim = 32;
  int mlp_head_layers = 2;
  int num_classes = 2;
  TaskKind task = TaskKind::GraphClassification;
  AnchoringMode anchoring;
  int input_dim = 0;

  void validate() const;
  // Input width of message-passing layer `layer` (1-based), including the
  // doubling applied to the layer that consumes anchored input.
  int mp_input_dim(int layer) const;
  int head_input_dim() const;
};

// Ordered named parameter set; iteration order is the init/draw order.
struct Params {
  std::vector<std::pair<std::string, Tensor>> items;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<Tensor> tensors() const;
  // Tensors whose name starts with `prefix`.
  std::vector<Tensor> tensors_with_prefix(const std::string& prefix) const;
};

Params init_params(const ModelSpec& spec, Rng& rng);
// Deep copy with tracking disabled; used for no-tape evaluation.
Params detach_params(const Params& p);
// Deep copy preserving requires_grad.
Params clone_params(const Params& p);
// FNV-1a over the raw bytes of every tensor whose name starts with `prefix`.
std::uint64_t fingerprint_params(const Params& p, const std::string& prefix = "");

// ---- layers -----------------------------------------------------------------

// D^-1/2 (A with unit diagonal) D^-1/2; self-loops are forced, never stacked.
Matrix gcn_normalized_adjacency(const Matrix& a);

Tensor gcn_layer(const Tensor& x, const Tensor& norm_adj, const Tensor& w, const Tensor& b);
Tensor gin_layer(const Tensor& x, const Tensor& adj, const Tensor& eps, const Tensor& w1,
                 const Tensor& b1, const Tensor& w2, const Tensor& b2);
Tensor readout_mean(const Tensor& x);

// ---- forward ------------------------------------------------------------------

// Full forward pass. `anchor` must be present exactly when the spec's
// anchoring kind is not None; its shape depends on the mode:
//   NodeFeature  N x input_dim   (per-node anchors)
//   HiddenLayer  N x hidden_dim  (rows aligned with this graph's nodes)
//   Readout      1 x hidden_dim
// The anchor is a plain matrix, so no gradient ever reaches its producer.
Tensor forward_logits(const ModelSpec& spec, const Params& params, const Graph& graph,
                      const Matrix* anchor = nullptr);

// Node representations after message-passing layers 1..upto (upto = 0 returns
// the raw features). Runs the unanchored stack; valid for anchoring modes
// whose layers 1..upto are deterministic.
Tensor mp_prefix(const ModelSpec& spec, const Params& params, const Graph& graph, int upto);

// Continues a HiddenLayer-mode forward from the prefix produced by
// mp_prefix(spec, params, graph, r-1), consuming [prefix - anchor || anchor].
Tensor forward_from_hidden(const ModelSpec& spec, const Params& params, const Graph& graph,
                           const Tensor& prefix, const Matrix& anchor);

// Head applied to pooled representation [g - c || c] (Readout mode).
Tensor head_forward_anchored(const ModelSpec& spec, const Params& params, const Tensor& pooled,
                             const Matrix& anchor_row);
Tensor head_forward(const ModelSpec& spec, const Params& params, const Tensor& features);

}  // namespace gduq
