#include "gduq/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "gduq/errors.hpp"

namespace gduq {

std::string to_string(Backbone b) { return b == Backbone::GCN ? "gcn" : "gin"; }

Backbone backbone_from_string(const std::string& s) {
  if (s == "gcn") return Backbone::GCN;
  if (s == "gin") return Backbone::GIN;
  throw ConfigError("unknown backbone '" + s + "'");
}

std::string to_string(AnchoringMode::Kind k) {
  switch (k) {
    case AnchoringMode::Kind::None: return "none";
    case AnchoringMode::Kind::NodeFeature: return "node_feature";
    case AnchoringMode::Kind::HiddenLayer: return "hidden_layer";
    case AnchoringMode::Kind::Readout: return "readout";
  }
  return "none";
}

AnchoringMode::Kind anchoring_kind_from_string(const std::string& s) {
  if (s == "none") return AnchoringMode::Kind::None;
  if (s == "node_feature") return AnchoringMode::Kind::NodeFeature;
  if (s == "hidden_layer") return AnchoringMode::Kind::HiddenLayer;
  if (s == "readout") return AnchoringMode::Kind::Readout;
  throw ConfigError("unknown anchoring kind '" + s + "'");
}

void ModelSpec::validate() const {
  if (num_mp_layers < 1) throw ConfigError("model: num_mp_layers must be >= 1");
  if (hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
  if (mlp_head_layers < 1) throw ConfigError("model: mlp_head_layers must be >= 1");
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
  if (anchoring.num_anchors < 1) throw ConfigError("model: num_inference_anchors must be >= 1");
  if (anchoring.kind == AnchoringMode::Kind::HiddenLayer &&
      (anchoring.layer < 2 || anchoring.layer > num_mp_layers))
    throw ConfigError("model: hidden-layer anchoring needs 2 <= r <= " +
                      std::to_string(num_mp_layers) + " (got r=" +
                      std::to_string(anchoring.layer) + ")");
  if (anchoring.kind == AnchoringMode::Kind::Readout && task == TaskKind::NodeClassification)
    throw ConfigError("model: readout anchoring is incompatible with node classification");
  if (anchoring.pretrained_frozen_backbone && anchoring.kind != AnchoringMode::Kind::Readout)
    throw ConfigError("model: pretrained_frozen_backbone requires readout anchoring");
}

int ModelSpec::mp_input_dim(int layer) const {
  int base = layer == 1 ? input_dim : hidden_dim;
  if (layer == 1 && anchoring.kind == AnchoringMode::Kind::NodeFeature) base = 2 * input_dim;
  if (anchoring.kind == AnchoringMode::Kind::HiddenLayer && layer == anchoring.layer)
    base = 2 * hidden_dim;
  return base;
}

int ModelSpec::head_input_dim() const {
  return anchoring.kind == AnchoringMode::Kind::Readout ? 2 * hidden_dim : hidden_dim;
}

Tensor& Params::at(const std::string& name) {
  for (auto& [n, t] : items)
    if (n == name) return t;
  throw std::invalid_argument("Params: no parameter named '" + name + "'");
}

const Tensor& Params::at(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw std::invalid_argument("Params: no parameter named '" + name + "'");
}

bool Params::has(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return true;
  return false;
}

std::vector<Tensor> Params::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items.size());
  for (const auto& [n, t] : items) out.push_back(t);
  return out;
}

std::vector<Tensor> Params::tensors_with_prefix(const std::string& prefix) const {
  std::vector<Tensor> out;
  for (const auto& [n, t] : items)
    if (n.rfind(prefix, 0) == 0) out.push_back(t);
  return out;
}

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (auto& v : w) v = rng.uniform(-limit, limit);
  return Tensor::from_data(fan_in, fan_out, std::move(w), true);
}

}  // namespace

Params init_params(const ModelSpec& spec, Rng& rng) {
  spec.validate();
  Params p;
  for (int layer = 1; layer <= spec.num_mp_layers; ++layer) {
    const auto in = static_cast<std::size_t>(spec.mp_input_dim(layer));
    const auto out = static_cast<std::size_t>(spec.hidden_dim);
    const std::string base = "mp" + std::to_string(layer);
    if (spec.backbone == Backbone::GCN) {
      p.items.emplace_back(base + ".w", glorot(in, out, rng));
      p.items.emplace_back(base + ".b", Tensor::zeros(1, out, true));
    } else {
      p.items.emplace_back(base + ".eps", Tensor::zeros(1, 1, true));
      p.items.emplace_back(base + ".mlp1.w", glorot(in, out, rng));
      p.items.emplace_back(base + ".mlp1.b", Tensor::zeros(1, out, true));
      p.items.emplace_back(base + ".mlp2.w", glorot(out, out, rng));
      p.items.emplace_back(base + ".mlp2.b", Tensor::zeros(1, out, true));
    }
  }
  for (int layer = 1; layer <= spec.mlp_head_layers; ++layer) {
    const auto in = static_cast<std::size_t>(layer == 1 ? spec.head_input_dim() : spec.hidden_dim);
    const auto out = static_cast<std::size_t>(layer == spec.mlp_head_layers ? spec.num_classes
                                                                            : spec.hidden_dim);
    const std::string base = "head" + std::to_string(layer);
    p.items.emplace_back(base + ".w", glorot(in, out, rng));
    p.items.emplace_back(base + ".b", Tensor::zeros(1, out, true));
  }
  return p;
}

Params detach_params(const Params& p) {
  Params out;
  for (const auto& [n, t] : p.items)
    out.items.emplace_back(n, Tensor::from_data(t.rows(), t.cols(), t.values(), false));
  return out;
}

Params clone_params(const Params& p) {
  Params out;
  for (const auto& [n, t] : p.items)
    out.items.emplace_back(n, Tensor::from_data(t.rows(), t.cols(), t.values(), t.requires_grad()));
  return out;
}

std::uint64_t fingerprint_params(const Params& p, const std::string& prefix) {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix_bytes = [&h](const void* ptr, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(ptr);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& [n, t] : p.items) {
    if (!prefix.empty() && n.rfind(prefix, 0) != 0) continue;
    mix_bytes(n.data(), n.size());
    mix_bytes(t.values().data(), t.values().size() * sizeof(double));
  }
  return h;
}

Matrix gcn_normalized_adjacency(const Matrix& a) {
  const std::size_t n = a.rows;
  Matrix hat = a;
  for (std::size_t i = 0; i < n; ++i) hat(i, i) = 1.0;
  std::vector<double> dinv(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += hat(i, j);
    dinv[i] = 1.0 / std::sqrt(deg);
  }
  Matrix out(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = dinv[i] * hat(i, j) * dinv[j];
  return out;
}

Tensor gcn_layer(const Tensor& x, const Tensor& norm_adj, const Tensor& w, const Tensor& b) {
  return relu(add(matmul(norm_adj, matmul(x, w)), b));
}

Tensor gin_layer(const Tensor& x, const Tensor& adj, const Tensor& eps, const Tensor& w1,
                 const Tensor& b1, const Tensor& w2, const Tensor& b2) {
  static const Tensor kOne = Tensor::full(1, 1, 1.0);
  const Tensor agg = add(mul_scalar(x, add(eps, kOne)), matmul(adj, x));
  const Tensor h = relu(add(matmul(agg, w1), b1));
  return add(matmul(h, w2), b2);
}

Tensor readout_mean(const Tensor& x) { return row_mean(x); }

namespace {

Tensor apply_mp_layer(const ModelSpec& spec, const Params& params, int layer, const Tensor& x,
                      const Tensor& adj_op) {
  const std::string base = "mp" + std::to_string(layer);
  if (spec.backbone == Backbone::GCN)
    return gcn_layer(x, adj_op, params.at(base + ".w"), params.at(base + ".b"));
  return gin_layer(x, adj_op, params.at(base + ".eps"), params.at(base + ".mlp1.w"),
                   params.at(base + ".mlp1.b"), params.at(base + ".mlp2.w"),
                   params.at(base + ".mlp2.b"));
}

Tensor adjacency_operator(const ModelSpec& spec, const Graph& graph) {
  if (spec.backbone == Backbone::GCN)
    return Tensor::from_matrix(gcn_normalized_adjacency(graph.adjacency));
  return Tensor::from_matrix(graph.adjacency);
}

void check_anchor_shape(const Matrix& anchor, std::size_t rows, std::size_t cols,
                        const char* what) {
  if (anchor.rows != rows || anchor.cols != cols)
    throw std::invalid_argument(std::string("forward: ") + what + " anchor is " +
                                shape_str(anchor.rows, anchor.cols) + ", expected " +
                                shape_str(rows, cols));
}

}  // namespace

Tensor head_forward(const ModelSpec& spec, const Params& params, const Tensor& features) {
  Tensor h = features;
  for (int layer = 1; layer <= spec.mlp_head_layers; ++layer) {
    const std::string base = "head" + std::to_string(layer);
    h = add(matmul(h, params.at(base + ".w")), params.at(base + ".b"));
    if (layer < spec.mlp_head_layers) h = relu(h);
  }
  return h;
}

Tensor head_forward_anchored(const ModelSpec& spec, const Params& params, const Tensor& pooled,
                             const Matrix& anchor_row) {
  check_anchor_shape(anchor_row, pooled.rows(), pooled.cols(), "readout");
  const Tensor c = Tensor::from_matrix(anchor_row);
  return head_forward(spec, params, concat_cols(sub(pooled, c), c));
}

Tensor mp_prefix(const ModelSpec& spec, const Params& params, const Graph& graph, int upto) {
  Tensor h = Tensor::from_matrix(graph.node_features);
  if (upto == 0) return h;
  const Tensor adj_op = adjacency_operator(spec, graph);
  if (spec.anchoring.kind == AnchoringMode::Kind::NodeFeature)
    throw std::invalid_argument("mp_prefix: node-feature anchoring has no unanchored prefix");
  for (int layer = 1; layer <= upto; ++layer) h = apply_mp_layer(spec, params, layer, h, adj_op);
  return h;
}

Tensor forward_from_hidden(const ModelSpec& spec, const Params& params, const Graph& graph,
                           const Tensor& prefix, const Matrix& anchor) {
  const int r = spec.anchoring.layer;
  check_anchor_shape(anchor, prefix.rows(), prefix.cols(), "hidden-layer");
  const Tensor adj_op = adjacency_operator(spec, graph);
  const Tensor c = Tensor::from_matrix(anchor);
  Tensor h = concat_cols(sub(prefix, c), c);
  for (int layer = r; layer <= spec.num_mp_layers; ++layer)
    h = apply_mp_layer(spec, params, layer, h, adj_op);
  if (spec.task == TaskKind::GraphClassification)
    return head_forward(spec, params, readout_mean(h));
  return head_forward(spec, params, h);
}

Tensor forward_logits(const ModelSpec& spec, const Params& params, const Graph& graph,
                      const Matrix* anchor) {
  const bool wants_anchor = spec.anchoring.kind != AnchoringMode::Kind::None;
  if (wants_anchor != (anchor != nullptr))
    throw std::invalid_argument(wants_anchor
                                    ? "forward: anchoring mode requires an anchor operand"
                                    : "forward: anchor operand given but anchoring is none");
  const std::size_t n = graph.num_nodes();
  const Tensor adj_op = adjacency_operator(spec, graph);

  Tensor h;
  switch (spec.anchoring.kind) {
    case AnchoringMode::Kind::None: {
      h = Tensor::from_matrix(graph.node_features);
      for (int layer = 1; layer <= spec.num_mp_layers; ++layer)
        h = apply_mp_layer(spec, params, layer, h, adj_op);
      break;
    }
    case AnchoringMode::Kind::NodeFeature: {
      check_anchor_shape(*anchor, n, graph.feature_dim(), "node-feature");
      const Tensor x0 = Tensor::from_matrix(graph.node_features);
      const Tensor c = Tensor::from_matrix(*anchor);
      h = concat_cols(sub(x0, c), spec.anchoring.nfa_concat_original ? x0 : c);
      for (int layer = 1; layer <= spec.num_mp_layers; ++layer)
        h = apply_mp_layer(spec, params, layer, h, adj_op);
      break;
    }
    case AnchoringMode::Kind::HiddenLayer: {
      const Tensor prefix = mp_prefix(spec, params, graph, spec.anchoring.layer - 1);
      return forward_from_hidden(spec, params, graph, prefix, *anchor);
    }
    case AnchoringMode::Kind::Readout: {
      h = Tensor::from_matrix(graph.node_features);
      for (int layer = 1; layer <= spec.num_mp_layers; ++layer)
        h = apply_mp_layer(spec, params, layer, h, adj_op);
      return head_forward_anchored(spec, params, readout_mean(h), *anchor);
    }
  }
  if (spec.task == TaskKind::GraphClassification)
    return head_forward(spec, params, readout_mean(h));
  return head_forward(spec, params, h);
}

}  // namespace gduq
