#include "gduq/anchoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gduq/errors.hpp"
#include "gduq/tensor.hpp"

namespace gduq {

AnchorSource fit_node_feature_gaussian(const std::vector<Graph>& train) {
  if (train.empty()) throw DataError("fit_node_feature_gaussian: empty training set");
  std::size_t total = 0;
  for (const auto& g : train) total += g.num_nodes();
  if (total < 2) throw DataError("fit_node_feature_gaussian: need at least 2 nodes in total");
  const std::size_t d = train.front().feature_dim();

  AnchorSource src;
  src.kind = AnchorSource::Kind::Gaussian;
  src.mode = AnchoringMode::Kind::NodeFeature;
  src.mean.assign(d, 0.0);
  src.stddev.assign(d, 0.0);
  for (const auto& g : train)
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
      for (std::size_t c = 0; c < d; ++c) src.mean[c] += g.node_features(i, c);
  for (auto& m : src.mean) m /= static_cast<double>(total);
  for (const auto& g : train)
    for (std::size_t i = 0; i < g.num_nodes(); ++i)
      for (std::size_t c = 0; c < d; ++c) {
        const double r = g.node_features(i, c) - src.mean[c];
        src.stddev[c] += r * r;
      }
  for (auto& s : src.stddev)
    s = std::max(std::sqrt(s / static_cast<double>(total - 1)), AnchorSource::kMinStd);
  return src;
}

Matrix sample_training_anchors(const AnchorSource& src, std::size_t n, Rng& rng) {
  if (src.kind != AnchorSource::Kind::Gaussian)
    throw std::invalid_argument("sample_training_anchors: source is not a Gaussian");
  if (n == 0) throw std::invalid_argument("sample_training_anchors: n must be >= 1");
  const std::size_t d = src.mean.size();
  Matrix c(n, d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) c(i, j) = rng.normal(src.mean[j], src.stddev[j]);
  return c;
}

Matrix shuffle_anchor_batch(const Matrix& node_matrix, Rng& rng) {
  if (node_matrix.rows == 0) throw std::invalid_argument("shuffle_anchor_batch: empty matrix");
  const auto perm = rng.permutation(node_matrix.rows);
  Matrix out(node_matrix.rows, node_matrix.cols, 0.0);
  for (std::size_t i = 0; i < node_matrix.rows; ++i)
    for (std::size_t j = 0; j < node_matrix.cols; ++j) out(i, j) = node_matrix(perm[i], j);
  return out;
}

AnchorSource build_frozen_anchor_set(const ModelSpec& spec, const Params& params,
                                     const std::vector<Graph>& id_val, int k, Rng& rng,
                                     AnchoringMode::Kind mode) {
  if (id_val.empty()) throw DataError("build_frozen_anchor_set: empty validation set");
  if (mode != AnchoringMode::Kind::HiddenLayer && mode != AnchoringMode::Kind::Readout)
    throw std::invalid_argument("build_frozen_anchor_set: mode must be hidden_layer or readout");
  if (k < 1 || static_cast<std::size_t>(k) > id_val.size())
    throw std::invalid_argument("build_frozen_anchor_set: K=" + std::to_string(k) +
                                " exceeds validation size " + std::to_string(id_val.size()) +
                                " (sampling without replacement)");
  const Params frozen_view = detach_params(params);
  const auto perm = rng.permutation(id_val.size());

  AnchorSource src;
  src.kind = AnchorSource::Kind::FrozenSet;
  src.mode = mode;
  src.backbone_fingerprint = fingerprint_params(params, "mp");
  for (int i = 0; i < k; ++i) {
    const Graph& g = id_val[perm[static_cast<std::size_t>(i)]];
    if (mode == AnchoringMode::Kind::Readout) {
      const Tensor pooled = readout_mean(mp_prefix(spec, frozen_view, g, spec.num_mp_layers));
      src.frozen.push_back(pooled.to_matrix());
    } else {
      const Tensor prefix = mp_prefix(spec, frozen_view, g, spec.anchoring.layer - 1);
      src.frozen.push_back(prefix.to_matrix());
    }
  }
  return src;
}

InferenceAnchors draw_inference_anchors(const AnchorSource& src, int k, Rng& rng,
                                        bool per_node_draws) {
  if (k < 1) throw std::invalid_argument("draw_inference_anchors: K must be >= 1");
  InferenceAnchors out;
  out.mode = src.mode;
  if (src.kind == AnchorSource::Kind::Gaussian) {
    const std::size_t d = src.mean.size();
    if (per_node_draws) {
      out.per_node = true;
      out.mean = src.mean;
      out.stddev = src.stddev;
      for (int i = 0; i < k; ++i) out.member_seeds.push_back(rng.next_u64());
      return out;
    }
    for (int i = 0; i < k; ++i) {
      Matrix c(1, d, 0.0);
      for (std::size_t j = 0; j < d; ++j) c(0, j) = rng.normal(src.mean[j], src.stddev[j]);
      out.anchors.push_back(std::move(c));
    }
    return out;
  }
  if (per_node_draws)
    throw std::invalid_argument(
        "draw_inference_anchors: per-node draws apply to Gaussian sources only");
  if (static_cast<std::size_t>(k) > src.frozen.size())
    throw ArtifactError("draw_inference_anchors: K=" + std::to_string(k) +
                        " exceeds stored anchor count " + std::to_string(src.frozen.size()));
  for (int i = 0; i < k; ++i) {
    const Matrix& stored = src.frozen[static_cast<std::size_t>(i)];
    if (src.mode == AnchoringMode::Kind::Readout) {
      out.anchors.push_back(stored);
    } else {
      // One representation row, broadcast downstream; the row is a seeded draw.
      const std::size_t row = rng.uniform_below(stored.rows);
      Matrix c(1, stored.cols, stored.row(row));
      out.anchors.push_back(std::move(c));
    }
  }
  return out;
}

Matrix broadcast_inference_anchor(const InferenceAnchors& anchors, int k, std::size_t n) {
  if (k < 0 || k >= anchors.count())
    throw std::invalid_argument("broadcast_inference_anchor: index " + std::to_string(k) +
                                " out of range [0," + std::to_string(anchors.count()) + ")");
  if (n == 0) throw std::invalid_argument("broadcast_inference_anchor: n must be >= 1");
  if (anchors.per_node) {
    Rng rng(anchors.member_seeds[static_cast<std::size_t>(k)]);
    const std::size_t d = anchors.mean.size();
    Matrix out(n, d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        out(i, j) = rng.normal(anchors.mean[j], anchors.stddev[j]);
    return out;
  }
  const Matrix& c = anchors.anchors[static_cast<std::size_t>(k)];
  Matrix out(n, c.cols, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c.cols; ++j) out(i, j) = c(0, j);
  return out;
}

void verify_anchor_source(const ModelSpec& spec, const Params& params, const AnchorSource& src) {
  if (src.kind != AnchorSource::Kind::FrozenSet) return;
  if (!spec.anchoring.pretrained_frozen_backbone) return;
  if (fingerprint_params(params, "mp") != src.backbone_fingerprint)
    throw ArtifactError(
        "anchor set was built under different backbone parameters; the pretrained-frozen "
        "contract forbids recomputing anchors");
}

EnsemblePrediction aggregate_members(const Matrix& per_anchor_probs) {
  const std::size_t k = per_anchor_probs.rows;
  const std::size_t q = per_anchor_probs.cols;
  if (k == 0 || q == 0) throw std::invalid_argument("aggregate_members: empty member matrix");

  EnsemblePrediction out;
  out.per_anchor_probs = per_anchor_probs;
  out.mu.assign(q, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < q; ++j) out.mu[j] += per_anchor_probs(i, j);
  for (auto& v : out.mu) v /= static_cast<double>(k);

  if (k == 1) {
    out.sigma.assign(q, 0.0);
    out.mu_calib = out.mu;
    return out;
  }

  out.sigma.assign(q, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      const double r = per_anchor_probs(i, j) - out.mu[j];
      out.sigma[j] += r * r;
    }
  for (auto& v : out.sigma) v = std::sqrt(v / static_cast<double>(k - 1));

  out.mu_calib.assign(q, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < q; ++j) {
    out.mu_calib[j] = std::max(0.0, out.mu[j] * (1.0 - out.sigma[j]));
    total += out.mu_calib[j];
  }
  if (total <= 0.0) {
    out.mu_calib = out.mu;  // unreachable with probability-valued members; keep defined
  } else {
    for (auto& v : out.mu_calib) v /= total;
  }
  return out;
}

// ---- training -----------------------------------------------------------------

namespace {

std::vector<int> masked_labels(const Graph& g, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back((*g.node_labels)[i]);
  return out;
}

std::vector<std::size_t> mask_indices(const Graph& g) {
  std::vector<std::size_t> idx;
  if (g.node_mask) {
    idx.reserve(g.node_mask->size());
    for (const int i : *g.node_mask) idx.push_back(static_cast<std::size_t>(i));
  } else {
    idx.resize(g.num_nodes());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  }
  return idx;
}

// Mean cross entropy over per-graph scalar losses, accumulated in batch order.
Tensor mean_loss(const std::vector<Tensor>& losses) {
  Tensor total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = add(total, losses[i]);
  return scale(total, 1.0 / static_cast<double>(losses.size()));
}

// Rows [row_begin, row_begin + n) of the shuffled batch pool.
Matrix slice_rows(const Matrix& pool, std::size_t row_begin, std::size_t n) {
  Matrix out(n, pool.cols, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < pool.cols; ++j) out(i, j) = pool(row_begin + i, j);
  return out;
}

Tensor graph_batch_loss(const ModelSpec& spec, const Params& params,
                        const std::vector<Graph>& graphs,
                        const std::vector<std::size_t>& batch, const AnchorSource* gaussian,
                        Rng& rng) {
  std::vector<Tensor> losses;
  losses.reserve(batch.size());
  switch (spec.anchoring.kind) {
    case AnchoringMode::Kind::None: {
      for (const auto gi : batch) {
        const Graph& g = graphs[gi];
        losses.push_back(softmax_cross_entropy(forward_logits(spec, params, g),
                                               {*g.graph_label}));
      }
      break;
    }
    case AnchoringMode::Kind::NodeFeature: {
      for (const auto gi : batch) {
        const Graph& g = graphs[gi];
        const Matrix c = sample_training_anchors(*gaussian, g.num_nodes(), rng);
        losses.push_back(softmax_cross_entropy(forward_logits(spec, params, g, &c),
                                               {*g.graph_label}));
      }
      break;
    }
    case AnchoringMode::Kind::HiddenLayer: {
      // Shuffle operates on the concatenated node matrix of the whole batch.
      const Params frozen_view = detach_params(params);
      std::size_t total_rows = 0;
      for (const auto gi : batch) total_rows += graphs[gi].num_nodes();
      Matrix pool(total_rows, static_cast<std::size_t>(spec.hidden_dim), 0.0);
      std::size_t row = 0;
      for (const auto gi : batch) {
        const Graph& g = graphs[gi];
        const Matrix p = mp_prefix(spec, frozen_view, g, spec.anchoring.layer - 1).to_matrix();
        for (std::size_t i = 0; i < p.rows; ++i)
          for (std::size_t j = 0; j < p.cols; ++j) pool(row + i, j) = p(i, j);
        row += p.rows;
      }
      const Matrix shuffled = shuffle_anchor_batch(pool, rng);
      row = 0;
      for (const auto gi : batch) {
        const Graph& g = graphs[gi];
        const Matrix c = slice_rows(shuffled, row, g.num_nodes());
        row += g.num_nodes();
        const Tensor prefix = mp_prefix(spec, params, g, spec.anchoring.layer - 1);
        losses.push_back(softmax_cross_entropy(
            forward_from_hidden(spec, params, g, prefix, c), {*g.graph_label}));
      }
      break;
    }
    case AnchoringMode::Kind::Readout: {
      const Params frozen_view = detach_params(params);
      Matrix pool(batch.size(), static_cast<std::size_t>(spec.hidden_dim), 0.0);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const Graph& g = graphs[batch[b]];
        const Tensor pooled =
            readout_mean(mp_prefix(spec, frozen_view, g, spec.num_mp_layers));
        pool.set_row(b, pooled.values());
      }
      const Matrix shuffled = shuffle_anchor_batch(pool, rng);
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const Graph& g = graphs[batch[b]];
        const Matrix c(1, pool.cols, shuffled.row(b));
        losses.push_back(softmax_cross_entropy(forward_logits(spec, params, g, &c),
                                               {*g.graph_label}));
      }
      break;
    }
  }
  return mean_loss(losses);
}

Tensor node_step_loss(const ModelSpec& spec, const Params& params, const Graph& g,
                      const AnchorSource* gaussian, Rng& rng) {
  const auto idx = mask_indices(g);
  const auto labels = masked_labels(g, idx);
  Tensor logits;
  switch (spec.anchoring.kind) {
    case AnchoringMode::Kind::None:
      logits = forward_logits(spec, params, g);
      break;
    case AnchoringMode::Kind::NodeFeature: {
      const Matrix c = sample_training_anchors(*gaussian, g.num_nodes(), rng);
      logits = forward_logits(spec, params, g, &c);
      break;
    }
    case AnchoringMode::Kind::HiddenLayer: {
      const Params frozen_view = detach_params(params);
      const Matrix pool =
          mp_prefix(spec, frozen_view, g, spec.anchoring.layer - 1).to_matrix();
      const Matrix c = shuffle_anchor_batch(pool, rng);
      const Tensor prefix = mp_prefix(spec, params, g, spec.anchoring.layer - 1);
      logits = forward_from_hidden(spec, params, g, prefix, c);
      break;
    }
    case AnchoringMode::Kind::Readout:
      throw ConfigError("train: readout anchoring is incompatible with node classification");
  }
  return softmax_cross_entropy(take_rows(logits, idx), labels);
}

}  // namespace

TrainResult train(const ModelSpec& spec, const DatasetSplits& splits, const TrainConfig& cfg) {
  spec.validate();
  if (spec.task != splits.task)
    throw ConfigError("train: model task does not match dataset task");
  if (splits.train.empty()) throw DataError("train: empty training split");
  if (cfg.epochs < 1 || cfg.batch_size < 1) throw ConfigError("train: bad epochs/batch_size");

  Rng rng(cfg.seed);
  TrainResult result;
  result.params = init_params(spec, rng);

  std::optional<AnchorSource> gaussian;
  if (spec.anchoring.kind == AnchoringMode::Kind::NodeFeature)
    gaussian = fit_node_feature_gaussian(splits.train);

  auto opt_tensors = result.params.tensors();
  AdamState state;

  if (spec.task == TaskKind::GraphClassification) {
    const std::size_t n = splits.train.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const auto order = rng.permutation(n);
      double epoch_loss = 0.0;
      std::size_t pos = 0;
      while (pos < n) {
        const std::size_t end = std::min(pos + static_cast<std::size_t>(cfg.batch_size), n);
        const std::vector<std::size_t> batch(order.begin() + static_cast<long>(pos),
                                             order.begin() + static_cast<long>(end));
        const Tensor loss = graph_batch_loss(spec, result.params, splits.train, batch,
                                             gaussian ? &*gaussian : nullptr, rng);
        zero_grads(opt_tensors);
        backward(loss);
        adam_step(opt_tensors, state, cfg.lr);
        epoch_loss += loss.scalar() * static_cast<double>(batch.size());
        pos = end;
      }
      result.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
    }
  } else {
    const Graph& g = splits.train.front();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const Tensor loss =
          node_step_loss(spec, result.params, g, gaussian ? &*gaussian : nullptr, rng);
      zero_grads(opt_tensors);
      backward(loss);
      adam_step(opt_tensors, state, cfg.lr);
      result.epoch_losses.push_back(loss.scalar());
    }
  }

  if (spec.anchoring.kind == AnchoringMode::Kind::NodeFeature) {
    result.source = std::move(*gaussian);
  } else if (spec.anchoring.kind == AnchoringMode::Kind::HiddenLayer ||
             spec.anchoring.kind == AnchoringMode::Kind::Readout) {
    Rng anchor_rng = rng.derive("frozen-anchors");
    result.source = build_frozen_anchor_set(spec, result.params, splits.id_val,
                                            spec.anchoring.num_anchors, anchor_rng,
                                            spec.anchoring.kind);
  }
  if (result.source) result.source->rng_seed = cfg.seed;
  return result;
}

TrainResult train_readout_head(const ModelSpec& spec, const Params& backbone,
                               const DatasetSplits& splits, const TrainConfig& cfg) {
  spec.validate();
  if (spec.anchoring.kind != AnchoringMode::Kind::Readout ||
      !spec.anchoring.pretrained_frozen_backbone)
    throw ConfigError("train_readout_head: spec must use readout anchoring with a frozen backbone");
  if (spec.task != splits.task || spec.task != TaskKind::GraphClassification)
    throw ConfigError("train_readout_head: graph classification only");
  if (splits.train.empty()) throw DataError("train_readout_head: empty training split");

  Rng rng(cfg.seed);
  TrainResult result;
  // Frozen backbone copies plus a reinitialized head sized for query/anchor pairs.
  for (const auto& [name, t] : backbone.items)
    if (name.rfind("mp", 0) == 0)
      result.params.items.emplace_back(name,
                                       Tensor::from_data(t.rows(), t.cols(), t.values(), false));
  for (int layer = 1; layer <= spec.mlp_head_layers; ++layer) {
    const auto in = static_cast<std::size_t>(layer == 1 ? spec.head_input_dim() : spec.hidden_dim);
    const auto out = static_cast<std::size_t>(layer == spec.mlp_head_layers ? spec.num_classes
                                                                            : spec.hidden_dim);
    const std::string base = "head" + std::to_string(layer);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<double> w(in * out);
    for (auto& v : w) v = rng.uniform(-limit, limit);
    result.params.items.emplace_back(base + ".w", Tensor::from_data(in, out, std::move(w), true));
    result.params.items.emplace_back(base + ".b", Tensor::zeros(1, out, true));
  }

  // The backbone never changes, so pooled representations are computed once.
  const std::size_t n = splits.train.size();
  Matrix pooled(n, static_cast<std::size_t>(spec.hidden_dim), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    pooled.set_row(i, readout_mean(mp_prefix(spec, result.params, splits.train[i],
                                             spec.num_mp_layers))
                          .values());

  auto opt_tensors = result.params.tensors_with_prefix("head");
  AdamState state;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = rng.permutation(n);
    double epoch_loss = 0.0;
    std::size_t pos = 0;
    while (pos < n) {
      const std::size_t end = std::min(pos + static_cast<std::size_t>(cfg.batch_size), n);
      const std::size_t b = end - pos;
      Matrix pool(b, pooled.cols, 0.0);
      for (std::size_t i = 0; i < b; ++i) pool.set_row(i, pooled.row(order[pos + i]));
      const Matrix shuffled = shuffle_anchor_batch(pool, rng);
      std::vector<Tensor> losses;
      losses.reserve(b);
      for (std::size_t i = 0; i < b; ++i) {
        const Graph& g = splits.train[order[pos + i]];
        const Tensor g_t = Tensor::from_data(1, pooled.cols, pool.row(i), false);
        const Matrix c(1, pooled.cols, shuffled.row(i));
        losses.push_back(softmax_cross_entropy(head_forward_anchored(spec, result.params, g_t, c),
                                               {*g.graph_label}));
      }
      const Tensor loss = mean_loss(losses);
      zero_grads(opt_tensors);
      backward(loss);
      adam_step(opt_tensors, state, cfg.lr);
      epoch_loss += loss.scalar() * static_cast<double>(b);
      pos = end;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }

  Rng anchor_rng = rng.derive("frozen-anchors");
  result.source = build_frozen_anchor_set(spec, result.params, splits.id_val,
                                          spec.anchoring.num_anchors, anchor_rng,
                                          AnchoringMode::Kind::Readout);
  result.source->rng_seed = cfg.seed;
  return result;
}

// ---- inference ------------------------------------------------------------------

namespace {

std::vector<double> softmax_row(const std::vector<double>& logits) {
  double mx = logits[0];
  for (const double v : logits) mx = std::max(mx, v);
  double denom = 0.0;
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    denom += out[i];
  }
  for (auto& v : out) v /= denom;
  return out;
}

// Member probability rows for each prediction unit (1 for graph task, N for
// node task); outer index is the unit, inner matrix is K x q.
std::vector<Matrix> member_probs(const ModelSpec& spec, const Params& params, const Graph& graph,
                                 const InferenceAnchors& anchors) {
  if (spec.anchoring.kind == AnchoringMode::Kind::None || anchors.count() == 0)
    throw std::invalid_argument("infer: anchored inference requires a non-empty anchor cache");
  const Params frozen_view = detach_params(params);
  const std::size_t k = static_cast<std::size_t>(anchors.count());
  const std::size_t units =
      spec.task == TaskKind::GraphClassification ? 1 : graph.num_nodes();
  const std::size_t q = static_cast<std::size_t>(spec.num_classes);
  std::vector<Matrix> probs(units, Matrix(k, q, 0.0));
  for (std::size_t a = 0; a < k; ++a) {
    Matrix operand;
    if (anchors.mode == AnchoringMode::Kind::Readout)
      operand = anchors.anchors[a];
    else
      operand = broadcast_inference_anchor(anchors, static_cast<int>(a), graph.num_nodes());
    const Tensor logits = forward_logits(spec, frozen_view, graph, &operand);
    for (std::size_t u = 0; u < units; ++u) {
      const std::vector<double> unit_logits(
          logits.values().begin() + static_cast<long>(u * q),
          logits.values().begin() + static_cast<long>((u + 1) * q));
      const auto row = softmax_row(unit_logits);
      for (std::size_t j = 0; j < q; ++j) probs[u](a, j) = row[j];
    }
  }
  return probs;
}

}  // namespace

EnsemblePrediction infer_graph(const ModelSpec& spec, const Params& params, const Graph& graph,
                               const InferenceAnchors& anchors) {
  if (spec.task != TaskKind::GraphClassification)
    throw std::invalid_argument("infer_graph: spec is not a graph-classification model");
  return aggregate_members(member_probs(spec, params, graph, anchors).front());
}

std::vector<EnsemblePrediction> infer_nodes(const ModelSpec& spec, const Params& params,
                                            const Graph& graph, const InferenceAnchors& anchors) {
  if (spec.task != TaskKind::NodeClassification)
    throw std::invalid_argument("infer_nodes: spec is not a node-classification model");
  std::vector<EnsemblePrediction> out;
  for (auto& m : member_probs(spec, params, graph, anchors)) out.push_back(aggregate_members(m));
  return out;
}

EnsemblePrediction infer(const ModelSpec& spec, const Params& params, const Graph& graph,
                         const AnchorSource& src, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("infer: K must be >= 1");
  verify_anchor_source(spec, params, src);
  const InferenceAnchors anchors = draw_inference_anchors(src, k, rng);
  return infer_graph(spec, params, graph, anchors);
}

}  // namespace gduq
