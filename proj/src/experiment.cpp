#include "gduq/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include "gduq/checkpoint.hpp"
#include "gduq/errors.hpp"
#include "gduq/metrics.hpp"
#include "gduq/posthoc.hpp"

namespace gduq {

using ordered_json = nlohmann::ordered_json;

// ---- method specs -------------------------------------------------------------

std::string MethodSpec::name() const {
  switch (kind) {
    case Kind::Vanilla: return "vanilla";
    case Kind::GduqNfa: return "gduq_nfa";
    case Kind::GduqHidden: return "gduq_hidden:" + std::to_string(layer);
    case Kind::GduqReadout: return "gduq_readout";
    case Kind::GduqReadoutPretrained: return "gduq_readout_pretrained";
    case Kind::DeepEnsemble: return "deep_ensemble:" + std::to_string(ensemble_size);
  }
  return "vanilla";
}

std::string MethodSpec::file_stem() const {
  switch (kind) {
    case Kind::GduqHidden: return "gduq_hidden" + std::to_string(layer);
    case Kind::DeepEnsemble: return "deep_ensemble" + std::to_string(ensemble_size);
    default: return name();
  }
}

bool MethodSpec::is_gduq() const {
  return kind == Kind::GduqNfa || kind == Kind::GduqHidden || kind == Kind::GduqReadout ||
         kind == Kind::GduqReadoutPretrained;
}

MethodSpec MethodSpec::parse(const std::string& s) {
  MethodSpec m;
  const auto colon = s.find(':');
  const std::string head = colon == std::string::npos ? s : s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  const auto parse_int = [&](const char* what) {
    if (arg.empty()) throw ConfigError("config: method '" + s + "' needs " + what);
    try {
      return std::stoi(arg);
    } catch (const std::exception&) {
      throw ConfigError("config: method '" + s + "' has a bad " + what);
    }
  };
  if (head == "vanilla") {
    m.kind = Kind::Vanilla;
  } else if (head == "gduq_nfa") {
    m.kind = Kind::GduqNfa;
  } else if (head == "gduq_hidden") {
    m.kind = Kind::GduqHidden;
    m.layer = parse_int("a layer index (gduq_hidden:<r>)");
  } else if (head == "gduq_readout") {
    m.kind = Kind::GduqReadout;
  } else if (head == "gduq_readout_pretrained") {
    m.kind = Kind::GduqReadoutPretrained;
  } else if (head == "deep_ensemble") {
    m.kind = Kind::DeepEnsemble;
    m.ensemble_size = parse_int("a member count (deep_ensemble:<M>)");
  } else {
    throw ConfigError("config: unknown method '" + s + "'");
  }
  return m;
}

// ---- config parsing -------------------------------------------------------------

namespace {

const ordered_json& require(const ordered_json& j, const std::string& section,
                            const std::string& key) {
  if (!j.contains(key))
    throw ConfigError("config: missing field '" + (section.empty() ? key : section + "." + key) +
                      "'");
  return j.at(key);
}

template <typename T>
T get_field(const ordered_json& j, const std::string& section, const std::string& key) {
  try {
    return require(j, section, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: field '" + (section.empty() ? key : section + "." + key) +
                      "' has the wrong type");
  }
}

template <typename T>
T get_or(const ordered_json& j, const std::string& section, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return get_field<T>(j, section, key);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const ordered_json& j) {
  ExperimentConfig cfg;
  const auto& ds = require(j, "", "dataset");
  cfg.generator = get_field<std::string>(ds, "dataset", "generator");
  cfg.gen.task = task_from_string(get_or<std::string>(ds, "dataset", "task", "graph"));
  cfg.gen.num_graphs = get_field<int>(ds, "dataset", "num_graphs");
  cfg.gen.feature_dim = get_field<int>(ds, "dataset", "feature_dim");
  cfg.gen.seed = get_field<std::uint64_t>(ds, "dataset", "seed");
  cfg.gen.spurious_feature_strength =
      get_or<double>(ds, "dataset", "spurious_feature_strength", 0.0);
  cfg.gen.ood_spurious_strength =
      get_or<double>(ds, "dataset", "ood_spurious_strength", cfg.gen.spurious_feature_strength);
  if (cfg.gen.task == TaskKind::GraphClassification) {
    for (const auto& b : require(ds, "dataset", "base_structures"))
      cfg.gen.base_structures.push_back(base_from_string(b.get<std::string>()));
    for (const auto& m : require(ds, "dataset", "motifs"))
      cfg.gen.motifs.push_back(motif_from_string(m.get<std::string>()));
    const auto& sr = require(ds, "dataset", "size_range");
    if (!sr.is_array() || sr.size() != 2)
      throw ConfigError("config: field 'dataset.size_range' must be [min, max]");
    cfg.gen.size_range = {sr[0].get<int>(), sr[1].get<int>()};
  } else {
    cfg.gen.ood_mean_shift = get_or<double>(ds, "dataset", "ood_mean_shift", 0.0);
    cfg.gen.sbm_p_intra = get_or<double>(ds, "dataset", "sbm_p_intra", cfg.gen.sbm_p_intra);
    cfg.gen.sbm_p_inter = get_or<double>(ds, "dataset", "sbm_p_inter", cfg.gen.sbm_p_inter);
  }
  cfg.size_train_q = get_or<double>(ds, "dataset", "train_q", 0.5);
  cfg.size_test_q = get_or<double>(ds, "dataset", "test_q", 0.9);

  const auto& mj = require(j, "", "model");
  cfg.model.backbone = backbone_from_string(get_field<std::string>(mj, "model", "backbone"));
  cfg.model.num_mp_layers = get_field<int>(mj, "model", "num_mp_layers");
  cfg.model.hidden_dim = get_field<int>(mj, "model", "hidden_dim");
  cfg.model.mlp_head_layers = get_field<int>(mj, "model", "mlp_head_layers");
  cfg.model.num_classes = get_field<int>(mj, "model", "num_classes");
  cfg.model.task = task_from_string(get_field<std::string>(mj, "model", "task"));
  cfg.model.input_dim = get_field<int>(mj, "model", "input_dim");

  const auto& tj = require(j, "", "train");
  cfg.epochs = get_field<int>(tj, "train", "epochs");
  cfg.batch_size = get_field<int>(tj, "train", "batch_size");
  cfg.lr = get_field<double>(tj, "train", "lr");
  cfg.seeds = get_field<std::vector<std::uint64_t>>(tj, "train", "seeds");

  for (const auto& m : require(j, "", "methods"))
    cfg.methods.push_back(MethodSpec::parse(m.get<std::string>()));
  cfg.posthoc = get_or<std::vector<std::string>>(j, "", "posthoc", {"none"});

  const auto& ej = require(j, "", "eval");
  cfg.eval_k = get_or<int>(ej, "eval", "k", 10);
  cfg.n_bins = get_or<int>(ej, "eval", "n_bins", 15);
  cfg.eval_seed = get_or<std::uint64_t>(ej, "eval", "seed", 0);
  cfg.per_node_anchor_draws = get_or<bool>(ej, "eval", "per_node_anchor_draws", false);

  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::validate() const {
  if (generator != "motif" && generator != "motif_size" && generator != "node_sbm")
    throw ConfigError("config: dataset.generator must be motif, motif_size, or node_sbm");
  if (seeds.empty()) throw ConfigError("config: train.seeds must be nonempty");
  if (methods.empty()) throw ConfigError("config: methods must be nonempty");
  for (const auto& m : methods)
    if (m.kind == MethodSpec::Kind::DeepEnsemble && m.ensemble_size < 2)
      throw ConfigError("config: deep_ensemble needs M >= 2");
  for (const auto& p : posthoc)
    if (p != "none" && p != "temperature" && p != "vector")
      throw ConfigError("config: unknown posthoc method '" + p + "'");
  if (eval_k < 1) throw ConfigError("config: eval.k must be >= 1");
  if (n_bins < 1) throw ConfigError("config: eval.n_bins must be >= 1");
  if (epochs < 1 || batch_size < 1) throw ConfigError("config: bad train.epochs/batch_size");
}

DatasetSplits generate_dataset(const ExperimentConfig& cfg) {
  if (cfg.generator == "motif") return gen_motif_dataset(cfg.gen);
  if (cfg.generator == "node_sbm") return gen_node_dataset(cfg.gen);
  // motif_size: pool the generated graphs, then re-split by node count.
  DatasetSplits pool = gen_motif_dataset(cfg.gen);
  std::vector<Graph> graphs;
  for (auto* split : {&pool.train, &pool.id_val, &pool.id_test, &pool.ood_test})
    for (auto& g : *split) graphs.push_back(std::move(g));
  return make_size_shift_splits(std::move(graphs), cfg.size_train_q, cfg.size_test_q,
                                Rng::mix(cfg.gen.seed, 0x5e));
}

ModelSpec method_model_spec(const ExperimentConfig& cfg, const MethodSpec& method) {
  ModelSpec spec = cfg.model;
  spec.anchoring = AnchoringMode{};
  spec.anchoring.num_anchors = cfg.eval_k;
  switch (method.kind) {
    case MethodSpec::Kind::Vanilla:
    case MethodSpec::Kind::DeepEnsemble:
      spec.anchoring.kind = AnchoringMode::Kind::None;
      break;
    case MethodSpec::Kind::GduqNfa:
      spec.anchoring.kind = AnchoringMode::Kind::NodeFeature;
      break;
    case MethodSpec::Kind::GduqHidden:
      spec.anchoring.kind = AnchoringMode::Kind::HiddenLayer;
      spec.anchoring.layer = method.layer;
      break;
    case MethodSpec::Kind::GduqReadout:
      spec.anchoring.kind = AnchoringMode::Kind::Readout;
      break;
    case MethodSpec::Kind::GduqReadoutPretrained:
      spec.anchoring.kind = AnchoringMode::Kind::Readout;
      spec.anchoring.pretrained_frozen_backbone = true;
      break;
  }
  return spec;
}

std::vector<double> mean_member_probs(const std::vector<std::vector<double>>& members) {
  if (members.empty()) throw std::invalid_argument("mean_member_probs: no members");
  std::vector<double> out(members.front().size(), 0.0);
  for (const auto& m : members)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += m[j];
  for (auto& v : out) v /= static_cast<double>(members.size());
  return out;
}

// ---- training cells --------------------------------------------------------------

std::string checkpoint_prefix(const std::string& out_dir, const MethodSpec& method,
                              std::uint64_t seed) {
  return out_dir + "/" + method.file_stem() + "_s" + std::to_string(seed);
}

namespace {

void check_dataset_model(const ExperimentConfig& cfg, const DatasetSplits& data) {
  if (data.task != cfg.model.task)
    throw DataError("dataset task " + to_string(data.task) + " does not match model task " +
                    to_string(cfg.model.task));
  if (data.num_classes != cfg.model.num_classes)
    throw DataError("dataset has " + std::to_string(data.num_classes) + " classes, model expects " +
                    std::to_string(cfg.model.num_classes));
  const std::size_t d = data.train.empty() ? 0 : data.train.front().feature_dim();
  if (d != static_cast<std::size_t>(cfg.model.input_dim))
    throw DataError("dataset feature dim " + std::to_string(d) + " does not match model input_dim " +
                    std::to_string(cfg.model.input_dim));
}

}  // namespace

std::vector<std::string> train_method_cell(const ExperimentConfig& cfg, const DatasetSplits& data,
                                           const MethodSpec& method, std::uint64_t seed,
                                           const std::string& out_dir) {
  check_dataset_model(cfg, data);
  const TrainConfig tc{cfg.epochs, cfg.batch_size, cfg.lr, seed};
  std::vector<std::string> written;

  if (method.kind == MethodSpec::Kind::DeepEnsemble) {
    ModelSpec spec = method_model_spec(cfg, method);
    for (int m = 0; m < method.ensemble_size; ++m) {
      TrainConfig member_tc = tc;
      member_tc.seed = Rng::mix(seed, static_cast<std::uint64_t>(m) + 1);
      const TrainResult r = train(spec, data, member_tc);
      const std::string prefix =
          checkpoint_prefix(out_dir, method, seed) + "_m" + std::to_string(m);
      save_checkpoint(prefix, spec, r.params, nullptr);
      written.push_back(prefix);
    }
    return written;
  }

  if (method.kind == MethodSpec::Kind::GduqReadoutPretrained) {
    ModelSpec backbone_spec = cfg.model;
    backbone_spec.anchoring = AnchoringMode{};
    backbone_spec.anchoring.kind = AnchoringMode::Kind::None;
    const TrainResult backbone = train(backbone_spec, data, tc);
    const std::string backbone_prefix = checkpoint_prefix(out_dir, method, seed) + ".backbone";
    save_checkpoint(backbone_prefix, backbone_spec, backbone.params, nullptr);
    written.push_back(backbone_prefix);

    const ModelSpec spec = method_model_spec(cfg, method);
    const TrainResult r = train_readout_head(spec, backbone.params, data, tc);
    const std::string prefix = checkpoint_prefix(out_dir, method, seed);
    save_checkpoint(prefix, spec, r.params, r.source ? &*r.source : nullptr);
    written.push_back(prefix);
    return written;
  }

  const ModelSpec spec = method_model_spec(cfg, method);
  const TrainResult r = train(spec, data, tc);
  const std::string prefix = checkpoint_prefix(out_dir, method, seed);
  save_checkpoint(prefix, spec, r.params, r.source ? &*r.source : nullptr);
  written.push_back(prefix);
  return written;
}

// ---- evaluation -------------------------------------------------------------------

namespace {

struct SplitOutputs {
  // Per prediction unit: probability vector, "logit" vector for post-hoc
  // fitting, and ground-truth label.
  std::vector<std::vector<double>> probs;
  std::vector<std::vector<double>> logits;
  std::vector<int> labels;
};

std::vector<double> log_probs(const std::vector<double>& p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::log(p[i] + 1e-12);
  return out;
}

std::vector<double> tensor_row(const Tensor& t, std::size_t r) {
  return {t.values().begin() + static_cast<long>(r * t.cols()),
          t.values().begin() + static_cast<long>((r + 1) * t.cols())};
}

std::vector<double> softmax_vec(const std::vector<double>& logits) {
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

// Prediction units of one split: whole graphs for graph tasks, masked nodes
// of the split's single graph for node tasks.
struct UnitRef {
  const Graph* graph;
  std::optional<std::size_t> node;  // node tasks only
  int label;
};

std::vector<UnitRef> split_units(const DatasetSplits& data, const std::vector<Graph>& split) {
  std::vector<UnitRef> units;
  if (data.task == TaskKind::GraphClassification) {
    for (const auto& g : split) units.push_back({&g, std::nullopt, *g.graph_label});
  } else {
    for (const auto& g : split) {
      std::vector<std::size_t> idx;
      if (g.node_mask)
        for (const int i : *g.node_mask) idx.push_back(static_cast<std::size_t>(i));
      else
        for (std::size_t i = 0; i < g.num_nodes(); ++i) idx.push_back(i);
      for (const auto i : idx) units.push_back({&g, i, (*g.node_labels)[i]});
    }
  }
  return units;
}

// One loaded method cell ready to produce outputs.
struct CellModel {
  MethodSpec method;
  std::vector<Checkpoint> members;  // 1 for everything but deep ensembles
  InferenceAnchors anchors;         // gduq methods only
};

CellModel load_cell(const ExperimentConfig& cfg, const MethodSpec& method, std::uint64_t seed,
                    const std::string& ckpt_dir, Rng& rng) {
  CellModel cell;
  cell.method = method;
  const auto load_or_die = [&](const std::string& prefix) {
    try {
      return load_checkpoint(prefix);
    } catch (const ArtifactError&) {
      throw ArtifactError("eval: missing checkpoint for (" + method.name() + ", seed " +
                          std::to_string(seed) + "): " + prefix);
    }
  };
  if (method.kind == MethodSpec::Kind::DeepEnsemble) {
    for (int m = 0; m < method.ensemble_size; ++m)
      cell.members.push_back(
          load_or_die(checkpoint_prefix(ckpt_dir, method, seed) + "_m" + std::to_string(m)));
    return cell;
  }
  cell.members.push_back(load_or_die(checkpoint_prefix(ckpt_dir, method, seed)));
  if (method.is_gduq()) {
    const Checkpoint& ck = cell.members.front();
    if (!ck.source)
      throw ArtifactError("eval: checkpoint for (" + method.name() + ", seed " +
                          std::to_string(seed) + ") carries no anchor source");
    verify_anchor_source(ck.spec, ck.params, *ck.source);
    const bool per_node =
        cfg.per_node_anchor_draws && ck.source->kind == AnchorSource::Kind::Gaussian;
    cell.anchors = draw_inference_anchors(*ck.source, cfg.eval_k, rng, per_node);
  }
  return cell;
}

SplitOutputs compute_outputs(const ExperimentConfig& cfg, const DatasetSplits& data,
                             const CellModel& cell, const std::vector<Graph>& split) {
  SplitOutputs out;
  const auto units = split_units(data, split);
  const bool node_task = data.task == TaskKind::NodeClassification;

  if (cell.method.is_gduq()) {
    const Checkpoint& ck = cell.members.front();
    const Graph* current = nullptr;
    std::vector<EnsemblePrediction> node_preds;
    for (const auto& u : units) {
      std::vector<double> p;
      if (node_task) {
        if (u.graph != current) {
          node_preds = infer_nodes(ck.spec, ck.params, *u.graph, cell.anchors);
          current = u.graph;
        }
        p = node_preds[*u.node].mu_calib;
      } else {
        p = infer_graph(ck.spec, ck.params, *u.graph, cell.anchors).mu_calib;
      }
      out.logits.push_back(log_probs(p));
      out.probs.push_back(std::move(p));
      out.labels.push_back(u.label);
    }
    return out;
  }

  // vanilla / deep ensemble: plain forward per member, averaged in
  // probability space for ensembles.
  std::vector<Params> views;
  for (const auto& ck : cell.members) views.push_back(detach_params(ck.params));
  const Graph* current = nullptr;
  std::vector<Tensor> member_logits;  // per member, N x q (node) or 1 x q (graph)
  for (const auto& u : units) {
    if (u.graph != current) {
      member_logits.clear();
      for (std::size_t m = 0; m < views.size(); ++m)
        member_logits.push_back(
            forward_logits(cell.members[m].spec, views[m], *u.graph, nullptr));
      current = u.graph;
    }
    const std::size_t row = node_task ? *u.node : 0;
    if (cell.members.size() == 1) {
      const auto logits = tensor_row(member_logits[0], row);
      out.probs.push_back(softmax_vec(logits));
      out.logits.push_back(logits);  // raw logits for post-hoc fitting
    } else {
      std::vector<std::vector<double>> members;
      for (const auto& ml : member_logits) members.push_back(softmax_vec(tensor_row(ml, row)));
      auto p = mean_member_probs(members);
      out.logits.push_back(log_probs(p));
      out.probs.push_back(std::move(p));
    }
    out.labels.push_back(u.label);
  }
  return out;
}

struct FittedPosthoc {
  std::string kind;
  TemperatureScaler temp;
  VectorScaler vec;
};

Matrix stack_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  const std::size_t q = rows.empty() ? 0 : rows.front().size();
  Matrix m(n, q, 0.0);
  for (std::size_t i = 0; i < n; ++i) m.set_row(i, rows[i]);
  return m;
}

std::vector<PredictionRecord> make_records(const FittedPosthoc& ph, const SplitOutputs& outputs) {
  std::vector<PredictionRecord> records;
  records.reserve(outputs.labels.size());
  if (ph.kind == "none") {
    for (std::size_t i = 0; i < outputs.labels.size(); ++i)
      records.push_back(make_record(outputs.probs[i], outputs.labels[i]));
    return records;
  }
  const Matrix logits = stack_rows(outputs.logits);
  const Matrix probs = ph.kind == "temperature" ? apply_temperature(ph.temp, logits)
                                                : apply_vector_scaling(ph.vec, logits);
  for (std::size_t i = 0; i < outputs.labels.size(); ++i)
    records.push_back(make_record(probs.row(i), outputs.labels[i]));
  return records;
}

struct CellRows {
  std::vector<ordered_json> rows;
};

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (const double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double sample_mean(const std::vector<double>& v) {
  double mean = 0.0;
  for (const double x : v) mean += x;
  return mean / static_cast<double>(v.size());
}

CellRows eval_cell(const ExperimentConfig& cfg, const DatasetSplits& data,
                   const std::string& ckpt_dir, const MethodSpec& method, std::uint64_t seed) {
  Rng rng(Rng::mix(Rng::mix(cfg.eval_seed, Rng::hash_tag(method.name())), seed));
  const CellModel cell = load_cell(cfg, method, seed, ckpt_dir, rng);

  const SplitOutputs val_out = compute_outputs(cfg, data, cell, data.id_val);
  const SplitOutputs id_out = compute_outputs(cfg, data, cell, data.id_test);
  const SplitOutputs ood_out = compute_outputs(cfg, data, cell, data.ood_test);

  CellRows result;
  for (const auto& ph_kind : cfg.posthoc) {
    FittedPosthoc ph;
    ph.kind = ph_kind;
    if (ph_kind == "temperature")
      ph.temp = fit_temperature(stack_rows(val_out.logits), val_out.labels);
    else if (ph_kind == "vector")
      ph.vec = fit_vector_scaling(stack_rows(val_out.logits), val_out.labels);

    const auto val_records = make_records(ph, val_out);
    const auto id_records = make_records(ph, id_out);
    const auto ood_records = make_records(ph, ood_out);

    const double tau = tune_gep_threshold(val_records);
    std::vector<double> id_scores, ood_scores;
    for (const auto& r : id_records) id_scores.push_back(r.confidence);
    for (const auto& r : ood_records) ood_scores.push_back(r.confidence);
    const double det_auroc = auroc(id_scores, ood_scores);

    const auto emit = [&](const char* split, const std::vector<PredictionRecord>& records) {
      ordered_json row;
      row["method"] = method.name();
      row["seed"] = seed;
      if (ph_kind == "temperature") {
        row["posthoc"] = ordered_json{{"kind", "temperature"}, {"T", ph.temp.temperature}};
      } else if (ph_kind == "vector") {
        row["posthoc"] = ordered_json{{"kind", "vector"}, {"w", ph.vec.w}, {"b", ph.vec.b}};
      } else {
        row["posthoc"] = ordered_json{{"kind", "none"}};
      }
      row["split"] = split;
      row["accuracy"] = accuracy(records);
      row["ece"] = ece(records, cfg.n_bins);
      row["auroc_ood"] = det_auroc;
      row["gep_error"] = gep_error(records, accuracy(records), tau);
      row["n"] = records.size();
      row["n_bins"] = cfg.n_bins;
      row["tau"] = tau;
      result.rows.push_back(std::move(row));
    };
    emit("id_test", id_records);
    emit("ood_test", ood_records);
  }
  return result;
}

}  // namespace

ordered_json build_eval_report(const ExperimentConfig& cfg, const DatasetSplits& data,
                               const std::string& ckpt_dir, const std::string& dataset_label,
                               int jobs) {
  check_dataset_model(cfg, data);
  struct Cell {
    MethodSpec method;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const auto& m : cfg.methods)
    for (const auto s : cfg.seeds) cells.push_back({m, s});

  std::vector<CellRows> results(cells.size());
  std::vector<std::string> errors(cells.size());
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      results[i] = eval_cell(cfg, data, ckpt_dir, cells[i].method, cells[i].seed);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          try {
            results[i] = eval_cell(cfg, data, ckpt_dir, cells[i].method, cells[i].seed);
          } catch (const std::exception& e) {
            errors[i] = e.what();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (!e.empty()) throw ArtifactError(e);
  }

  ordered_json report;
  report["v"] = "v1";
  ordered_json header;
  header["dataset"] = dataset_label;
  header["eval_seed"] = cfg.eval_seed;
  header["k"] = cfg.eval_k;
  header["n_bins"] = cfg.n_bins;
  header["train_seeds"] = cfg.seeds;
  ordered_json method_names = ordered_json::array();
  for (const auto& m : cfg.methods) method_names.push_back(m.name());
  header["methods"] = std::move(method_names);
  header["posthoc"] = cfg.posthoc;
  report["header"] = std::move(header);

  ordered_json rows = ordered_json::array();
  for (const auto& cell : results)
    for (const auto& row : cell.rows) rows.push_back(row);
  report["rows"] = std::move(rows);

  // Aggregates over seeds per (method, posthoc, split).
  ordered_json aggregates = ordered_json::array();
  for (const auto& m : cfg.methods)
    for (const auto& ph : cfg.posthoc)
      for (const char* split : {"id_test", "ood_test"}) {
        std::vector<double> acc, ecev, aur, gep;
        for (const auto& row : report["rows"]) {
          if (row["method"] != m.name() || row["posthoc"]["kind"] != ph ||
              row["split"] != split)
            continue;
          acc.push_back(row["accuracy"].get<double>());
          ecev.push_back(row["ece"].get<double>());
          aur.push_back(row["auroc_ood"].get<double>());
          gep.push_back(row["gep_error"].get<double>());
        }
        if (acc.empty()) continue;
        ordered_json agg;
        agg["method"] = m.name();
        agg["posthoc"] = ph;
        agg["split"] = split;
        agg["accuracy_mean"] = sample_mean(acc);
        agg["accuracy_std"] = sample_std(acc);
        agg["ece_mean"] = sample_mean(ecev);
        agg["ece_std"] = sample_std(ecev);
        agg["auroc_mean"] = sample_mean(aur);
        agg["auroc_std"] = sample_std(aur);
        agg["gep_mean"] = sample_mean(gep);
        agg["gep_std"] = sample_std(gep);
        aggregates.push_back(std::move(agg));
      }
  report["aggregates"] = std::move(aggregates);
  return report;
}

bool validate_report(const ordered_json& report, std::string* why) {
  const auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (!report.is_object()) return fail("report is not an object");
  if (!report.contains("v") || report["v"] != "v1")
    return fail("missing or unsupported version");
  if (!report.contains("header") || !report["header"].is_object()) return fail("missing header");
  for (const char* key : {"dataset", "eval_seed", "k", "n_bins", "train_seeds"})
    if (!report["header"].contains(key)) return fail(std::string("header missing '") + key + "'");
  if (!report.contains("rows") || !report["rows"].is_array()) return fail("missing rows");
  for (const auto& row : report["rows"]) {
    for (const char* key : {"method", "seed", "posthoc", "split", "accuracy", "ece", "auroc_ood",
                            "gep_error", "n", "n_bins", "tau"})
      if (!row.contains(key)) return fail(std::string("row missing '") + key + "'");
    if (!row["posthoc"].is_object() || !row["posthoc"].contains("kind"))
      return fail("row posthoc is not an object with a kind");
    if (!row["accuracy"].is_number() || !row["ece"].is_number() || !row["tau"].is_number())
      return fail("row metric is not numeric");
  }
  if (!report.contains("aggregates") || !report["aggregates"].is_array())
    return fail("missing aggregates");
  return true;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_report(const ordered_json& report, const std::string& out_path) {
  {
    std::ofstream out(out_path);
    if (!out) throw DataError("write_report: cannot open '" + out_path + "'");
    out << report.dump(2) << "\n";
    if (!out) throw DataError("write_report: write failed for '" + out_path + "'");
  }
  const std::string csv_path = out_path + ".csv";
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("write_report: cannot open '" + csv_path + "'");
  csv << "method,seed,posthoc,split,accuracy,ece,auroc_ood,gep_error,n,n_bins,tau\n";
  for (const auto& row : report.at("rows")) {
    csv << row["method"].get<std::string>() << "," << row["seed"].get<std::uint64_t>() << ","
        << row["posthoc"]["kind"].get<std::string>() << "," << row["split"].get<std::string>()
        << ","
        << format_double(row["accuracy"].get<double>()) << ","
        << format_double(row["ece"].get<double>()) << ","
        << format_double(row["auroc_ood"].get<double>()) << ","
        << format_double(row["gep_error"].get<double>()) << "," << row["n"].get<std::size_t>()
        << "," << row["n_bins"].get<int>() << "," << format_double(row["tau"].get<double>())
        << "\n";
  }
  if (!csv) throw DataError("write_report: write failed for '" + csv_path + "'");
}

// ---- CLI commands -----------------------------------------------------------------

void cmd_gen(const std::string& config_path, const std::string& out_path, bool quiet) {
  const ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
  const DatasetSplits data = generate_dataset(cfg);
  save_dataset(data, out_path);
  if (!quiet)
    std::cout << "wrote " << out_path << ": train=" << data.train.size()
              << " id_val=" << data.id_val.size() << " id_test=" << data.id_test.size()
              << " ood_test=" << data.ood_test.size() << " shift=" << to_string(data.shift_kind)
              << "\n";
}

void cmd_train(const std::string& config_path, const std::string& dataset_path,
               const std::string& out_dir, bool quiet) {
  const ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
  const DatasetSplits data = load_dataset(dataset_path);
  for (const auto& method : cfg.methods)
    for (const auto seed : cfg.seeds) {
      const auto written = train_method_cell(cfg, data, method, seed, out_dir);
      if (!quiet)
        for (const auto& w : written) std::cout << "trained " << w << "\n";
    }
}

void cmd_eval(const std::string& config_path, const std::string& dataset_path,
              const std::string& ckpt_dir, const std::string& out_path, int jobs, bool quiet) {
  const ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
  const DatasetSplits data = load_dataset(dataset_path);
  const ordered_json report = build_eval_report(cfg, data, ckpt_dir, dataset_path, jobs);
  std::string why;
  if (!validate_report(report, &why))
    throw DataError("cmd_eval: generated report failed schema validation: " + why);
  write_report(report, out_path);
  if (!quiet)
    std::cout << "wrote " << out_path << " and " << out_path << ".csv ("
              << report.at("rows").size() << " rows)\n";
}

void cmd_sweep_anchor_layer(const std::string& config_path, const std::string& dataset_path,
                            const std::string& out_path, bool quiet) {
  const ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
  const DatasetSplits data = load_dataset(dataset_path);
  check_dataset_model(cfg, data);

  std::vector<MethodSpec> methods;
  methods.push_back(MethodSpec{MethodSpec::Kind::Vanilla});
  if (cfg.model.num_mp_layers < 2)
    std::cerr << "sweep-anchor-layer: warning: model has fewer than 2 message-passing layers; "
                 "emitting only vanilla and readout rows\n";
  for (int r = 2; r <= cfg.model.num_mp_layers; ++r) {
    MethodSpec m;
    m.kind = MethodSpec::Kind::GduqHidden;
    m.layer = r;
    methods.push_back(m);
  }
  methods.push_back(MethodSpec{MethodSpec::Kind::GduqReadout});

  std::ofstream csv(out_path);
  if (!csv) throw DataError("sweep-anchor-layer: cannot open '" + out_path + "'");
  csv << "method,layer,seed,id_accuracy,id_ece,ood_accuracy,ood_ece\n";

  for (const auto seed : cfg.seeds)
    for (const auto& method : methods) {
      const ModelSpec spec = method_model_spec(cfg, method);
      const TrainConfig tc{cfg.epochs, cfg.batch_size, cfg.lr, seed};
      const TrainResult r = train(spec, data, tc);
      Rng rng(Rng::mix(Rng::mix(cfg.eval_seed, Rng::hash_tag(method.name())), seed));

      const auto eval_split = [&](const std::vector<Graph>& split, double* acc, double* e) {
        std::vector<PredictionRecord> records;
        if (method.is_gduq()) {
          const InferenceAnchors anchors = draw_inference_anchors(*r.source, cfg.eval_k, rng);
          for (const auto& g : split)
            records.push_back(
                make_record(infer_graph(spec, r.params, g, anchors).mu_calib, *g.graph_label));
        } else {
          const Params view = detach_params(r.params);
          for (const auto& g : split) {
            const Tensor logits = forward_logits(spec, view, g, nullptr);
            records.push_back(make_record(softmax_vec(tensor_row(logits, 0)), *g.graph_label));
          }
        }
        *acc = accuracy(records);
        *e = ece(records, cfg.n_bins);
      };
      double id_acc = 0, id_ece = 0, ood_acc = 0, ood_ece = 0;
      eval_split(data.id_test, &id_acc, &id_ece);
      eval_split(data.ood_test, &ood_acc, &ood_ece);
      const int layer = method.kind == MethodSpec::Kind::GduqHidden ? method.layer
                        : method.kind == MethodSpec::Kind::GduqReadout
                            ? cfg.model.num_mp_layers + 1
                            : 0;
      csv << method.name() << "," << layer << "," << seed << "," << format_double(id_acc) << ","
          << format_double(id_ece) << "," << format_double(ood_acc) << ","
          << format_double(ood_ece) << "\n";
      if (!quiet)
        std::cout << "sweep " << method.name() << " seed " << seed << ": ood_ece "
                  << format_double(ood_ece) << "\n";
    }
  if (!csv) throw DataError("sweep-anchor-layer: write failed for '" + out_path + "'");
}

}  // namespace gduq
