#include "gduq/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "gduq/errors.hpp"
#include "json.hpp"

namespace gduq {

std::string to_string(TaskKind t) {
  return t == TaskKind::GraphClassification ? "graph" : "node";
}
std::string to_string(ShiftKind s) {
  switch (s) {
    case ShiftKind::None: return "none";
    case ShiftKind::Size: return "size";
    case ShiftKind::Covariate: return "covariate";
    case ShiftKind::Concept: return "concept";
  }
  return "none";
}
TaskKind task_from_string(const std::string& s) {
  if (s == "graph") return TaskKind::GraphClassification;
  if (s == "node") return TaskKind::NodeClassification;
  throw DataError("unknown task kind '" + s + "'");
}
ShiftKind shift_from_string(const std::string& s) {
  if (s == "none") return ShiftKind::None;
  if (s == "size") return ShiftKind::Size;
  if (s == "covariate") return ShiftKind::Covariate;
  if (s == "concept") return ShiftKind::Concept;
  throw DataError("unknown shift kind '" + s + "'");
}
std::string to_string(BaseStructure b) {
  switch (b) {
    case BaseStructure::Path: return "path";
    case BaseStructure::Cycle: return "cycle";
    case BaseStructure::Tree: return "tree";
    case BaseStructure::Ladder: return "ladder";
  }
  return "path";
}
std::string to_string(MotifKind m) {
  switch (m) {
    case MotifKind::House: return "house";
    case MotifKind::Triangle: return "triangle";
    case MotifKind::Clique4: return "clique4";
    case MotifKind::Star: return "star";
  }
  return "house";
}
BaseStructure base_from_string(const std::string& s) {
  if (s == "path") return BaseStructure::Path;
  if (s == "cycle") return BaseStructure::Cycle;
  if (s == "tree") return BaseStructure::Tree;
  if (s == "ladder") return BaseStructure::Ladder;
  throw ConfigError("unknown base structure '" + s + "'");
}
MotifKind motif_from_string(const std::string& s) {
  if (s == "house") return MotifKind::House;
  if (s == "triangle") return MotifKind::Triangle;
  if (s == "clique4") return MotifKind::Clique4;
  if (s == "star") return MotifKind::Star;
  throw ConfigError("unknown motif '" + s + "'");
}
int motif_size(MotifKind m) {
  switch (m) {
    case MotifKind::House: return 5;
    case MotifKind::Triangle: return 3;
    case MotifKind::Clique4: return 4;
    case MotifKind::Star: return 5;
  }
  return 0;
}

void Graph::validate() const {
  const std::size_t n = node_features.rows;
  if (adjacency.rows != adjacency.cols || adjacency.rows != n)
    throw DataError("graph '" + graph_id + "': adjacency is " +
                    shape_str(adjacency.rows, adjacency.cols) + " for " + std::to_string(n) +
                    " nodes");
  for (const double v : adjacency.data)
    if (v < 0.0 || v > 1.0)
      throw DataError("graph '" + graph_id + "': adjacency entry " + std::to_string(v) +
                      " outside [0,1]");
  if (graph_label.has_value() == node_labels.has_value())
    throw DataError("graph '" + graph_id + "': exactly one of graph_label/node_labels must be set");
  if (node_labels && node_labels->size() != n)
    throw DataError("graph '" + graph_id + "': " + std::to_string(node_labels->size()) +
                    " node labels for " + std::to_string(n) + " nodes");
}

void DatasetSplits::validate() const {
  const auto all = {&train, &id_val, &id_test, &ood_test};
  std::size_t d = 0;
  bool first = true;
  for (const auto* split : all)
    for (const auto& g : *split) {
      g.validate();
      if (first) {
        d = g.feature_dim();
        first = false;
      } else if (g.feature_dim() != d) {
        throw DataError("graph '" + g.graph_id + "': feature dim " +
                        std::to_string(g.feature_dim()) + " != " + std::to_string(d));
      }
      const bool is_graph_task = task == TaskKind::GraphClassification;
      if (is_graph_task != g.graph_label.has_value())
        throw DataError("graph '" + g.graph_id + "': label kind does not match task");
      if (g.graph_label && (*g.graph_label < 0 || *g.graph_label >= num_classes))
        throw DataError("graph '" + g.graph_id + "': label out of range");
      if (g.node_labels)
        for (const int y : *g.node_labels)
          if (y < 0 || y >= num_classes)
            throw DataError("graph '" + g.graph_id + "': node label out of range");
    }
  if (first) throw DataError("no graphs");
  if (shift_kind == ShiftKind::Size && !train.empty() && !ood_test.empty()) {
    std::size_t max_train = 0, min_ood = SIZE_MAX;
    for (const auto& g : train) max_train = std::max(max_train, g.num_nodes());
    for (const auto& g : ood_test) min_ood = std::min(min_ood, g.num_nodes());
    if (max_train >= min_ood)
      throw DataError("size shift violated: max train size " + std::to_string(max_train) +
                      " >= min ood size " + std::to_string(min_ood));
  }
}

void GeneratorConfig::validate() const {
  if (feature_dim < 2) throw ConfigError("generator: feature_dim must be >= 2");
  if (spurious_feature_strength < 0.0 || spurious_feature_strength > 1.0 ||
      ood_spurious_strength < 0.0 || ood_spurious_strength > 1.0)
    throw ConfigError("generator: spurious strengths must lie in [0,1]");
  if (task == TaskKind::GraphClassification) {
    if (num_graphs < 8) throw ConfigError("generator: num_graphs must be >= 8");
    if (base_structures.empty()) throw ConfigError("generator: base_structures is empty");
    int largest = 0;
    for (const auto m : motifs) largest = std::max(largest, motif_size(m));
    if (size_range[0] < largest + 2)
      throw ConfigError("generator: size_range min " + std::to_string(size_range[0]) +
                        " < largest motif size + 2 (" + std::to_string(largest + 2) + ")");
    if (size_range[0] > size_range[1]) throw ConfigError("generator: size_range is inverted");
  } else {
    if (num_graphs < 20) throw ConfigError("generator: node task needs num_graphs (nodes) >= 20");
    if (sbm_p_intra < 0.0 || sbm_p_intra > 1.0 || sbm_p_inter < 0.0 || sbm_p_inter > 1.0)
      throw ConfigError("generator: SBM edge probabilities must lie in [0,1]");
  }
}

namespace {

void add_edge(Matrix& a, std::size_t i, std::size_t j) {
  a(i, j) = 1.0;
  a(j, i) = 1.0;
}

// Base structure on n >= 2 nodes, indices [0, n).
Matrix base_adjacency(BaseStructure kind, std::size_t n, Rng& rng) {
  Matrix a(n, n, 0.0);
  switch (kind) {
    case BaseStructure::Path:
      for (std::size_t i = 0; i + 1 < n; ++i) add_edge(a, i, i + 1);
      break;
    case BaseStructure::Cycle:
      for (std::size_t i = 0; i + 1 < n; ++i) add_edge(a, i, i + 1);
      if (n > 2) add_edge(a, n - 1, 0);
      break;
    case BaseStructure::Tree:
      for (std::size_t i = 1; i < n; ++i) add_edge(a, i, rng.uniform_below(i));
      break;
    case BaseStructure::Ladder: {
      const std::size_t k = n / 2;
      for (std::size_t i = 0; i + 1 < k; ++i) {
        add_edge(a, i, i + 1);
        add_edge(a, k + i, k + i + 1);
      }
      for (std::size_t i = 0; i < k; ++i) add_edge(a, i, k + i);
      if (n % 2 == 1 && n > 1) add_edge(a, n - 1, 0);  // pendant on odd counts
      break;
    }
  }
  return a;
}

// Motif edges with local indices [0, motif_size).
std::vector<std::pair<int, int>> motif_edges(MotifKind m) {
  switch (m) {
    case MotifKind::Triangle: return {{0, 1}, {1, 2}, {2, 0}};
    case MotifKind::Clique4: return {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    case MotifKind::House: return {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 4}, {1, 4}};
    case MotifKind::Star: return {{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  }
  return {};
}

// Spurious channel draw: equals the label with probability `strength`,
// otherwise a uniformly chosen different class.
double spurious_value(int label, int q, double strength, Rng& rng) {
  if (rng.bernoulli(strength)) return static_cast<double>(label);
  if (q < 2) return static_cast<double>(label);
  const int k = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(q - 1)));
  return static_cast<double>(k >= label ? k + 1 : k);
}

Graph make_motif_graph(const GeneratorConfig& cfg, const std::vector<BaseStructure>& bases,
                       int label, double spurious_strength, const std::string& id, Rng& rng) {
  const MotifKind motif = cfg.motifs[static_cast<std::size_t>(label)];
  const int msize = motif_size(motif);
  const int total =
      cfg.size_range[0] +
      static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(cfg.size_range[1] - cfg.size_range[0] + 1)));
  const std::size_t base_n = static_cast<std::size_t>(total - msize);
  const BaseStructure base = bases[rng.uniform_below(bases.size())];

  Matrix a = base_adjacency(base, base_n, rng);
  const std::size_t n = base_n + static_cast<std::size_t>(msize);
  Matrix full(n, n, 0.0);
  for (std::size_t i = 0; i < base_n; ++i)
    for (std::size_t j = 0; j < base_n; ++j) full(i, j) = a(i, j);
  for (const auto& [u, v] : motif_edges(motif))
    add_edge(full, base_n + static_cast<std::size_t>(u), base_n + static_cast<std::size_t>(v));
  const std::size_t attach = rng.uniform_below(base_n);
  add_edge(full, attach, base_n);

  const std::size_t d = static_cast<std::size_t>(cfg.feature_dim);
  Matrix x(n, d, 0.0);
  const double spur = spurious_value(label, static_cast<int>(cfg.motifs.size()),
                                     spurious_strength, rng);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;  // constant channel
    if (d >= 3) {   // scaled degree channel; gives message passing a structural hook
      double deg = 0.0;
      for (std::size_t j = 0; j < n; ++j) deg += full(i, j);
      x(i, 1) = deg / 4.0;
    }
    for (std::size_t c = d >= 3 ? 2 : 1; c + 1 < d; ++c) x(i, c) = rng.normal(0.0, 0.5);
    x(i, d - 1) = spur;  // graph-wide spurious value, last column by convention
  }

  Graph g;
  g.node_features = std::move(x);
  g.adjacency = std::move(full);
  g.graph_label = label;
  g.graph_id = id;
  return g;
}

}  // namespace

DatasetSplits gen_motif_dataset(const GeneratorConfig& cfg) {
  cfg.validate();
  if (cfg.task != TaskKind::GraphClassification)
    throw ConfigError("gen_motif_dataset: task must be graph_classification");
  if (cfg.motifs.size() < 2)
    throw DataError("gen_motif_dataset: need at least 2 motifs for a classification task");
  {
    std::set<MotifKind> uniq(cfg.motifs.begin(), cfg.motifs.end());
    if (uniq.size() != cfg.motifs.size())
      throw ConfigError("gen_motif_dataset: duplicate motifs");
  }
  const int q = static_cast<int>(cfg.motifs.size());

  std::vector<BaseStructure> unique_bases;
  for (const auto b : cfg.base_structures)
    if (std::find(unique_bases.begin(), unique_bases.end(), b) == unique_bases.end())
      unique_bases.push_back(b);
  const bool holdout = unique_bases.size() >= 2;
  std::vector<BaseStructure> id_bases = unique_bases;
  std::vector<BaseStructure> ood_bases = unique_bases;
  if (holdout) {
    ood_bases = {unique_bases.back()};
    id_bases.pop_back();
  }
  if (id_bases.empty())
    throw DataError("gen_motif_dataset: held-out base structure leaves train empty");

  const int n = cfg.num_graphs;
  const int n_train = n / 2;
  const int n_val = n / 5;
  const int n_test = (n - n_train - n_val) / 2;
  const int n_ood = n - n_train - n_val - n_test;
  if (n_train < q)
    throw DataError("gen_motif_dataset: train split (" + std::to_string(n_train) +
                    ") smaller than class count " + std::to_string(q));
  if (n_val < 1 || n_test < 1 || n_ood < 1)
    throw DataError("gen_motif_dataset: num_graphs too small for all four splits");

  const bool concept_shift = cfg.spurious_feature_strength != cfg.ood_spurious_strength;

  DatasetSplits out;
  out.task = TaskKind::GraphClassification;
  out.num_classes = q;
  out.shift_kind = concept_shift ? ShiftKind::Concept
                                 : (holdout ? ShiftKind::Covariate : ShiftKind::None);

  Rng rng(cfg.seed);
  const auto fill = [&](std::vector<Graph>& split, int count, const char* role,
                        const std::vector<BaseStructure>& bases, double strength) {
    for (int i = 0; i < count; ++i) {
      const int label = i % q;
      split.push_back(make_motif_graph(cfg, bases, label, strength,
                                       std::string(role) + "-" + std::to_string(i), rng));
    }
  };
  fill(out.train, n_train, "train", id_bases, cfg.spurious_feature_strength);
  fill(out.id_val, n_val, "id_val", id_bases, cfg.spurious_feature_strength);
  fill(out.id_test, n_test, "id_test", id_bases, cfg.spurious_feature_strength);
  fill(out.ood_test, n_ood, "ood_test", ood_bases, cfg.ood_spurious_strength);
  out.validate();
  return out;
}

namespace {

// Nearest-rank quantile of sorted values: the ceil(p*n)-th smallest.
std::size_t nearest_rank_value(const std::vector<std::size_t>& sorted, double p) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  rank = std::max<std::size_t>(1, std::min(rank, n));
  return sorted[rank - 1];
}

}  // namespace

DatasetSplits make_size_shift_splits(std::vector<Graph> graphs, double train_q, double test_q,
                                     std::uint64_t shuffle_seed) {
  if (graphs.size() < 10) throw DataError("make_size_shift_splits: need at least 10 graphs");
  if (!(0.0 < train_q && train_q < test_q && test_q < 1.0))
    throw std::invalid_argument("make_size_shift_splits: need 0 < train_q < test_q < 1 (got " +
                                std::to_string(train_q) + ", " + std::to_string(test_q) + ")");

  std::vector<std::size_t> sizes;
  sizes.reserve(graphs.size());
  for (const auto& g : graphs) sizes.push_back(g.num_nodes());
  std::sort(sizes.begin(), sizes.end());
  const std::size_t train_thr = nearest_rank_value(sizes, train_q);
  const std::size_t test_thr = nearest_rank_value(sizes, test_q);
  if (train_thr >= test_thr)
    throw DataError("make_size_shift_splits: size quantiles coincide (" +
                    std::to_string(train_thr) + "); ood_test would overlap train");

  DatasetSplits out;
  out.shift_kind = ShiftKind::Size;
  std::vector<Graph> middle;
  int max_label = -1;
  bool node_task = false;
  for (auto& g : graphs) {
    if (g.graph_label) max_label = std::max(max_label, *g.graph_label);
    if (g.node_labels) node_task = true;
    const std::size_t n = g.num_nodes();
    if (n <= train_thr)
      out.train.push_back(std::move(g));
    else if (n >= test_thr)
      out.ood_test.push_back(std::move(g));
    else
      middle.push_back(std::move(g));
  }
  if (out.train.empty() || out.ood_test.empty())
    throw DataError("make_size_shift_splits: empty train or ood_test split");

  Rng rng(shuffle_seed);
  rng.shuffle(middle);
  const std::size_t n_val = (middle.size() + 1) / 2;
  for (std::size_t i = 0; i < middle.size(); ++i)
    (i < n_val ? out.id_val : out.id_test).push_back(std::move(middle[i]));

  out.task = node_task ? TaskKind::NodeClassification : TaskKind::GraphClassification;
  out.num_classes = max_label + 1;
  out.validate();
  return out;
}

DatasetSplits gen_node_dataset(const GeneratorConfig& cfg) {
  cfg.validate();
  if (cfg.task != TaskKind::NodeClassification)
    throw ConfigError("gen_node_dataset: task must be node_classification");
  if (cfg.feature_dim < 2) throw ConfigError("gen_node_dataset: feature_dim must be >= 2");

  const std::size_t n = static_cast<std::size_t>(cfg.num_graphs);
  const std::size_t d = static_cast<std::size_t>(cfg.feature_dim);
  constexpr int kClasses = 2;
  constexpr double kClassMean = 1.0;  // channel 0 means at -1 / +1, unit variance

  Rng rng(cfg.seed);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i < n / 2 ? 0 : 1;

  Matrix a(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? cfg.sbm_p_intra : cfg.sbm_p_inter;
      if (rng.bernoulli(p)) add_edge(a, i, j);
    }

  const auto perm = rng.permutation(n);
  const std::size_t n_train = n / 2, n_val = n / 5, n_test = (n - n_train - n_val) / 2;
  std::vector<std::vector<int>> masks(4);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t role = i < n_train                    ? 0
                             : i < n_train + n_val          ? 1
                             : i < n_train + n_val + n_test ? 2
                                                            : 3;
    masks[role].push_back(static_cast<int>(perm[i]));
  }
  for (auto& m : masks) std::sort(m.begin(), m.end());
  std::vector<int> role_of(n, 0);
  for (int r = 0; r < 4; ++r)
    for (const int idx : masks[static_cast<std::size_t>(r)]) role_of[static_cast<std::size_t>(idx)] = r;

  Matrix x(n, d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool ood = role_of[i] == 3;
    x(i, 0) = rng.normal(labels[i] == 0 ? -kClassMean : kClassMean, 1.0);
    if (ood) x(i, 0) += cfg.ood_mean_shift;
    for (std::size_t c = 1; c + 1 < d; ++c) x(i, c) = rng.normal(0.0, 1.0);
    const double strength = ood ? cfg.ood_spurious_strength : cfg.spurious_feature_strength;
    x(i, d - 1) = spurious_value(labels[i], kClasses, strength, rng);
  }

  Graph base;
  base.node_features = std::move(x);
  base.adjacency = std::move(a);
  base.node_labels = labels;
  base.graph_id = "sbm-0";

  const bool concept_shift = cfg.spurious_feature_strength != cfg.ood_spurious_strength;
  DatasetSplits out;
  out.task = TaskKind::NodeClassification;
  out.num_classes = kClasses;
  out.shift_kind = concept_shift ? ShiftKind::Concept
                                 : (cfg.ood_mean_shift != 0.0 ? ShiftKind::Covariate
                                                              : ShiftKind::None);
  const char* roles[4] = {"train", "id_val", "id_test", "ood_test"};
  std::vector<Graph>* splits[4] = {&out.train, &out.id_val, &out.id_test, &out.ood_test};
  for (int r = 0; r < 4; ++r) {
    Graph g = base;
    g.node_mask = masks[static_cast<std::size_t>(r)];
    g.graph_id = std::string("sbm-") + roles[r];
    splits[static_cast<std::size_t>(r)]->push_back(std::move(g));
  }
  out.validate();
  return out;
}

// ---- serialization ----------------------------------------------------------

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const ordered_json& j, const char* field) {
  if (!j.is_array()) throw DataError(std::string("field '") + field + "' is not an array");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  if (rows > 0) cols = j[0].size();
  Matrix m(rows, cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols)
      throw DataError(std::string("field '") + field + "' row " + std::to_string(i) +
                      " has ragged length");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

}  // namespace

void save_dataset(const DatasetSplits& splits, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("save_dataset: cannot open '" + path + "' for writing");
  const auto write_split = [&](const std::vector<Graph>& graphs, const char* tag) {
    for (const auto& g : graphs) {
      ordered_json line;
      line["split"] = tag;
      line["id"] = g.graph_id;
      line["x"] = matrix_to_json(g.node_features);
      line["a"] = matrix_to_json(g.adjacency);
      if (g.graph_label)
        line["y"] = *g.graph_label;
      else
        line["y"] = *g.node_labels;
      if (g.node_mask) line["mask_role"] = *g.node_mask;
      line["task"] = to_string(splits.task);
      line["q"] = splits.num_classes;
      line["shift"] = to_string(splits.shift_kind);
      out << line.dump() << "\n";
    }
  };
  write_split(splits.train, "train");
  write_split(splits.id_val, "id_val");
  write_split(splits.id_test, "id_test");
  write_split(splits.ood_test, "ood_test");
  if (!out) throw DataError("save_dataset: write to '" + path + "' failed");
}

DatasetSplits load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_dataset: cannot open '" + path + "'");
  DatasetSplits out;
  std::string line;
  std::size_t line_no = 0;
  bool have_meta = false;
  std::size_t feature_dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("load_dataset: line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto at = [&](const char* key) -> const ordered_json& {
      if (!j.contains(key))
        throw DataError("load_dataset: line " + std::to_string(line_no) + ": missing field '" +
                        key + "'");
      return j.at(key);
    };
    try {
      Graph g;
      g.graph_id = at("id").get<std::string>();
      g.node_features = matrix_from_json(at("x"), "x");
      g.adjacency = matrix_from_json(at("a"), "a");
      const TaskKind task = task_from_string(at("task").get<std::string>());
      const int q = at("q").get<int>();
      const ShiftKind shift = shift_from_string(at("shift").get<std::string>());
      if (task == TaskKind::GraphClassification)
        g.graph_label = at("y").get<int>();
      else
        g.node_labels = at("y").get<std::vector<int>>();
      if (j.contains("mask_role")) g.node_mask = j.at("mask_role").get<std::vector<int>>();

      if (!have_meta) {
        out.task = task;
        out.num_classes = q;
        out.shift_kind = shift;
        feature_dim = g.feature_dim();
        have_meta = true;
      } else {
        if (task != out.task || q != out.num_classes || shift != out.shift_kind)
          throw DataError("inconsistent task/q/shift metadata");
        if (g.feature_dim() != feature_dim)
          throw DataError("feature dim " + std::to_string(g.feature_dim()) +
                          " != " + std::to_string(feature_dim));
      }

      const std::string split = at("split").get<std::string>();
      if (split == "train")
        out.train.push_back(std::move(g));
      else if (split == "id_val")
        out.id_val.push_back(std::move(g));
      else if (split == "id_test")
        out.id_test.push_back(std::move(g));
      else if (split == "ood_test")
        out.ood_test.push_back(std::move(g));
      else
        throw DataError("unknown split tag '" + split + "'");
    } catch (const DataError& e) {
      const std::string what = e.what();
      if (what.rfind("load_dataset:", 0) == 0) throw;
      throw DataError("load_dataset: line " + std::to_string(line_no) + ": " + what);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("load_dataset: line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_meta) throw DataError("load_dataset: no graphs");
  out.validate();
  return out;
}

}  // namespace gduq
