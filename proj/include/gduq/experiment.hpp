#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gduq/anchoring.hpp"
#include "gduq/graph.hpp"
#include "gduq/model.hpp"

#include "json.hpp"

namespace gduq {

struct MethodSpec {
  enum class Kind {
    Vanilla,
    GduqNfa,
    GduqHidden,
    GduqReadout,
    GduqReadoutPretrained,
    DeepEnsemble,
  };
  Kind kind = Kind::Vanilla;
  int layer = 2;          // GduqHidden
  int ensemble_size = 0;  // DeepEnsemble

  std::string name() const;       // config-file form, e.g. "gduq_hidden:2"
  std::string file_stem() const;  // checkpoint-friendly form, e.g. "gduq_hidden2"
  bool is_gduq() const;
  static MethodSpec parse(const std::string& s);
};

struct ExperimentConfig {
  // dataset section: either a generator or a pre-built file given on the CLI
  std::string generator;  // "motif" | "motif_size" | "node_sbm"
  GeneratorConfig gen;
  double size_train_q = 0.5;
  double size_test_q = 0.9;

  ModelSpec model;  // anchoring fields are filled in per method at run time

  // train section
  int epochs = 50;
  int batch_size = 32;
  double lr = 1e-3;
  std::vector<std::uint64_t> seeds;

  std::vector<MethodSpec> methods;
  std::vector<std::string> posthoc;  // "none" | "temperature" | "vector"

  // eval section
  int eval_k = 10;
  int n_bins = 15;
  std::uint64_t eval_seed = 0;
  // Node-feature anchoring only: draw a fresh anchor per node at inference
  // instead of broadcasting one vector per anchor index.
  bool per_node_anchor_draws = false;

  static ExperimentConfig from_json(const nlohmann::ordered_json& j);
  static ExperimentConfig from_file(const std::string& path);
  void validate() const;
};

// Dataset construction per the config's generator kind.
DatasetSplits generate_dataset(const ExperimentConfig& cfg);

// Model spec for one method (anchoring mode, layer, anchor count).
ModelSpec method_model_spec(const ExperimentConfig& cfg, const MethodSpec& method);

// Mean of member probability vectors; the deep-ensemble reduction.
std::vector<double> mean_member_probs(const std::vector<std::vector<double>>& members);

// Evaluation report as JSON (rows + per-method aggregates); deterministic for
// fixed inputs regardless of `jobs`.
nlohmann::ordered_json build_eval_report(const ExperimentConfig& cfg, const DatasetSplits& data,
                                         const std::string& ckpt_dir,
                                         const std::string& dataset_label, int jobs);

// True when `report` matches the v1 schema; on failure `why` names the issue.
bool validate_report(const nlohmann::ordered_json& report, std::string* why = nullptr);

void write_report(const nlohmann::ordered_json& report, const std::string& out_path);

// CLI entry points (also usable from tests). All are deterministic given the
// config; `jobs` only changes scheduling.
void cmd_gen(const std::string& config_path, const std::string& out_path, bool quiet);
void cmd_train(const std::string& config_path, const std::string& dataset_path,
               const std::string& out_dir, bool quiet);
void cmd_eval(const std::string& config_path, const std::string& dataset_path,
              const std::string& ckpt_dir, const std::string& out_path, int jobs, bool quiet);
void cmd_sweep_anchor_layer(const std::string& config_path, const std::string& dataset_path,
                            const std::string& out_path, bool quiet);

// Shared by cmd_train and tests: trains one (method, seed) cell and writes its
// checkpoint(s) under out_dir; returns the checkpoint prefixes written.
std::vector<std::string> train_method_cell(const ExperimentConfig& cfg, const DatasetSplits& data,
                                           const MethodSpec& method, std::uint64_t seed,
                                           const std::string& out_dir);

std::string checkpoint_prefix(const std::string& out_dir, const MethodSpec& method,
                              std::uint64_t seed);

}  // namespace gduq
