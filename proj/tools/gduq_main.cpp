#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gduq/errors.hpp"
#include "gduq/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitArtifact = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anchored-GNN uncertainty experiments: generate data, train, evaluate"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, data_path, out_path, ckpt_dir;
  int jobs = 1;
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress progress output");

  auto* gen = app.add_subcommand("gen", "generate a dataset file from a config");
  gen->fallthrough();
  gen->add_option("--config", config_path, "experiment config (JSON)")->required();
  gen->add_option("--out", out_path, "output dataset path (line-delimited JSON)")->required();

  auto* train = app.add_subcommand("train", "train every (method, seed) cell in the config");
  train->fallthrough();
  train->add_option("--config", config_path, "experiment config (JSON)")->required();
  train->add_option("--data", data_path, "dataset file")->required();
  train->add_option("--out", ckpt_dir, "checkpoint output directory")->required();

  auto* eval = app.add_subcommand("eval", "evaluate checkpoints; writes report JSON and CSV");
  eval->fallthrough();
  eval->add_option("--config", config_path, "experiment config (JSON)")->required();
  eval->add_option("--data", data_path, "dataset file")->required();
  eval->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();
  eval->add_option("--out", out_path, "report output path (JSON; CSV written alongside)")
      ->required();
  eval->add_option("--jobs", jobs, "parallel (method, seed) cells")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep-anchor-layer",
                                   "train hidden-layer variants at every depth plus readout and "
                                   "vanilla; writes a tidy CSV");
  sweep->fallthrough();
  sweep->add_option("--config", config_path, "experiment config (JSON)")->required();
  sweep->add_option("--data", data_path, "dataset file")->required();
  sweep->add_option("--out", out_path, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      gduq::cmd_gen(config_path, out_path, quiet);
    } else if (train->parsed()) {
      gduq::cmd_train(config_path, data_path, ckpt_dir, quiet);
    } else if (eval->parsed()) {
      gduq::cmd_eval(config_path, data_path, ckpt_dir, out_path, jobs, quiet);
    } else if (sweep->parsed()) {
      gduq::cmd_sweep_anchor_layer(config_path, data_path, out_path, quiet);
    }
  } catch (const gduq::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gduq::ArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitArtifact;
  } catch (const gduq::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
