#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "affect/config.hpp"
#include "affect/error.hpp"
#include "affect/pipeline.hpp"

using namespace affect;

int main(int argc, char** argv) {
  CLI::App app{"Multi-term multi-task affect pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("-c,--config", config_path, "key = value config file")
      ->required();

  std::string split = "val";
  std::string grid_task = "valence";

  app.add_subcommand("synth", "generate a synthetic corpus");
  app.add_subcommand("extract", "window the corpus into feature tables");
  app.add_subcommand("balance", "resample the training split");
  app.add_subcommand("train", "train the stacked ensemble bundle");
  auto* predict = app.add_subcommand("predict", "write prediction CSVs");
  predict->add_option("--split", split, "train or val");
  auto* evaluate = app.add_subcommand("evaluate", "score predictions");
  evaluate->add_option("--split", split, "train or val");
  auto* gridsearch =
      app.add_subcommand("gridsearch", "score the hyperparameter grid");
  gridsearch->add_option("--task", grid_task, "valence|arousal|expression");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig cfg = parse_config(config_path);
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "synth") {
      stage_synth(cfg);
    } else if (command == "extract") {
      stage_extract(cfg);
    } else if (command == "balance") {
      stage_balance(cfg);
    } else if (command == "train") {
      stage_train(cfg);
    } else if (command == "predict") {
      stage_predict(cfg, split);
    } else if (command == "evaluate") {
      stage_evaluate(cfg, split);
    } else if (command == "gridsearch") {
      stage_gridsearch(cfg, task_from_name(grid_task));
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error kind=config message=" << e.what() << "\n";
    return 2;
  } catch (const StageDependencyError& e) {
    std::cerr << "error kind=stage_dependency message=" << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "error kind=data message=" << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error kind=other message=" << e.what() << "\n";
    return 1;
  }
}
