#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "affect/balancing.hpp"
#include "affect/data_model.hpp"
#include "affect/ensemble.hpp"
#include "affect/gbdt.hpp"
#include "affect/synthetic.hpp"
#include "affect/windowing.hpp"

namespace affect {

// Flat key = value config. Unknown keys are errors so typos fail loudly.
struct PipelineConfig {
  // data
  std::string corpus_dir;
  std::string work_dir = "work";
  Schema data_schema = {{{"gaze", 4}, {"head_pose", 4}, {"au_intensity", 6}}};
  std::vector<Task> tasks = {Task::kValence, Task::kArousal,
                             Task::kExpression};

  // windowing
  double term_short = 1.0;
  double term_middle = 6.0;
  double term_long = 12.0;
  bool use_3s_term = false;
  double stride = 0.2;

  // preprocessing
  bool balance = true;
  std::vector<int> balance_center_regions = {27, 28, 35, 36};
  std::uint64_t balance_seed = 1;
  // group:dims pairs; groups listed here are PCA-reduced before windowing
  std::vector<std::pair<std::string, int>> pca_dims;

  // learner / stacking
  GbdtParams params;
  bool feature_selection = true;
  double feature_fraction = 0.5;
  int folds = 5;
  std::uint64_t fold_seed = 17;
  GridSpec grid;

  // synth subcommand
  SyntheticSpec synth;

  std::string source_text;  // raw config text, hashed into run manifests

  WindowConfig window_config(double fps) const;
  StackingConfig stacking_config() const;
  void validate() const;
};

PipelineConfig parse_config(const std::string& path);

// Parses the same key = value lines from memory; the file loader and the
// tests share it.
PipelineConfig parse_config_text(const std::string& text);

}  // namespace affect
