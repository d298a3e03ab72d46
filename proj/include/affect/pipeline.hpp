#pragma once

#include <map>
#include <string>
#include <vector>

#include "affect/config.hpp"
#include "affect/metrics.hpp"
#include "affect/pca.hpp"

namespace affect {

struct CorpusSplit {
  std::vector<FrameSequence> train;
  std::vector<FrameSequence> val;
  double fps = 0.0;  // uniform across the corpus
};

// Reads <corpus_dir>/index.csv and each video's features plus the labels
// for the configured tasks.
CorpusSplit load_corpus(const PipelineConfig& cfg);

// Standardizer fit on training frames, plus optional per-group PCA fitted
// on the standardized training frames. model_schema reflects reduced dims.
struct Preprocess {
  Schema raw_schema;
  Schema model_schema;
  StandardizerStats stats;
  std::map<std::string, PcaModel> pca;

  nlohmann::json to_json() const;
  static Preprocess from_json(const nlohmann::json& j);
};

Preprocess fit_preprocess(const PipelineConfig& cfg,
                          const std::vector<FrameSequence>& train);
FrameSequence apply_preprocess(const Preprocess& pre,
                               const FrameSequence& seq);

// Stage entry points; each reads its upstream artifacts from work_dir and
// writes its own, never mutating inputs. Missing upstream files raise
// StageDependencyError.
void stage_synth(const PipelineConfig& cfg);
void stage_extract(const PipelineConfig& cfg);
void stage_balance(const PipelineConfig& cfg);
void stage_train(const PipelineConfig& cfg);
void stage_predict(const PipelineConfig& cfg, const std::string& split);
EvalReport stage_evaluate(const PipelineConfig& cfg, const std::string& split);
void stage_gridsearch(const PipelineConfig& cfg, Task task);

// Appends a run record (command, config hash, seeds, input digests) to
// <work_dir>/runs.json.
void write_run_manifest(const PipelineConfig& cfg, const std::string& command,
                        const std::vector<std::string>& inputs);

}  // namespace affect
