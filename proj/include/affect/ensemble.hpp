#pragma once

#include <map>
#include <string>
#include <vector>

#include "affect/gbdt.hpp"
#include "affect/windowing.hpp"

namespace affect {

// Video-grouped fold assignment: all samples of a video share a fold, so no
// combiner ever trains on inputs produced by a model that saw that video.
struct FoldPlan {
  int k = 5;
  std::uint64_t seed = 0;
  std::map<std::string, int> video_fold;

  int fold_of(const std::string& video_id) const;
  std::vector<int> sample_folds(const WindowedDataset& ds) const;

  nlohmann::json to_json() const;
  static FoldPlan from_json(const nlohmann::json& j);
};

// Videos shuffled by seed, dealt round-robin into k folds.
FoldPlan make_fold_plan(const WindowedDataset& ds, int k, std::uint64_t seed);

// One logical model kept in two forms: the full-data refit used at
// prediction time, and one model per fold trained without that fold, used
// to build out-of-fold stacking inputs for the next stage.
struct FoldedGbdt {
  GbdtModel full;
  std::vector<GbdtModel> per_fold;
  // video ids seen by each per-fold model at fit time, for leakage audits
  std::vector<std::vector<std::string>> fold_train_videos;

  nlohmann::json to_json() const;
  static FoldedGbdt from_json(const nlohmann::json& j);
};

// Leakage audit record: one combiner training row and the videos its
// input-producing model was trained on.
struct AuditEntry {
  std::string combiner;
  std::string row_video;
  const std::vector<std::string>* producer_videos;
};
using AuditLog = std::vector<AuditEntry>;

struct StackingConfig {
  GbdtParams params;
  bool feature_selection = true;
  double feature_fraction = 0.5;
  int folds = 5;
};

struct GroupSubModel {
  std::string group;
  std::vector<int> selected_features;  // indices into the term-group block
  FoldedGbdt model;
};

// Per-group sub-models plus a stacked combiner, for one term and one task.
// Sub-models and the combiner are supervised by the term's own label.
struct SingleTermModel {
  Task task = Task::kValence;
  std::string term;
  std::vector<GroupSubModel> subs;
  FoldedGbdt combiner;

  int output_width() const { return task_is_classification(task) ? 7 : 1; }
};

// Combiner over all term models of one task, supervised by the short-term
// label.
struct MultiTermModel {
  Task task = Task::kValence;
  std::vector<SingleTermModel> term_models;
  FoldedGbdt combiner;
};

// Final per-task model: the target task's per-term outputs plus the other
// tasks' multi-term outputs feed one last combiner.
struct FusionModel {
  Task task = Task::kValence;
  std::vector<Task> other_tasks;  // input order after the target terms
  GbdtModel combiner;
};

struct EnsembleBundle {
  std::vector<TermSpec> terms;
  std::vector<FeatureGroupSpec> groups;
  FoldPlan plan;
  std::map<Task, MultiTermModel> multi_term;
  std::map<Task, FusionModel> fusion;
};

SingleTermModel train_single_term(const WindowedDataset& ds,
                                  const std::string& term, Task task,
                                  const StackingConfig& cfg,
                                  const FoldPlan& plan,
                                  AuditLog* audit = nullptr);

MultiTermModel train_multi_term(const WindowedDataset& ds, Task task,
                                std::vector<SingleTermModel> term_models,
                                const StackingConfig& cfg,
                                const FoldPlan& plan,
                                AuditLog* audit = nullptr);

// Requires multi-term models for every other task in the bundle; they
// predict from features, so the target dataset needs no other-task labels.
FusionModel train_fusion(Task target,
                         const std::map<Task, MultiTermModel>& all_tasks,
                         const WindowedDataset& target_ds,
                         const StackingConfig& cfg, const FoldPlan& plan,
                         AuditLog* audit = nullptr);

// Forward passes through the refit (full-data) path.
Matrix predict_single_term(const SingleTermModel& model,
                           const WindowedDataset& ds);
Matrix predict_multi_term(const MultiTermModel& model,
                          const WindowedDataset& ds);
Matrix predict_fusion(const FusionModel& model,
                      const std::map<Task, MultiTermModel>& all_tasks,
                      const WindowedDataset& ds);

// Out-of-fold paths: every row is predicted by models trained without that
// row's video.
Matrix oof_predict_single_term(const SingleTermModel& model,
                               const WindowedDataset& ds,
                               const FoldPlan& plan);
Matrix oof_predict_multi_term(const MultiTermModel& model,
                              const WindowedDataset& ds, const FoldPlan& plan);

void save_bundle(const EnsembleBundle& bundle, const std::string& dir);
EnsembleBundle load_bundle(const std::string& dir);

}  // namespace affect
