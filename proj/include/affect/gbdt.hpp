#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "affect/pca.hpp"  // Matrix

namespace affect {

enum class Objective { kRegression, kMulticlass7 };

struct GbdtParams {
  int num_leaves = 31;
  double learning_rate = 0.1;
  int max_depth = -1;  // -1 = unlimited
  int min_child_samples = 20;
  int num_rounds = 100;
  int early_stopping_rounds = 10;  // 0 disables early stopping
  double lambda_l2 = 0.0;
  std::uint64_t seed = 0;
  bool parallel = true;  // OpenMP split search across features

  void validate() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool default_left = true;  // fixed; missing values unsupported in training
  double value = 0.0;        // leaf output, learning rate already applied
  // Fit-time bookkeeping, kept for audits and importance replay.
  int sample_count = 0;
  double split_gain = 0.0;
  int depth = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict_row(const double* row) const;
  int leaf_count() const;
  int max_node_depth() const;
};

// Validation metric, higher is better. Predictions are n x 1 for regression
// and n x 7 class probabilities for multiclass.
using EvalFn =
    std::function<double(const Matrix& preds, const std::vector<double>& y)>;

EvalFn default_regression_metric();  // 2*CCC - MSE
EvalFn default_classification_metric();  // 0.67*F1 + 0.33*accuracy on argmax

struct GbdtModel {
  Objective objective = Objective::kRegression;
  GbdtParams params;
  std::size_t num_features = 0;
  std::vector<double> init_score;  // 1 entry, or 7 class log-priors
  // Round-major; for multiclass, round r class c is trees[r*7 + c].
  std::vector<Tree> trees;
  std::vector<double> importance;  // accumulated split gain per feature
  int best_iteration = 0;          // rounds used at prediction time

  int trees_per_round() const { return objective == Objective::kRegression ? 1 : 7; }

  // Regression: n x 1 values. Multiclass: n x 7 probabilities (rows sum to 1).
  Matrix predict(const Matrix& rows) const;
  std::vector<double> predict_values(const Matrix& rows) const;  // regression
  std::vector<int> predict_classes(const Matrix& rows) const;

  nlohmann::json to_json() const;
  static GbdtModel from_json(const nlohmann::json& j);
};

// Gradient boosting on squared error; early stopping on the validation
// metric when a validation set is given.
GbdtModel train_regressor(const Matrix& x, const std::vector<double>& y,
                          const Matrix* x_valid,
                          const std::vector<double>* y_valid,
                          const GbdtParams& params,
                          const EvalFn& metric = default_regression_metric());

// One tree per class per round on softmax gradients.
GbdtModel train_classifier(
    const Matrix& x, const std::vector<double>& y, const Matrix* x_valid,
    const std::vector<double>* y_valid, const GbdtParams& params,
    const EvalFn& metric = default_classification_metric());

GbdtModel train_gbdt(const Matrix& x, const std::vector<double>& y,
                     const Matrix* x_valid, const std::vector<double>* y_valid,
                     const GbdtParams& params, Objective objective,
                     const EvalFn& metric);

std::vector<double> feature_importance(const GbdtModel& model);

// ceil(fraction*n) highest-gain features, ties to the lower index,
// returned sorted ascending.
std::vector<int> select_top_features(const std::vector<double>& importance,
                                     double fraction);

Matrix select_columns(const Matrix& rows, const std::vector<int>& columns);

struct GridSpec {
  std::vector<int> num_leaves = {15, 31, 63};
  std::vector<double> learning_rate = {0.05, 0.1};
  std::vector<int> max_depth = {-1, 6};
  std::vector<int> min_child_samples = {10, 20};
};

struct GridCell {
  GbdtParams params;
  double score = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;  // grid enumeration order
  std::size_t best = 0;         // highest score, earlier cell wins ties
};

GridResult grid_search(const GridSpec& grid, const GbdtParams& base,
                       const Matrix& x, const std::vector<double>& y,
                       const Matrix& x_valid,
                       const std::vector<double>& y_valid,
                       Objective objective, const EvalFn& metric);

}  // namespace affect
