#include "affect/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "affect/error.hpp"
#include "affect/metrics.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace affect {

void GbdtParams::validate() const {
  if (num_leaves < 2) throw ConfigError("gbdt: num_leaves must be >= 2");
  if (min_child_samples < 1) {
    throw ConfigError("gbdt: min_child_samples must be >= 1");
  }
  if (learning_rate <= 0.0 || learning_rate > 1.0) {
    throw ConfigError("gbdt: learning_rate must be in (0,1]");
  }
  if (num_rounds < 1) throw ConfigError("gbdt: num_rounds must be >= 1");
  if (lambda_l2 < 0.0) throw ConfigError("gbdt: lambda_l2 must be >= 0");
}

double Tree::predict_row(const double* row) const {
  int node = 0;
  while (nodes[node].feature >= 0) {
    const auto& n = nodes[node];
    const double v = row[n.feature];
    if (std::isnan(v)) {
      node = n.default_left ? n.left : n.right;
    } else {
      node = v <= n.threshold ? n.left : n.right;
    }
  }
  return nodes[node].value;
}

int Tree::leaf_count() const {
  int count = 0;
  for (const auto& n : nodes) count += n.feature < 0;
  return count;
}

int Tree::max_node_depth() const {
  int depth = 0;
  for (const auto& n : nodes) depth = std::max(depth, n.depth);
  return depth;
}

EvalFn default_regression_metric() {
  return [](const Matrix& preds, const std::vector<double>& y) {
    return custom_regression_metric(
        std::span<const double>(preds.data.data(), preds.rows), y);
  };
}

EvalFn default_classification_metric() {
  return [](const Matrix& preds, const std::vector<double>& y) {
    std::vector<int> pred(preds.rows), truth(preds.rows);
    for (std::size_t r = 0; r < preds.rows; ++r) {
      int arg = 0;
      for (std::size_t c = 1; c < preds.cols; ++c) {
        if (preds.at(r, c) > preds.at(r, arg)) arg = static_cast<int>(c);
      }
      pred[r] = arg;
      truth[r] = static_cast<int>(y[r]);
    }
    return expression_score(pred, truth).expr_score;
  };
}

namespace {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct NodeState {
  std::vector<int> samples;
  double sum_g = 0.0;
  double sum_h = 0.0;
  int depth = 0;
  SplitCandidate best;
};

double leaf_objective(double g, double h, double lambda) {
  return g * g / (h + lambda);
}

// Best threshold for one feature over the node's samples: exact scan over
// sorted values, thresholds at midpoints between distinct adjacent values.
SplitCandidate best_split_for_feature(
    const Matrix& x, const std::vector<double>& grad,
    const std::vector<double>& hess, const NodeState& node, int feature,
    const GbdtParams& params) {
  const std::size_t n = node.samples.size();
  std::vector<std::pair<double, int>> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int s = node.samples[i];
    order[i] = {x.at(s, feature), s};
  }
  std::sort(order.begin(), order.end());

  SplitCandidate best;
  best.feature = feature;
  const double parent = leaf_objective(node.sum_g, node.sum_h, params.lambda_l2);

  double gl = 0.0, hl = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const int s = order[i].second;
    gl += grad[s];
    hl += hess[s];
    if (order[i].first == order[i + 1].first) continue;
    const std::size_t left_count = i + 1;
    const std::size_t right_count = n - left_count;
    if (left_count < static_cast<std::size_t>(params.min_child_samples) ||
        right_count < static_cast<std::size_t>(params.min_child_samples)) {
      continue;
    }
    const double gr = node.sum_g - gl;
    const double hr = node.sum_h - hl;
    const double gain = leaf_objective(gl, hl, params.lambda_l2) +
                        leaf_objective(gr, hr, params.lambda_l2) - parent;
    if (gain > best.gain) {
      best.gain = gain;
      best.threshold = (order[i].first + order[i + 1].first) / 2.0;
    }
  }
  return best;
}

void find_best_split(const Matrix& x, const std::vector<double>& grad,
                     const std::vector<double>& hess, NodeState& node,
                     const GbdtParams& params) {
  node.best = SplitCandidate{};
  if (params.max_depth > 0 && node.depth >= params.max_depth) return;
  if (node.samples.size() <
      2 * static_cast<std::size_t>(params.min_child_samples)) {
    return;
  }

  const int nf = static_cast<int>(x.cols);
  std::vector<SplitCandidate> per_feature(nf);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (params.parallel)
#endif
  for (int f = 0; f < nf; ++f) {
    per_feature[f] = best_split_for_feature(x, grad, hess, node, f, params);
  }

  // Serial merge in feature order keeps results scheduling-independent;
  // strict comparison gives ties to the lower feature index (and the scan
  // inside each feature already gave ties to the lower threshold).
  node.best.feature = -1;
  node.best.gain = 0.0;
  for (int f = 0; f < nf; ++f) {
    const auto& c = per_feature[f];
    if (c.gain > node.best.gain && c.gain > 0.0) node.best = c;
  }
}

// Leaf-wise growth: always split the frontier leaf with the highest gain.
Tree build_tree(const Matrix& x, const std::vector<double>& grad,
                const std::vector<double>& hess, const GbdtParams& params,
                std::vector<double>& importance) {
  const std::size_t n = x.rows;

  Tree tree;
  std::vector<NodeState> states;

  NodeState root;
  root.samples.resize(n);
  std::iota(root.samples.begin(), root.samples.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    root.sum_g += grad[i];
    root.sum_h += hess[i];
  }
  find_best_split(x, grad, hess, root, params);
  if (root.best.feature < 0 || root.best.gain <= 0.0) {
    return tree;  // no positive-gain split: this round adds no tree
  }

  TreeNode root_node;
  root_node.sample_count = static_cast<int>(n);
  tree.nodes.push_back(root_node);
  states.push_back(std::move(root));

  int leaves = 1;
  while (leaves < params.num_leaves) {
    // Frontier leaf with max gain; ties keep the lower node id.
    int pick = -1;
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (tree.nodes[i].feature >= 0) continue;  // already split
      if (states[i].best.feature < 0) continue;
      if (pick < 0 || states[i].best.gain > states[pick].best.gain + 1e-15) {
        pick = static_cast<int>(i);
      }
    }
    if (pick < 0) break;

    NodeState& parent = states[pick];
    const SplitCandidate split = parent.best;

    NodeState left, right;
    left.depth = right.depth = parent.depth + 1;
    for (int s : parent.samples) {
      if (x.at(s, split.feature) <= split.threshold) {
        left.samples.push_back(s);
        left.sum_g += grad[s];
        left.sum_h += hess[s];
      } else {
        right.samples.push_back(s);
      }
    }
    right.sum_g = parent.sum_g - left.sum_g;
    right.sum_h = parent.sum_h - left.sum_h;

    tree.nodes[pick].feature = split.feature;
    tree.nodes[pick].threshold = split.threshold;
    tree.nodes[pick].split_gain = split.gain;
    tree.nodes[pick].left = static_cast<int>(tree.nodes.size());
    tree.nodes[pick].right = static_cast<int>(tree.nodes.size()) + 1;
    importance[split.feature] += split.gain;

    TreeNode lnode, rnode;
    lnode.depth = rnode.depth = left.depth;
    lnode.sample_count = static_cast<int>(left.samples.size());
    rnode.sample_count = static_cast<int>(right.samples.size());
    tree.nodes.push_back(lnode);
    tree.nodes.push_back(rnode);

    parent.samples.clear();  // release memory held by interior nodes
    find_best_split(x, grad, hess, left, params);
    find_best_split(x, grad, hess, right, params);
    states.push_back(std::move(left));
    states.push_back(std::move(right));
    ++leaves;
  }

  // Leaf values: -G/(H + lambda) scaled by the learning rate.
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].feature >= 0) continue;
    tree.nodes[i].value = -params.learning_rate * states[i].sum_g /
                          (states[i].sum_h + params.lambda_l2);
  }
  return tree;
}

void softmax_row(const double* logits, double* probs) {
  double mx = logits[0];
  for (int c = 1; c < 7; ++c) mx = std::max(mx, logits[c]);
  double sum = 0.0;
  for (int c = 0; c < 7; ++c) {
    probs[c] = std::exp(logits[c] - mx);
    sum += probs[c];
  }
  for (int c = 0; c < 7; ++c) probs[c] /= sum;
}

}  // namespace

GbdtModel train_gbdt(const Matrix& x, const std::vector<double>& y,
                     const Matrix* x_valid, const std::vector<double>* y_valid,
                     const GbdtParams& params, Objective objective,
                     const EvalFn& metric) {
  params.validate();
  const std::size_t n = x.rows;
  if (n == 0) throw EmptyInputError("gbdt: empty training set");
  if (y.size() != n) throw ShapeError("gbdt: target length mismatch");
  if (x_valid && x_valid->cols != x.cols) {
    throw ShapeError("gbdt: validation column mismatch");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("gbdt: non-finite target");
  }

  GbdtModel model;
  model.objective = objective;
  model.params = params;
  model.num_features = x.cols;
  model.importance.assign(x.cols, 0.0);

  const int nclass = model.trees_per_round();
  const bool use_valid =
      x_valid != nullptr && y_valid != nullptr && params.early_stopping_rounds > 0;

  // Init scores: target mean, or per-class log-priors.
  if (objective == Objective::kRegression) {
    double mean = 0.0;
    for (double v : y) mean += v;
    model.init_score = {mean / n};
  } else {
    std::vector<double> counts(7, 0.0);
    for (double v : y) {
      const int c = static_cast<int>(v);
      if (c < 0 || c >= 7 || v != std::floor(v)) {
        throw DataError("gbdt: multiclass label outside 0..6");
      }
      counts[c] += 1.0;
    }
    model.init_score.resize(7);
    for (int c = 0; c < 7; ++c) {
      model.init_score[c] = std::log(std::max(counts[c] / n, 1e-15));
    }
  }

  // Raw scores (logits for multiclass), maintained incrementally.
  std::vector<double> score(n * nclass);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < nclass; ++c) score[i * nclass + c] = model.init_score[c];
  }
  std::vector<double> valid_score;
  if (use_valid) {
    valid_score.resize(x_valid->rows * nclass);
    for (std::size_t i = 0; i < x_valid->rows; ++i) {
      for (int c = 0; c < nclass; ++c) {
        valid_score[i * nclass + c] = model.init_score[c];
      }
    }
  }

  std::vector<double> grad(n), hess(n);
  double best_metric = -std::numeric_limits<double>::infinity();
  int best_round = 0;
  int stale = 0;

  for (int round = 0; round < params.num_rounds; ++round) {
    bool added = false;
    if (objective == Objective::kRegression) {
      for (std::size_t i = 0; i < n; ++i) {
        grad[i] = score[i] - y[i];
        hess[i] = 1.0;
      }
      Tree tree = build_tree(x, grad, hess, params, model.importance);
      if (!tree.nodes.empty()) {
        added = true;
        for (std::size_t i = 0; i < n; ++i) {
          score[i] += tree.predict_row(&x.data[i * x.cols]);
        }
        if (use_valid) {
          for (std::size_t i = 0; i < x_valid->rows; ++i) {
            valid_score[i] +=
                tree.predict_row(&x_valid->data[i * x_valid->cols]);
          }
        }
        model.trees.push_back(std::move(tree));
      }
    } else {
      std::vector<double> probs(n * 7);
      for (std::size_t i = 0; i < n; ++i) {
        softmax_row(&score[i * 7], &probs[i * 7]);
      }
      std::vector<Tree> round_trees(7);
      for (int c = 0; c < 7; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
          const double p = probs[i * 7 + c];
          grad[i] = p - (static_cast<int>(y[i]) == c ? 1.0 : 0.0);
          hess[i] = std::max(p * (1.0 - p), 1e-16);
        }
        round_trees[c] = build_tree(x, grad, hess, params, model.importance);
        if (!round_trees[c].nodes.empty()) added = true;
      }
      if (added) {
        for (int c = 0; c < 7; ++c) {
          const Tree& tree = round_trees[c];
          if (!tree.nodes.empty()) {
            for (std::size_t i = 0; i < n; ++i) {
              score[i * 7 + c] += tree.predict_row(&x.data[i * x.cols]);
            }
            if (use_valid) {
              for (std::size_t i = 0; i < x_valid->rows; ++i) {
                valid_score[i * 7 + c] +=
                    tree.predict_row(&x_valid->data[i * x_valid->cols]);
              }
            }
          }
        }
        for (int c = 0; c < 7; ++c) {
          model.trees.push_back(std::move(round_trees[c]));
        }
      }
    }

    if (!added) break;  // no positive-gain split anywhere; further rounds idle
    const int rounds_so_far =
        static_cast<int>(model.trees.size()) / nclass;

    if (use_valid) {
      Matrix vp(x_valid->rows, objective == Objective::kRegression ? 1 : 7);
      if (objective == Objective::kRegression) {
        for (std::size_t i = 0; i < x_valid->rows; ++i) {
          vp.at(i, 0) = valid_score[i];
        }
      } else {
        for (std::size_t i = 0; i < x_valid->rows; ++i) {
          softmax_row(&valid_score[i * 7], &vp.data[i * 7]);
        }
      }
      double m;
      try {
        m = metric(vp, *y_valid);
      } catch (const UndefinedMetricError&) {
        m = -std::numeric_limits<double>::infinity();
      }
      if (m > best_metric + 1e-12) {
        best_metric = m;
        best_round = rounds_so_far;
        stale = 0;
      } else if (++stale >= params.early_stopping_rounds) {
        break;
      }
    } else {
      best_round = rounds_so_far;
    }
  }

  model.best_iteration =
      best_round > 0 ? best_round
                     : static_cast<int>(model.trees.size()) / nclass;
  return model;
}

GbdtModel train_regressor(const Matrix& x, const std::vector<double>& y,
                          const Matrix* x_valid,
                          const std::vector<double>* y_valid,
                          const GbdtParams& params, const EvalFn& metric) {
  return train_gbdt(x, y, x_valid, y_valid, params, Objective::kRegression,
                    metric);
}

GbdtModel train_classifier(const Matrix& x, const std::vector<double>& y,
                           const Matrix* x_valid,
                           const std::vector<double>* y_valid,
                           const GbdtParams& params, const EvalFn& metric) {
  return train_gbdt(x, y, x_valid, y_valid, params, Objective::kMulticlass7,
                    metric);
}

Matrix GbdtModel::predict(const Matrix& rows) const {
  if (rows.cols != num_features) {
    throw ShapeError("gbdt predict: input has " + std::to_string(rows.cols) +
                     " columns, model expects " +
                     std::to_string(num_features));
  }
  const int nclass = trees_per_round();
  const int use_trees = best_iteration * nclass;
  Matrix out(rows.rows, nclass);
  for (std::size_t i = 0; i < rows.rows; ++i) {
    for (int c = 0; c < nclass; ++c) out.at(i, c) = init_score[c];
    for (int t = 0; t < use_trees && t < static_cast<int>(trees.size()); ++t) {
      if (trees[t].nodes.empty()) continue;
      out.at(i, t % nclass) += trees[t].predict_row(&rows.data[i * rows.cols]);
    }
  }
  if (objective == Objective::kMulticlass7) {
    for (std::size_t i = 0; i < rows.rows; ++i) {
      double probs[7];
      softmax_row(&out.data[i * 7], probs);
      for (int c = 0; c < 7; ++c) out.at(i, c) = probs[c];
    }
  }
  return out;
}

std::vector<double> GbdtModel::predict_values(const Matrix& rows) const {
  const Matrix p = predict(rows);
  return p.data;
}

std::vector<int> GbdtModel::predict_classes(const Matrix& rows) const {
  const Matrix p = predict(rows);
  std::vector<int> out(rows.rows);
  for (std::size_t i = 0; i < p.rows; ++i) {
    int arg = 0;
    for (std::size_t c = 1; c < p.cols; ++c) {
      if (p.at(i, c) > p.at(i, arg)) arg = static_cast<int>(c);
    }
    out[i] = arg;
  }
  return out;
}

std::vector<double> feature_importance(const GbdtModel& model) {
  return model.importance;
}

std::vector<int> select_top_features(const std::vector<double>& importance,
                                     double fraction) {
  if (importance.empty()) throw EmptyInputError("select_top_features: empty");
  if (fraction <= 0.0 || fraction > 1.0) {
    throw ConfigError("select_top_features: fraction must be in (0,1]");
  }
  const std::size_t n = importance.size();
  const std::size_t keep = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return importance[a] > importance[b];
  });
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

Matrix select_columns(const Matrix& rows, const std::vector<int>& columns) {
  Matrix out(rows.rows, columns.size());
  for (std::size_t r = 0; r < rows.rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out.at(r, c) = rows.at(r, columns[c]);
    }
  }
  return out;
}

GridResult grid_search(const GridSpec& grid, const GbdtParams& base,
                       const Matrix& x, const std::vector<double>& y,
                       const Matrix& x_valid,
                       const std::vector<double>& y_valid,
                       Objective objective, const EvalFn& metric) {
  if (grid.num_leaves.empty() || grid.learning_rate.empty() ||
      grid.max_depth.empty() || grid.min_child_samples.empty()) {
    throw ConfigError("grid_search: empty grid axis");
  }
  GridResult result;
  for (int leaves : grid.num_leaves) {
    for (double lr : grid.learning_rate) {
      for (int depth : grid.max_depth) {
        for (int mcs : grid.min_child_samples) {
          GbdtParams p = base;
          p.num_leaves = leaves;
          p.learning_rate = lr;
          p.max_depth = depth;
          p.min_child_samples = mcs;
          GbdtModel model =
              train_gbdt(x, y, &x_valid, &y_valid, p, objective, metric);
          double score;
          try {
            score = metric(model.predict(x_valid), y_valid);
          } catch (const UndefinedMetricError&) {
            score = -std::numeric_limits<double>::infinity();
          }
          result.cells.push_back({p, score});
        }
      }
    }
  }
  for (std::size_t i = 1; i < result.cells.size(); ++i) {
    if (result.cells[i].score > result.cells[result.best].score) {
      result.best = i;
    }
  }
  return result;
}

namespace {

nlohmann::json params_to_json(const GbdtParams& p) {
  return {{"num_leaves", p.num_leaves},
          {"learning_rate", p.learning_rate},
          {"max_depth", p.max_depth},
          {"min_child_samples", p.min_child_samples},
          {"num_rounds", p.num_rounds},
          {"early_stopping_rounds", p.early_stopping_rounds},
          {"lambda_l2", p.lambda_l2},
          {"seed", p.seed}};
}

GbdtParams params_from_json(const nlohmann::json& j) {
  GbdtParams p;
  p.num_leaves = j.at("num_leaves").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.max_depth = j.at("max_depth").get<int>();
  p.min_child_samples = j.at("min_child_samples").get<int>();
  p.num_rounds = j.at("num_rounds").get<int>();
  p.early_stopping_rounds = j.at("early_stopping_rounds").get<int>();
  p.lambda_l2 = j.at("lambda_l2").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

}  // namespace

nlohmann::json GbdtModel::to_json() const {
  nlohmann::json j;
  j["objective"] = objective == Objective::kRegression ? "regression"
                                                       : "multiclass7";
  j["params"] = params_to_json(params);
  j["num_features"] = num_features;
  j["init_score"] = init_score;
  j["importance"] = importance;
  j["best_iteration"] = best_iteration;
  j["trees"] = nlohmann::json::array();
  for (const auto& tree : trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"default_left", n.default_left},
                       {"value", n.value},
                       {"sample_count", n.sample_count},
                       {"split_gain", n.split_gain},
                       {"depth", n.depth}});
    }
    j["trees"].push_back(std::move(nodes));
  }
  return j;
}

GbdtModel GbdtModel::from_json(const nlohmann::json& j) {
  GbdtModel m;
  m.objective = j.at("objective").get<std::string>() == "regression"
                    ? Objective::kRegression
                    : Objective::kMulticlass7;
  m.params = params_from_json(j.at("params"));
  m.num_features = j.at("num_features").get<std::size_t>();
  m.init_score = j.at("init_score").get<std::vector<double>>();
  m.importance = j.at("importance").get<std::vector<double>>();
  m.best_iteration = j.at("best_iteration").get<int>();
  for (const auto& nodes : j.at("trees")) {
    Tree tree;
    for (const auto& nj : nodes) {
      TreeNode n;
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
      n.default_left = nj.at("default_left").get<bool>();
      n.value = nj.at("value").get<double>();
      n.sample_count = nj.at("sample_count").get<int>();
      n.split_gain = nj.at("split_gain").get<double>();
      n.depth = nj.at("depth").get<int>();
      tree.nodes.push_back(n);
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace affect
