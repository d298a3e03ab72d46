#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "affect/error.hpp"
#include "affect/gbdt.hpp"
#include "affect/metrics.hpp"

using namespace affect;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (auto& v : m.data) v = dist(rng);
  return m;
}

// Exhaustive depth-1 stump on squared error: scans every threshold, fits the
// mean residual on each side.
double stump_oracle_prediction(const Matrix& x, const std::vector<double>& y,
                               int min_child, double lr, double row_value) {
  const std::size_t n = x.rows;
  const double mean = [&] {
    double s = 0;
    for (double v : y) s += v;
    return s / n;
  }();

  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = x.at(i, 0);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());

  double best_gain = 0.0, best_threshold = 0.0;
  bool found = false;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (sorted[i] == sorted[i + 1]) continue;
    const double thr = (sorted[i] + sorted[i + 1]) / 2;
    double gl = 0, gr = 0;
    std::size_t nl = 0, nr = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double g = mean - y[j];  // gradient after the init score
      if (values[j] <= thr) {
        gl += g;
        ++nl;
      } else {
        gr += g;
        ++nr;
      }
    }
    if (nl < static_cast<std::size_t>(min_child) ||
        nr < static_cast<std::size_t>(min_child)) {
      continue;
    }
    const double gain = gl * gl / nl + gr * gr / nr - (gl + gr) * (gl + gr) / n;
    if (gain > best_gain) {
      best_gain = gain;
      best_threshold = thr;
      found = true;
    }
  }
  if (!found) return mean;

  double gl = 0, gr = 0;
  std::size_t nl = 0, nr = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double g = mean - y[j];
    if (values[j] <= best_threshold) {
      gl += g;
      ++nl;
    } else {
      gr += g;
      ++nr;
    }
  }
  const double leaf = row_value <= best_threshold ? -gl / nl : -gr / nr;
  return mean + lr * leaf;
}

}  // namespace

TEST_CASE("constant target yields a zero-tree model") {
  Matrix x = random_matrix(100, 3, 1);
  std::vector<double> y(100, 4.2);
  GbdtParams p;
  p.min_child_samples = 5;
  auto model = train_regressor(x, y, nullptr, nullptr, p);
  CHECK(model.trees.empty());
  auto preds = model.predict(x);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(preds.at(i, 0) == doctest::Approx(4.2));
  }
}

TEST_CASE("1-D step target trains to near-zero MSE with stumps") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix x(500, 1);
  std::vector<double> y(500);
  for (int i = 0; i < 500; ++i) {
    x.at(i, 0) = unif(rng);
    y[i] = x.at(i, 0) > 0 ? 1.0 : 0.0;
  }
  GbdtParams p;
  p.max_depth = 1;
  p.num_leaves = 2;
  p.num_rounds = 50;
  p.min_child_samples = 5;
  p.early_stopping_rounds = 0;
  auto model = train_regressor(x, y, nullptr, nullptr, p);
  auto preds = model.predict(x);
  double m = 0;
  for (int i = 0; i < 500; ++i) {
    const double d = preds.at(i, 0) - y[i];
    m += d * d;
  }
  CHECK(m / 500 < 1e-3);
}

TEST_CASE("single round depth-1 matches the exhaustive stump oracle") {
  std::mt19937 rng(7);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix x(200, 1);
  std::vector<double> y(200);
  for (int i = 0; i < 200; ++i) {
    x.at(i, 0) = dist(rng);
    y[i] = std::sin(x.at(i, 0)) + 0.1 * dist(rng);
  }
  GbdtParams p;
  p.max_depth = 1;
  p.num_leaves = 2;
  p.num_rounds = 1;
  p.min_child_samples = 10;
  p.learning_rate = 0.3;
  p.early_stopping_rounds = 0;
  auto model = train_regressor(x, y, nullptr, nullptr, p);
  auto preds = model.predict(x);
  for (int i = 0; i < 200; ++i) {
    const double oracle = stump_oracle_prediction(x, y, 10, 0.3, x.at(i, 0));
    CHECK(std::abs(preds.at(i, 0) - oracle) < 1e-9);
  }
}

TEST_CASE("training loss is non-increasing per round") {
  std::mt19937 rng(11);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix x = random_matrix(400, 5, 11);
  std::vector<double> y(400);
  for (int i = 0; i < 400; ++i) {
    y[i] = x.at(i, 0) * 1.5 - x.at(i, 2) + 0.3 * dist(rng);
  }
  GbdtParams p;
  p.num_rounds = 100;
  p.min_child_samples = 10;
  p.early_stopping_rounds = 0;
  auto model = train_regressor(x, y, nullptr, nullptr, p);

  // replay round by round
  std::vector<double> pred(400, model.init_score[0]);
  double prev = 1e300;
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    for (int i = 0; i < 400; ++i) {
      pred[i] += model.trees[t].predict_row(&x.data[i * 5]);
    }
    double loss = 0;
    for (int i = 0; i < 400; ++i) loss += (pred[i] - y[i]) * (pred[i] - y[i]);
    CHECK(loss <= prev + 1e-9);
    prev = loss;
  }
}

TEST_CASE("structural caps are respected") {
  Matrix x = random_matrix(600, 4, 13);
  std::vector<double> y(600);
  for (int i = 0; i < 600; ++i) {
    y[i] = x.at(i, 0) * x.at(i, 1) + x.at(i, 2);
  }
  GbdtParams p;
  p.num_leaves = 7;
  p.max_depth = 3;
  p.min_child_samples = 25;
  p.num_rounds = 20;
  p.early_stopping_rounds = 0;
  auto model = train_regressor(x, y, nullptr, nullptr, p);
  REQUIRE(!model.trees.empty());
  for (const auto& tree : model.trees) {
    CHECK(tree.leaf_count() <= 7);
    CHECK(tree.max_node_depth() <= 3);
    for (const auto& n : tree.nodes) {
      if (n.feature < 0) CHECK(n.sample_count >= 25);
    }
  }
}

TEST_CASE("determinism: same data and params give identical models") {
  Matrix x = random_matrix(300, 6, 17);
  std::vector<double> y(300);
  for (int i = 0; i < 300; ++i) y[i] = x.at(i, 1) - 2 * x.at(i, 4);
  GbdtParams p;
  p.min_child_samples = 10;
  p.num_rounds = 30;
  p.early_stopping_rounds = 0;
  auto a = train_regressor(x, y, nullptr, nullptr, p);
  p.parallel = false;
  auto b = train_regressor(x, y, nullptr, nullptr, p);
  REQUIRE(a.trees.size() == b.trees.size());
  auto pa = a.predict(x);
  auto pb = b.predict(x);
  for (std::size_t i = 0; i < pa.data.size(); ++i) {
    CHECK(pa.data[i] == pb.data[i]);
  }
}

TEST_CASE("monotone transform of a feature leaves predictions unchanged") {
  Matrix x = random_matrix(250, 3, 19);
  std::vector<double> y(250);
  for (int i = 0; i < 250; ++i) y[i] = x.at(i, 0) + 0.5 * x.at(i, 1);
  GbdtParams p;
  p.min_child_samples = 10;
  p.num_rounds = 25;
  p.early_stopping_rounds = 0;
  auto base = train_regressor(x, y, nullptr, nullptr, p);

  Matrix xt = x;
  for (std::size_t i = 0; i < 250; ++i) {
    xt.at(i, 0) = std::exp(x.at(i, 0));  // strictly increasing
  }
  auto transformed = train_regressor(xt, y, nullptr, nullptr, p);
  auto pa = base.predict(x);
  auto pb = transformed.predict(xt);
  for (std::size_t i = 0; i < 250; ++i) {
    CHECK(pa.at(i, 0) == doctest::Approx(pb.at(i, 0)).epsilon(1e-12));
  }
}

TEST_CASE("classifier separates two clusters") {
  std::mt19937 rng(23);
  std::normal_distribution<double> dist(0.0, 0.3);
  Matrix x(200, 2), xv(60, 2);
  std::vector<double> y(200), yv(60);
  for (int i = 0; i < 200; ++i) {
    const bool hi = i % 2 == 0;
    x.at(i, 0) = (hi ? 2.0 : -2.0) + dist(rng);
    x.at(i, 1) = dist(rng);
    y[i] = hi ? 3.0 : 0.0;
  }
  for (int i = 0; i < 60; ++i) {
    const bool hi = i % 2 == 0;
    xv.at(i, 0) = (hi ? 2.0 : -2.0) + dist(rng);
    xv.at(i, 1) = dist(rng);
    yv[i] = hi ? 3.0 : 0.0;
  }
  GbdtParams p;
  p.min_child_samples = 5;
  p.num_rounds = 20;
  p.early_stopping_rounds = 0;
  auto model = train_classifier(x, y, &xv, &yv, p);
  auto classes = model.predict_classes(xv);
  int correct = 0;
  for (int i = 0; i < 60; ++i) correct += classes[i] == int(yv[i]);
  CHECK(correct == 60);
}

TEST_CASE("multiclass probabilities sum to one") {
  std::mt19937 rng(29);
  std::uniform_int_distribution<int> cls(0, 6);
  Matrix x = random_matrix(300, 4, 29);
  std::vector<double> y(300);
  for (auto& v : y) v = cls(rng);
  GbdtParams p;
  p.min_child_samples = 5;
  p.num_rounds = 10;
  p.early_stopping_rounds = 0;
  auto model = train_classifier(x, y, nullptr, nullptr, p);
  auto probs = model.predict(random_matrix(50, 4, 31));
  for (std::size_t i = 0; i < 50; ++i) {
    double sum = 0;
    for (int c = 0; c < 7; ++c) {
      sum += probs.at(i, c);
      CHECK(probs.at(i, c) >= 0.0);
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("single-class training predicts that class everywhere") {
  Matrix x = random_matrix(80, 3, 37);
  std::vector<double> y(80, 5.0);
  GbdtParams p;
  p.min_child_samples = 5;
  p.num_rounds = 5;
  auto model = train_classifier(x, y, nullptr, nullptr, p);
  auto classes = model.predict_classes(random_matrix(20, 3, 41));
  for (int c : classes) CHECK(c == 5);
}

TEST_CASE("empty tree list predicts the init score") {
  GbdtModel model;
  model.objective = Objective::kRegression;
  model.num_features = 2;
  model.init_score = {1.25};
  model.best_iteration = 0;
  auto preds = model.predict(random_matrix(10, 2, 43));
  for (std::size_t i = 0; i < 10; ++i) CHECK(preds.at(i, 0) == 1.25);
}

TEST_CASE("batch prediction equals per-row prediction") {
  Matrix x = random_matrix(150, 3, 47);
  std::vector<double> y(150);
  for (int i = 0; i < 150; ++i) y[i] = x.at(i, 2);
  GbdtParams p;
  p.min_child_samples = 10;
  p.num_rounds = 10;
  p.early_stopping_rounds = 0;
  auto model = train_regressor(x, y, nullptr, nullptr, p);
  auto batch = model.predict(x);
  for (int i = 0; i < 150; ++i) {
    Matrix row(1, 3);
    for (int c = 0; c < 3; ++c) row.at(0, c) = x.at(i, c);
    CHECK(model.predict(row).at(0, 0) == batch.at(i, 0));
  }
}

TEST_CASE("feature importance accounting") {
  GbdtModel empty;
  empty.num_features = 4;
  empty.importance.assign(4, 0.0);
  for (double v : feature_importance(empty)) CHECK(v == 0.0);

  // stump model: all importance on the single informative feature
  Matrix x = random_matrix(300, 3, 53);
  std::vector<double> y(300);
  for (int i = 0; i < 300; ++i) y[i] = x.at(i, 1) > 0 ? 1.0 : -1.0;
  GbdtParams p;
  p.max_depth = 1;
  p.num_leaves = 2;
  p.num_rounds = 10;
  p.min_child_samples = 10;
  p.early_stopping_rounds = 0;
  auto model = train_regressor(x, y, nullptr, nullptr, p);
  auto imp = feature_importance(model);
  CHECK(imp[1] > 0.0);
  CHECK(imp[0] == 0.0);
  CHECK(imp[2] == 0.0);

  // replay oracle: gains stored on nodes sum to the importance totals
  std::vector<double> replay(3, 0.0);
  for (const auto& tree : model.trees) {
    for (const auto& n : tree.nodes) {
      if (n.feature >= 0) replay[n.feature] += n.split_gain;
    }
  }
  for (int f = 0; f < 3; ++f) {
    CHECK(imp[f] == doctest::Approx(replay[f]).epsilon(1e-12));
  }
}

TEST_CASE("select_top_features") {
  std::vector<double> imp = {5, 1, 9, 9, 0, 3, 2, 9, 4, 7};
  auto half = select_top_features(imp, 0.5);
  CHECK(half == std::vector<int>{0, 2, 3, 7, 9});
  auto all = select_top_features(imp, 1.0);
  CHECK(all.size() == 10);

  // tied gains: lower indices win (stable-sort oracle)
  std::vector<double> tied = {1, 1, 1, 1};
  CHECK(select_top_features(tied, 0.5) == std::vector<int>{0, 1});
}

TEST_CASE("grid search picks the superior cell") {
  // XOR-like target needs depth > 1
  std::mt19937 rng(59);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix x(400, 2), xv(200, 2);
  std::vector<double> y(400), yv(200);
  for (int i = 0; i < 400; ++i) {
    x.at(i, 0) = unif(rng);
    x.at(i, 1) = unif(rng);
    y[i] = (x.at(i, 0) > 0) == (x.at(i, 1) > 0) ? 1.0 : -1.0;
  }
  for (int i = 0; i < 200; ++i) {
    xv.at(i, 0) = unif(rng);
    xv.at(i, 1) = unif(rng);
    yv[i] = (xv.at(i, 0) > 0) == (xv.at(i, 1) > 0) ? 1.0 : -1.0;
  }
  GridSpec grid;
  grid.num_leaves = {2, 15};
  grid.learning_rate = {0.1};
  grid.max_depth = {1, 4};
  grid.min_child_samples = {10};
  GbdtParams base;
  base.num_rounds = 40;
  base.early_stopping_rounds = 0;
  auto result = grid_search(grid, base, x, y, xv, yv, Objective::kRegression,
                            default_regression_metric());
  CHECK(result.cells.size() == 4);
  CHECK(result.cells[result.best].params.max_depth == 4);
  CHECK(result.cells[result.best].params.num_leaves == 15);

  GridSpec one;
  one.num_leaves = {8};
  one.learning_rate = {0.1};
  one.max_depth = {-1};
  one.min_child_samples = {10};
  auto single = grid_search(one, base, x, y, xv, yv, Objective::kRegression,
                            default_regression_metric());
  CHECK(single.cells.size() == 1);
  CHECK(single.best == 0);
}

TEST_CASE("early stopping records best_iteration") {
  std::mt19937 rng(61);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix x(300, 3), xv(100, 3);
  std::vector<double> y(300), yv(100);
  for (int i = 0; i < 300; ++i) {
    for (int c = 0; c < 3; ++c) x.at(i, c) = dist(rng);
    y[i] = x.at(i, 0) + dist(rng);
  }
  for (int i = 0; i < 100; ++i) {
    for (int c = 0; c < 3; ++c) xv.at(i, c) = dist(rng);
    yv[i] = xv.at(i, 0) + dist(rng);
  }
  GbdtParams p;
  p.num_rounds = 200;
  p.early_stopping_rounds = 5;
  p.min_child_samples = 10;
  auto model = train_regressor(x, y, &xv, &yv, p);
  CHECK(model.best_iteration >= 1);
  CHECK(model.best_iteration <= 200);
  // trained longer than it kept
  CHECK(static_cast<int>(model.trees.size()) >= model.best_iteration);
}

TEST_CASE("model bundle reloads to bit-identical predictions") {
  Matrix x = random_matrix(200, 4, 67);
  std::vector<double> y(200);
  for (int i = 0; i < 200; ++i) y[i] = x.at(i, 0) * 2 - x.at(i, 3);
  GbdtParams p;
  p.min_child_samples = 10;
  p.num_rounds = 15;
  p.early_stopping_rounds = 0;
  auto model = train_regressor(x, y, nullptr, nullptr, p);
  auto json_text = model.to_json().dump();
  auto back = GbdtModel::from_json(nlohmann::json::parse(json_text));
  auto pa = model.predict(x);
  auto pb = back.predict(x);
  for (std::size_t i = 0; i < pa.data.size(); ++i) {
    CHECK(pa.data[i] == pb.data[i]);
  }
}

TEST_CASE("parameter validation and shape errors") {
  GbdtParams p;
  p.num_leaves = 1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = GbdtParams{};
  p.learning_rate = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);

  Matrix x = random_matrix(50, 2, 71);
  std::vector<double> y(50, 0.0);
  Matrix empty(0, 2);
  std::vector<double> ey;
  CHECK_THROWS_AS(
      train_regressor(empty, ey, nullptr, nullptr, GbdtParams{}),
      EmptyInputError);

  GbdtParams ok;
  ok.min_child_samples = 5;
  auto model = train_regressor(x, y, nullptr, nullptr, ok);
  CHECK_THROWS_AS(model.predict(random_matrix(5, 3, 73)), ShapeError);
}
