// Acceptance gate: nine criteria, one PASS/FAIL line each. Exit code is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "affect/balancing.hpp"
#include "affect/config.hpp"
#include "affect/ensemble.hpp"
#include "affect/error.hpp"
#include "affect/gbdt.hpp"
#include "affect/metrics.hpp"
#include "affect/pca.hpp"
#include "affect/pipeline.hpp"
#include "affect/synthetic.hpp"
#include "affect/windowing.hpp"

using namespace affect;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s  criterion %d: %s\n", pass ? "PASS" : "FAIL", id,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

double ccc_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sx = 0, sy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += (x[i] - mx) * (x[i] - mx);
    sy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  sx /= n;
  sy /= n;
  sxy /= n;
  return 2 * sxy / (sx + sy + (mx - my) * (mx - my));
}

void criterion_metrics() {
  const auto start = clock_type::now();
  std::mt19937 rng(101);
  std::uniform_int_distribution<int> len(2, 500);
  std::normal_distribution<double> gauss(0.0, 1.0);

  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = len(rng);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = gauss(rng);
      y[i] = 0.5 * x[i] + 0.5 * gauss(rng);
    }
    worst = std::max(worst, std::abs(ccc(x, y) - ccc_oracle(x, y)));
  }
  bool pass = worst < 1e-10;

  // mean-of-CCCs and the 0.67/0.33 blend must be exact arithmetic
  pass = pass && va_score(0.402, 0.538) == (0.402 + 0.538) / 2.0;
  pass = pass && va_score(-1.0, 1.0) == 0.0;

  std::uniform_int_distribution<int> cls(0, 6);
  bool fuzz_ok = true;
  for (int rep = 0; rep < 20 && fuzz_ok; ++rep) {
    std::vector<int> pred(500), truth(500);
    for (int i = 0; i < 500; ++i) {
      pred[i] = cls(rng);
      truth[i] = rep % 2 ? cls(rng) : std::min(6, pred[i] + (i % 3 == 0));
    }
    // brute-force confusion matrix
    int confusion[7][7] = {};
    for (int i = 0; i < 500; ++i) confusion[truth[i]][pred[i]]++;
    double f1_sum = 0.0;
    int present = 0, correct = 0;
    for (int c = 0; c < 7; ++c) {
      int tp = confusion[c][c], fp = 0, fn = 0;
      for (int o = 0; o < 7; ++o) {
        if (o != c) {
          fp += confusion[o][c];
          fn += confusion[c][o];
        }
      }
      correct += tp;
      if (tp + fp + fn == 0) continue;
      ++present;
      if (tp > 0) {
        const double prec = static_cast<double>(tp) / (tp + fp);
        const double rec = static_cast<double>(tp) / (tp + fn);
        f1_sum += 2.0 * prec * rec / (prec + rec);
      }
    }
    const double macro = f1_sum / present;
    const double acc = correct / 500.0;
    auto got = expression_score(pred, truth);
    fuzz_ok = got.macro_f1 == macro && got.accuracy == acc &&
              got.expr_score == 0.67 * macro + 0.33 * acc;
  }
  pass = pass && fuzz_ok;

  const double elapsed =
      std::chrono::duration<double>(clock_type::now() - start).count();
  pass = pass && elapsed < 10.0;
  report(1, pass,
         fmt("metric oracles: worst CCC delta %.2e, F1 fuzz %s, %.1fs",
             worst, fuzz_ok ? "exact" : "MISMATCH", elapsed));
}

// ---------------------------------------------------------------- criterion 2

void criterion_windowing() {
  std::mt19937 rng(202);
  std::uniform_real_distribution<double> wdist(2.0, 15.0);
  std::uniform_real_distribution<double> sdist(0.1, 2.0);
  std::uniform_real_distribution<double> ddist(0.0, 30.0);

  bool anchors_ok = true;
  for (int rep = 0; rep < 100; ++rep) {
    const double w = wdist(rng);
    const double s = sdist(rng);
    const double d = w + ddist(rng);
    int count = 0;
    while (w + count * s <= d + 1e-9) ++count;
    if (anchor_count(d, w, s) != count) anchors_ok = false;
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + rng() % 60;
    std::vector<double> v(n), ts(n);
    for (int i = 0; i < n; ++i) {
      v[i] = gauss(rng);
      ts[i] = i * 0.25;
    }
    auto got = window_stats(v, ts);
    double mean = 0, mn = v[0], mx = v[0];
    for (double x : v) {
      mean += x;
      mn = std::min(mn, x);
      mx = std::max(mx, x);
    }
    mean /= n;
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= n;
    double tm = 0;
    for (double t : ts) tm += t;
    tm /= n;
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
      num += (ts[i] - tm) * (v[i] - mean);
      den += (ts[i] - tm) * (ts[i] - tm);
    }
    worst = std::max({worst, std::abs(got.mean - mean),
                      std::abs(got.stddev - std::sqrt(var)),
                      std::abs(got.max_change - (mx - mn)),
                      std::abs(got.slope - num / den)});
  }

  double slope_err = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const double a = gauss(rng), b = gauss(rng);
    std::vector<double> v(10), ts(10);
    for (int i = 0; i < 10; ++i) {
      ts[i] = 3.0 + 0.2 * i;
      v[i] = a * ts[i] + b;
    }
    slope_err = std::max(slope_err, std::abs(slope(v, ts) - a));
  }

  const bool pass = anchors_ok && worst < 1e-10 && slope_err < 1e-9;
  report(2, pass,
         fmt("windowing: anchor formula %s, stats delta %.2e, slope %.2e",
             anchors_ok ? "holds on 100 configs" : "BROKEN", worst,
             slope_err));
}

// ----------------------------------------------------------- criteria 3 and 4

struct TrendResult {
  std::vector<double> single_ccc;
  double multi_ccc_v = 0, multi_ccc_a = 0;
  double fusion_ccc_v = 0, fusion_ccc_a = 0;
  double seconds = 0;
};

std::vector<double> short_labels(const WindowedDataset& ds, Task task) {
  std::vector<double> y(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    y[i] = ds.label(i, "short", task);
  }
  return y;
}

TrendResult run_trend_benchmark() {
  const auto start = clock_type::now();
  SyntheticSpec spec;  // seed 7, 40 train + 10 val videos, 60 s each
  auto corpus = gen_synthetic(spec);
  std::vector<FrameSequence> train, val;
  for (auto& v : corpus) {
    (v.split == "train" ? train : val).push_back(std::move(v.seq));
  }

  WindowConfig wcfg;
  wcfg.fps = spec.fps;
  wcfg.stride = 0.5;
  const std::vector<Task> tasks = {Task::kValence, Task::kArousal,
                                   Task::kExpression};
  auto ds_train = extract_corpus(train, spec.schema, wcfg, tasks);
  auto ds_val = extract_corpus(val, spec.schema, wcfg, tasks);

  StackingConfig cfg;
  cfg.params.num_rounds = 30;
  cfg.params.num_leaves = 7;
  cfg.params.min_child_samples = 40;
  cfg.params.learning_rate = 0.15;
  cfg.feature_selection = false;
  cfg.folds = 3;
  StackingConfig expr_cfg = cfg;
  expr_cfg.params.num_rounds = 12;  // 7 trees per round; keep the run short

  auto plan = make_fold_plan(ds_train, cfg.folds, 17);

  TrendResult out;
  std::map<Task, MultiTermModel> multi;
  for (Task task : tasks) {
    const auto& task_cfg = task_is_classification(task) ? expr_cfg : cfg;
    std::vector<SingleTermModel> terms;
    for (const auto& term : ds_train.terms) {
      terms.push_back(
          train_single_term(ds_train, term.name, task, task_cfg, plan));
      if (task == Task::kValence) {
        out.single_ccc.push_back(
            ccc(predict_single_term(terms.back(), ds_val).data,
                short_labels(ds_val, task)));
      }
    }
    multi[task] =
        train_multi_term(ds_train, task, std::move(terms), task_cfg, plan);
  }
  out.multi_ccc_v = ccc(predict_multi_term(multi.at(Task::kValence), ds_val).data,
                        short_labels(ds_val, Task::kValence));
  out.multi_ccc_a = ccc(predict_multi_term(multi.at(Task::kArousal), ds_val).data,
                        short_labels(ds_val, Task::kArousal));

  auto fusion_v = train_fusion(Task::kValence, multi, ds_train, cfg, plan);
  auto fusion_a = train_fusion(Task::kArousal, multi, ds_train, cfg, plan);
  out.fusion_ccc_v = ccc(predict_fusion(fusion_v, multi, ds_val).data,
                         short_labels(ds_val, Task::kValence));
  out.fusion_ccc_a = ccc(predict_fusion(fusion_a, multi, ds_val).data,
                         short_labels(ds_val, Task::kArousal));
  out.seconds =
      std::chrono::duration<double>(clock_type::now() - start).count();
  return out;
}

void criteria_trends() {
  TrendResult r;
  try {
    r = run_trend_benchmark();
  } catch (const std::exception& e) {
    report(3, false, std::string("trend benchmark failed: ") + e.what());
    report(4, false, "trend benchmark failed");
    return;
  }

  const double best_single =
      *std::max_element(r.single_ccc.begin(), r.single_ccc.end());
  const bool pass3 =
      r.multi_ccc_v >= best_single + 0.02 && r.seconds < 300.0;
  report(3, pass3,
         fmt("multi-term CCC %.3f vs best single-term %.3f (short %.3f, "
             "middle %.3f, long %.3f), margin %.3f >= 0.02, %.0fs < 300s",
             r.multi_ccc_v, best_single, r.single_ccc[0], r.single_ccc[1],
             r.single_ccc[2], r.multi_ccc_v - best_single, r.seconds));

  const double multi_va = va_score(r.multi_ccc_v, r.multi_ccc_a);
  const double fusion_va = va_score(r.fusion_ccc_v, r.fusion_ccc_a);
  const bool pass4 = fusion_va >= multi_va - 0.01;
  report(4, pass4,
         fmt("fusion VA score %.3f vs multi-term %.3f, margin %.3f >= -0.01",
             fusion_va, multi_va, fusion_va - multi_va));
}

// ---------------------------------------------------------------- criterion 5

WindowedDataset balancing_ds(std::mt19937& rng, bool expression) {
  WindowedDataset ds;
  ds.terms = {{"short", 1.0}};
  ds.groups = {{"gaze", 1}};
  ds.tasks = expression
                 ? std::vector<Task>{Task::kExpression}
                 : std::vector<Task>{Task::kValence, Task::kArousal};
  std::uniform_int_distribution<int> cls(0, 6);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int n = 1 + rng() % 400;
  for (int i = 0; i < n; ++i) {
    WindowedSample s;
    s.video_id = "v" + std::to_string(i % 4);
    s.anchor = 1.0 + 0.2 * i;
    s.features = {static_cast<double>(i), 0, 0, 0};
    s.term_labels.resize(1);
    if (expression) {
      s.term_labels[0][Task::kExpression] = cls(rng);
    } else {
      s.term_labels[0][Task::kValence] = unif(rng);
      s.term_labels[0][Task::kArousal] = unif(rng);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void criterion_balancing() {
  std::mt19937 rng(505);
  VaGrid grid;
  bool ok = true;
  for (int rep = 0; rep < 50 && ok; ++rep) {
    auto eds = balancing_ds(rng, true);
    std::map<int, int> before, after;
    for (std::size_t i = 0; i < eds.samples.size(); ++i) {
      before[static_cast<int>(eds.label(i, "short", Task::kExpression))]++;
    }
    auto ebal = balance_expression(eds, rep);
    for (std::size_t i = 0; i < ebal.samples.size(); ++i) {
      after[static_cast<int>(ebal.label(i, "short", Task::kExpression))]++;
    }
    for (int c = 0; c < 7; ++c) {
      const int n = before.count(c) ? before[c] : 0;
      const int want = c == 0 ? (n + 1) / 2 : 2 * n;
      if ((after.count(c) ? after[c] : 0) != want) ok = false;
    }

    auto vds = balancing_ds(rng, false);
    std::map<int, int> regions;
    for (std::size_t i = 0; i < vds.samples.size(); ++i) {
      regions[va_region_index(vds.label(i, "short", Task::kValence),
                              vds.label(i, "short", Task::kArousal))]++;
    }
    std::size_t expect = 0;
    for (const auto& [r, n] : regions) {
      const bool center =
          std::find(grid.center_regions.begin(), grid.center_regions.end(),
                    r) != grid.center_regions.end();
      expect += center ? (n + 1) / 2 : 2 * static_cast<std::size_t>(n);
    }
    if (balance_va(vds, grid, rep).samples.size() != expect) ok = false;
  }
  report(5, ok,
         ok ? "balancing recounts hold on 50 random datasets"
            : "balancing recount MISMATCH");
}

// ---------------------------------------------------------------- criterion 6

void criterion_learner() {
  std::mt19937 rng(606);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = 400;
  Matrix x(n, 4);
  std::vector<double> y(n);
  for (auto& v : x.data) v = gauss(rng);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::sin(x.at(i, 0)) + 0.5 * x.at(i, 1) + 0.1 * gauss(rng);
  }

  GbdtParams params;
  params.num_rounds = 100;
  params.num_leaves = 8;
  params.min_child_samples = 10;
  params.early_stopping_rounds = 0;
  auto model = train_regressor(x, y, nullptr, nullptr, params);

  bool loss_ok = true;
  double prev = 1e300;
  GbdtModel probe = model;
  for (int r = 1; r <= static_cast<int>(model.trees.size()); ++r) {
    probe.best_iteration = r;
    auto p = probe.predict_values(x);
    double loss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      loss += (p[i] - y[i]) * (p[i] - y[i]);
    }
    if (loss > prev + 1e-9) loss_ok = false;
    prev = loss;
  }

  // depth-1 single round against the exhaustive stump oracle
  GbdtParams stump;
  stump.num_rounds = 1;
  stump.max_depth = 1;
  stump.num_leaves = 2;
  stump.min_child_samples = 1;
  stump.learning_rate = 1.0;
  stump.early_stopping_rounds = 0;
  auto smodel = train_regressor(x, y, nullptr, nullptr, stump);
  double mean = 0;
  for (double v : y) mean += v;
  mean /= n;
  double best_gain = 0, best_thresh = 0;
  int best_feature = -1;
  double gsum = 0;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = mean - y[i];
    gsum += g[i];
  }
  for (int f = 0; f < 4; ++f) {
    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = {x.at(i, f), i};
    std::sort(order.begin(), order.end());
    double gl = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      gl += g[order[i].second];
      if (order[i].first == order[i + 1].first) continue;
      const double nl = i + 1, nr = n - nl;
      const double gain =
          gl * gl / nl + (gsum - gl) * (gsum - gl) / nr - gsum * gsum / n;
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = f;
        best_thresh = (order[i].first + order[i + 1].first) / 2;
      }
    }
  }
  bool stump_ok = smodel.trees.size() == 1;
  if (stump_ok) {
    const auto& root = smodel.trees[0].nodes[0];
    stump_ok = root.feature == best_feature &&
               std::abs(root.threshold - best_thresh) < 1e-9 &&
               std::abs(root.split_gain - best_gain) < 1e-9;
  }

  // multiclass probabilities sum to one
  std::vector<double> yc(n);
  for (std::size_t i = 0; i < n; ++i) {
    yc[i] = std::clamp(static_cast<int>(3 + 2 * x.at(i, 0)), 0, 6);
  }
  GbdtParams cparams;
  cparams.num_rounds = 10;
  cparams.num_leaves = 4;
  cparams.min_child_samples = 5;
  auto cmodel = train_classifier(x, yc, nullptr, nullptr, cparams);
  auto probs = cmodel.predict(x);
  double worst_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (int c = 0; c < 7; ++c) s += probs.at(i, c);
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }

  // caps audited on the stored trees
  GbdtParams caps;
  caps.num_rounds = 20;
  caps.num_leaves = 7;
  caps.max_depth = 3;
  caps.min_child_samples = 25;
  auto capped = train_regressor(x, y, nullptr, nullptr, caps);
  bool caps_ok = true;
  for (const auto& tree : capped.trees) {
    if (tree.leaf_count() > 7 || tree.max_node_depth() > 3) caps_ok = false;
    for (const auto& node : tree.nodes) {
      if (node.feature == -1 && node.sample_count < 25) caps_ok = false;
    }
  }

  const bool pass = loss_ok && stump_ok && worst_sum < 1e-9 && caps_ok;
  report(6, pass,
         fmt("learner: loss %s, stump oracle %s, prob sum delta %.1e, caps %s",
             loss_ok ? "non-increasing" : "INCREASED",
             stump_ok ? "matched" : "MISMATCH", worst_sum,
             caps_ok ? "respected" : "VIOLATED"));
}

// ---------------------------------------------------------------- criterion 7

void criterion_pca() {
  std::mt19937 rng(707);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix data(200, 10);
  for (auto& v : data.data) v = gauss(rng);
  auto model = fit_pca(data, 10);

  double ortho = 0;
  for (std::size_t a = 0; a < 10; ++a) {
    for (std::size_t b = 0; b < 10; ++b) {
      double dot = 0;
      for (std::size_t c = 0; c < 10; ++c) {
        dot += model.components.at(a, c) * model.components.at(b, c);
      }
      ortho = std::max(ortho, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  }

  // power-iteration-with-deflation oracle on the sample covariance
  std::vector<double> mean(10, 0);
  for (std::size_t r = 0; r < 200; ++r) {
    for (int c = 0; c < 10; ++c) mean[c] += data.at(r, c);
  }
  for (auto& m : mean) m /= 200;
  Matrix cov(10, 10);
  for (std::size_t r = 0; r < 200; ++r) {
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        cov.at(i, j) +=
            (data.at(r, i) - mean[i]) * (data.at(r, j) - mean[j]) / 199;
      }
    }
  }
  double oracle_err = 0;
  Matrix work = cov;
  for (int comp = 0; comp < 3; ++comp) {
    std::vector<double> v(10);
    for (auto& e : v) e = gauss(rng);
    double lambda = 0;
    for (int it = 0; it < 20000; ++it) {
      std::vector<double> w(10, 0);
      for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) w[i] += work.at(i, j) * v[j];
      }
      double norm = 0;
      for (double e : w) norm += e * e;
      norm = std::sqrt(norm);
      for (int i = 0; i < 10; ++i) v[i] = w[i] / norm;
      lambda = norm;
    }
    oracle_err =
        std::max(oracle_err, std::abs(model.explained_variance[comp] - lambda));
    double dot = 0;
    for (int c = 0; c < 10; ++c) dot += model.components.at(comp, c) * v[c];
    const double sign = dot >= 0 ? 1 : -1;
    for (int c = 0; c < 10; ++c) {
      oracle_err = std::max(
          oracle_err, std::abs(model.components.at(comp, c) - sign * v[c]));
    }
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) work.at(i, j) -= lambda * v[i] * v[j];
    }
  }

  Matrix line(60, 2);
  for (std::size_t r = 0; r < 60; ++r) {
    const double t = gauss(rng);
    line.at(r, 0) = t;
    line.at(r, 1) = -3 * t;
  }
  auto lm = fit_pca(line, 1);
  double total = 0;
  for (int c = 0; c < 2; ++c) {
    double m = 0;
    for (std::size_t r = 0; r < 60; ++r) m += line.at(r, c);
    m /= 60;
    for (std::size_t r = 0; r < 60; ++r) {
      total += (line.at(r, c) - m) * (line.at(r, c) - m);
    }
  }
  total /= 59;
  const double collinear_err = std::abs(lm.explained_variance[0] - total);

  const bool pass = ortho < 1e-8 && oracle_err < 1e-6 && collinear_err < 1e-8;
  report(7, pass,
         fmt("pca: orthonormality %.1e, eigensolver oracle delta %.1e, "
             "collinear variance delta %.1e",
             ortho, oracle_err, collinear_err));
}

// ---------------------------------------------------------------- criterion 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void criterion_determinism() {
  const fs::path corpus = fs::temp_directory_path() / "affect_acc_corpus";
  const fs::path work1 = fs::temp_directory_path() / "affect_acc_work1";
  const fs::path work2 = fs::temp_directory_path() / "affect_acc_work2";
  for (const auto& d : {corpus, work1, work2}) fs::remove_all(d);

  std::ostringstream text;
  text << "term_middle = 4\nterm_long = 8\nstride = 1.0\nfolds = 3\n"
       << "num_rounds = 5\nnum_leaves = 4\nmin_child_samples = 5\n"
       << "feature_selection = false\nsynth_videos = 9\n"
       << "synth_val_videos = 2\nsynth_duration = 20\nsynth_fps = 4\n"
       << "corpus_dir = " << corpus.string() << "\n";

  bool pass = true;
  std::string detail = "two pipeline runs byte-identical; bundle reloads "
                       "bit-identically";
  try {
    for (const auto& work : {work1, work2}) {
      auto cfg = parse_config_text(text.str() + "work_dir = " +
                                   work.string() + "\n");
      if (work == work1) stage_synth(cfg);
      stage_extract(cfg);
      stage_balance(cfg);
      stage_train(cfg);
      stage_predict(cfg, "val");
    }
    for (const char* name :
         {"valence_val.csv", "arousal_val.csv", "expression_val.csv"}) {
      if (slurp(work1 / "predictions" / name) !=
          slurp(work2 / "predictions" / name)) {
        pass = false;
        detail = std::string("prediction CSVs differ: ") + name;
      }
    }

    auto bundle = load_bundle((work1 / "bundle").string());
    auto again = load_bundle((work1 / "bundle").string());
    auto ds = load_windowed((work1 / "extracted" / "val.csv").string(),
                            (work1 / "extracted" / "val.json").string());
    for (Task task : {Task::kValence, Task::kArousal, Task::kExpression}) {
      auto a = predict_fusion(bundle.fusion.at(task), bundle.multi_term, ds);
      auto b = predict_fusion(again.fusion.at(task), again.multi_term, ds);
      if (a.data != b.data) {
        pass = false;
        detail = "reloaded bundle predictions differ";
      }
    }
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("pipeline run failed: ") + e.what();
  }
  for (const auto& d : {corpus, work1, work2}) fs::remove_all(d);
  report(8, pass, detail);
}

// ---------------------------------------------------------------- criterion 9

void criterion_leakage() {
  std::mt19937 rng(909);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool pass = true;
  std::size_t entries = 0;
  for (int k : {3, 5}) {
    WindowedDataset ds;
    ds.terms = {{"short", 1.0}, {"middle", 6.0}, {"long", 12.0}};
    ds.groups = {{"gaze", 2}, {"pose", 2}};
    ds.tasks = {Task::kValence, Task::kArousal, Task::kExpression};
    for (int v = 0; v < 2 * k + 1; ++v) {
      for (int i = 0; i < 5; ++i) {
        WindowedSample s;
        s.video_id = "v" + std::to_string(v);
        s.anchor = 12.0 + 0.2 * i;
        s.features.resize(3 * 16);
        for (auto& f : s.features) f = gauss(rng);
        s.term_labels.resize(3);
        for (int t = 0; t < 3; ++t) {
          const double drive = s.features[t * 16];
          s.term_labels[t][Task::kValence] = std::clamp(drive, -1.0, 1.0);
          s.term_labels[t][Task::kArousal] = std::clamp(-drive, -1.0, 1.0);
          s.term_labels[t][Task::kExpression] =
              std::clamp(static_cast<int>(3 + drive), 0, 6);
        }
        ds.samples.push_back(std::move(s));
      }
    }
    auto plan = make_fold_plan(ds, k, 7);
    StackingConfig cfg;
    cfg.params.num_rounds = 6;
    cfg.params.num_leaves = 4;
    cfg.params.min_child_samples = 5;
    cfg.feature_selection = false;
    cfg.folds = k;

    AuditLog audit;
    std::map<Task, MultiTermModel> tasks;
    for (Task task : ds.tasks) {
      std::vector<SingleTermModel> terms;
      for (const auto& t : ds.terms) {
        terms.push_back(train_single_term(ds, t.name, task, cfg, plan, &audit));
      }
      tasks[task] =
          train_multi_term(ds, task, std::move(terms), cfg, plan, &audit);
    }
    train_fusion(Task::kValence, tasks, ds, cfg, plan, &audit);

    entries += audit.size();
    for (const auto& entry : audit) {
      const auto& seen = *entry.producer_videos;
      if (std::find(seen.begin(), seen.end(), entry.row_video) != seen.end()) {
        pass = false;
      }
    }
  }
  report(9, pass,
         fmt("leakage audit: %zu combiner-row/producer pairs checked for "
             "K in {3,5}, %s",
             entries, pass ? "no producer saw its row's video" : "LEAK"));
}

}  // namespace

int main() {
  criterion_metrics();
  criterion_windowing();
  criteria_trends();
  criterion_balancing();
  criterion_learner();
  criterion_pca();
  criterion_determinism();
  criterion_leakage();
  std::printf("%s (%d/9 criteria passed)\n",
              failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              9 - failures);
  return failures;
}
