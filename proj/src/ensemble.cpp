#include "affect/ensemble.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "affect/error.hpp"

namespace fs = std::filesystem;

namespace affect {

int FoldPlan::fold_of(const std::string& video_id) const {
  auto it = video_fold.find(video_id);
  if (it == video_fold.end()) {
    throw DataError("fold plan has no entry for video " + video_id);
  }
  return it->second;
}

std::vector<int> FoldPlan::sample_folds(const WindowedDataset& ds) const {
  std::vector<int> folds(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    folds[i] = fold_of(ds.samples[i].video_id);
  }
  return folds;
}

nlohmann::json FoldPlan::to_json() const {
  return {{"k", k}, {"seed", seed}, {"video_fold", video_fold}};
}

FoldPlan FoldPlan::from_json(const nlohmann::json& j) {
  FoldPlan p;
  p.k = j.at("k").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.video_fold = j.at("video_fold").get<std::map<std::string, int>>();
  return p;
}

FoldPlan make_fold_plan(const WindowedDataset& ds, int k, std::uint64_t seed) {
  std::set<std::string> unique;
  for (const auto& s : ds.samples) unique.insert(s.video_id);
  if (static_cast<int>(unique.size()) < k) {
    throw ConfigError("fold plan: " + std::to_string(unique.size()) +
                      " videos is fewer than " + std::to_string(k) +
                      " folds");
  }
  std::vector<std::string> videos(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  std::shuffle(videos.begin(), videos.end(), rng);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    plan.video_fold[videos[i]] = static_cast<int>(i % k);
  }
  return plan;
}

nlohmann::json FoldedGbdt::to_json() const {
  nlohmann::json j;
  j["full"] = full.to_json();
  j["per_fold"] = nlohmann::json::array();
  for (const auto& m : per_fold) j["per_fold"].push_back(m.to_json());
  j["fold_train_videos"] = fold_train_videos;
  return j;
}

FoldedGbdt FoldedGbdt::from_json(const nlohmann::json& j) {
  FoldedGbdt f;
  f.full = GbdtModel::from_json(j.at("full"));
  for (const auto& m : j.at("per_fold")) {
    f.per_fold.push_back(GbdtModel::from_json(m));
  }
  f.fold_train_videos =
      j.at("fold_train_videos").get<std::vector<std::vector<std::string>>>();
  return f;
}

namespace {

Objective task_objective(Task task) {
  return task_is_classification(task) ? Objective::kMulticlass7
                                      : Objective::kRegression;
}

EvalFn task_metric(Task task) {
  return task_is_classification(task) ? default_classification_metric()
                                      : default_regression_metric();
}

Matrix subset_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), x.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      out.at(r, c) = x.at(rows[r], c);
    }
  }
  return out;
}

// Full-data refit plus K fold-excluded models.
FoldedGbdt train_folded(const Matrix& x, const std::vector<double>& y,
                        const std::vector<int>& folds,
                        const std::vector<std::string>& videos, int k,
                        const GbdtParams& params, Task task) {
  FoldedGbdt out;
  out.full = train_gbdt(x, y, nullptr, nullptr, params, task_objective(task),
                        task_metric(task));
  out.per_fold.resize(k);
  out.fold_train_videos.resize(k);
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> keep;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (folds[i] != f) {
        keep.push_back(i);
        seen.insert(videos[i]);
      }
    }
    if (keep.empty()) {
      throw DataError("fold " + std::to_string(f) +
                      " holds every training sample");
    }
    Matrix xf = subset_rows(x, keep);
    std::vector<double> yf(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) yf[i] = y[keep[i]];
    out.per_fold[f] = train_gbdt(xf, yf, nullptr, nullptr, params,
                                 task_objective(task), task_metric(task));
    out.fold_train_videos[f].assign(seen.begin(), seen.end());
  }
  return out;
}

// Out-of-fold predictions: row i comes from per_fold[folds[i]].
Matrix oof_predict_folded(const FoldedGbdt& model, const Matrix& x,
                          const std::vector<int>& folds) {
  const std::size_t width = model.full.trees_per_round();
  Matrix out(x.rows, width);
  const int k = static_cast<int>(model.per_fold.size());
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      if (folds[i] == f) rows.push_back(i);
    }
    if (rows.empty()) continue;
    Matrix preds = model.per_fold[f].predict(subset_rows(x, rows));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        out.at(rows[r], c) = preds.at(r, c);
      }
    }
  }
  return out;
}

Matrix block_matrix(const WindowedDataset& ds, int term, int group) {
  auto [lo, hi] = ds.block_range(term, group);
  Matrix out(ds.samples.size(), hi - lo);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    for (int c = lo; c < hi; ++c) {
      out.at(i, c - lo) = ds.samples[i].features[c];
    }
  }
  return out;
}

std::vector<double> label_vector(const WindowedDataset& ds,
                                 const std::string& term, Task task) {
  std::vector<double> y(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    y[i] = ds.label(i, term, task);
  }
  return y;
}

std::vector<std::string> video_vector(const WindowedDataset& ds) {
  std::vector<std::string> v(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    v[i] = ds.samples[i].video_id;
  }
  return v;
}

void append_columns(Matrix& dest, const Matrix& src, std::size_t col_offset) {
  for (std::size_t r = 0; r < src.rows; ++r) {
    for (std::size_t c = 0; c < src.cols; ++c) {
      dest.at(r, col_offset + c) = src.at(r, c);
    }
  }
}

// Records that each training row's stacking inputs came from fold-excluded
// producers; the audit test checks row_video against producer_videos.
void log_combiner_rows(
    AuditLog* audit, const std::string& name,
    const std::vector<std::string>& videos, const std::vector<int>& folds,
    const std::vector<const FoldedGbdt*>& producers) {
  if (!audit) return;
  for (std::size_t i = 0; i < videos.size(); ++i) {
    for (const FoldedGbdt* p : producers) {
      audit->push_back(
          {name, videos[i], &p->fold_train_videos[folds[i]]});
    }
  }
}

}  // namespace

SingleTermModel train_single_term(const WindowedDataset& ds,
                                  const std::string& term, Task task,
                                  const StackingConfig& cfg,
                                  const FoldPlan& plan, AuditLog* audit) {
  const int term_idx = [&] {
    for (std::size_t t = 0; t < ds.terms.size(); ++t) {
      if (ds.terms[t].name == term) return static_cast<int>(t);
    }
    throw ConfigError("term not in dataset: " + term);
  }();
  if (ds.samples.empty()) throw EmptyInputError("train_single_term: no samples");
  if (ds.groups.empty()) throw ConfigError("train_single_term: no groups");

  const auto y = label_vector(ds, term, task);
  const auto folds = plan.sample_folds(ds);
  const auto videos = video_vector(ds);
  const int width = task_is_classification(task) ? 7 : 1;

  SingleTermModel model;
  model.task = task;
  model.term = term;

  Matrix stack(ds.samples.size(), ds.groups.size() * width);
  std::vector<const FoldedGbdt*> producers;

  for (std::size_t g = 0; g < ds.groups.size(); ++g) {
    GroupSubModel sub;
    sub.group = ds.groups[g].name;
    Matrix xg = block_matrix(ds, term_idx, static_cast<int>(g));

    if (cfg.feature_selection) {
      GbdtModel probe = train_gbdt(xg, y, nullptr, nullptr, cfg.params,
                                   task_objective(task), task_metric(task));
      sub.selected_features =
          select_top_features(feature_importance(probe), cfg.feature_fraction);
      xg = select_columns(xg, sub.selected_features);
    } else {
      sub.selected_features.resize(xg.cols);
      for (std::size_t c = 0; c < xg.cols; ++c) {
        sub.selected_features[c] = static_cast<int>(c);
      }
    }

    sub.model = train_folded(xg, y, folds, videos, plan.k, cfg.params, task);
    append_columns(stack, oof_predict_folded(sub.model, xg, folds), g * width);
    model.subs.push_back(std::move(sub));
  }

  for (const auto& sub : model.subs) producers.push_back(&sub.model);
  log_combiner_rows(audit, task_name(task) + ("/" + term) + "/combiner",
                    videos, folds, producers);

  model.combiner =
      train_folded(stack, y, folds, videos, plan.k, cfg.params, task);
  return model;
}

namespace {

Matrix single_term_inputs(const SingleTermModel& model,
                          const WindowedDataset& ds) {
  const int term_idx = [&] {
    for (std::size_t t = 0; t < ds.terms.size(); ++t) {
      if (ds.terms[t].name == model.term) return static_cast<int>(t);
    }
    throw SchemaError("dataset lacks term " + model.term);
  }();
  const int width = model.output_width();
  Matrix stack(ds.samples.size(), model.subs.size() * width);
  for (std::size_t g = 0; g < model.subs.size(); ++g) {
    if (ds.groups[g].name != model.subs[g].group) {
      throw SchemaError("group mismatch: dataset has " + ds.groups[g].name +
                        ", model expects " + model.subs[g].group);
    }
    Matrix xg = select_columns(block_matrix(ds, term_idx, static_cast<int>(g)),
                               model.subs[g].selected_features);
    append_columns(stack, model.subs[g].model.full.predict(xg), g * width);
  }
  return stack;
}

Matrix single_term_oof_inputs(const SingleTermModel& model,
                              const WindowedDataset& ds,
                              const std::vector<int>& folds) {
  const int term_idx = [&] {
    for (std::size_t t = 0; t < ds.terms.size(); ++t) {
      if (ds.terms[t].name == model.term) return static_cast<int>(t);
    }
    throw SchemaError("dataset lacks term " + model.term);
  }();
  const int width = model.output_width();
  Matrix stack(ds.samples.size(), model.subs.size() * width);
  for (std::size_t g = 0; g < model.subs.size(); ++g) {
    Matrix xg = select_columns(block_matrix(ds, term_idx, static_cast<int>(g)),
                               model.subs[g].selected_features);
    append_columns(stack, oof_predict_folded(model.subs[g].model, xg, folds),
                   g * width);
  }
  return stack;
}

}  // namespace

Matrix predict_single_term(const SingleTermModel& model,
                           const WindowedDataset& ds) {
  return model.combiner.full.predict(single_term_inputs(model, ds));
}

Matrix oof_predict_single_term(const SingleTermModel& model,
                               const WindowedDataset& ds,
                               const FoldPlan& plan) {
  const auto folds = plan.sample_folds(ds);
  return oof_predict_folded(model.combiner,
                            single_term_oof_inputs(model, ds, folds), folds);
}

MultiTermModel train_multi_term(const WindowedDataset& ds, Task task,
                                std::vector<SingleTermModel> term_models,
                                const StackingConfig& cfg,
                                const FoldPlan& plan, AuditLog* audit) {
  if (term_models.empty()) {
    throw ConfigError("train_multi_term: no term models");
  }
  for (const auto& tm : term_models) {
    if (tm.task != task) {
      throw ConfigError("train_multi_term: term model task mismatch");
    }
    if (ds.terms.size() == 0 ||
        std::none_of(ds.terms.begin(), ds.terms.end(),
                     [&](const TermSpec& t) { return t.name == tm.term; })) {
      throw ConfigError("train_multi_term: dataset lacks term " + tm.term);
    }
  }

  const auto folds = plan.sample_folds(ds);
  const auto videos = video_vector(ds);
  const int width = task_is_classification(task) ? 7 : 1;

  Matrix stack(ds.samples.size(), term_models.size() * width);
  std::vector<const FoldedGbdt*> producers;
  for (std::size_t t = 0; t < term_models.size(); ++t) {
    append_columns(stack,
                   oof_predict_single_term(term_models[t], ds, plan),
                   t * width);
    for (const auto& sub : term_models[t].subs) producers.push_back(&sub.model);
    producers.push_back(&term_models[t].combiner);
  }

  // Supervision is always the short-term label.
  const auto y = label_vector(ds, "short", task);
  log_combiner_rows(audit,
                    std::string(task_name(task)) + "/multi_term/combiner",
                    videos, folds, producers);

  MultiTermModel model;
  model.task = task;
  model.term_models = std::move(term_models);
  model.combiner =
      train_folded(stack, y, folds, videos, plan.k, cfg.params, task);
  return model;
}

namespace {

Matrix multi_term_inputs(const MultiTermModel& model,
                         const WindowedDataset& ds) {
  const int width = task_is_classification(model.task) ? 7 : 1;
  Matrix stack(ds.samples.size(), model.term_models.size() * width);
  for (std::size_t t = 0; t < model.term_models.size(); ++t) {
    append_columns(stack, predict_single_term(model.term_models[t], ds),
                   t * width);
  }
  return stack;
}

Matrix multi_term_oof_inputs(const MultiTermModel& model,
                             const WindowedDataset& ds, const FoldPlan& plan) {
  const int width = task_is_classification(model.task) ? 7 : 1;
  Matrix stack(ds.samples.size(), model.term_models.size() * width);
  for (std::size_t t = 0; t < model.term_models.size(); ++t) {
    append_columns(stack,
                   oof_predict_single_term(model.term_models[t], ds, plan),
                   t * width);
  }
  return stack;
}

void collect_producers(const MultiTermModel& model,
                       std::vector<const FoldedGbdt*>& producers) {
  for (const auto& tm : model.term_models) {
    for (const auto& sub : tm.subs) producers.push_back(&sub.model);
    producers.push_back(&tm.combiner);
  }
  producers.push_back(&model.combiner);
}

}  // namespace

Matrix predict_multi_term(const MultiTermModel& model,
                          const WindowedDataset& ds) {
  return model.combiner.full.predict(multi_term_inputs(model, ds));
}

Matrix oof_predict_multi_term(const MultiTermModel& model,
                              const WindowedDataset& ds,
                              const FoldPlan& plan) {
  const auto folds = plan.sample_folds(ds);
  return oof_predict_folded(model.combiner,
                            multi_term_oof_inputs(model, ds, plan), folds);
}

namespace {

const std::vector<Task> kTaskOrder = {Task::kValence, Task::kArousal,
                                      Task::kExpression};

Matrix fusion_inputs(Task target, const std::map<Task, MultiTermModel>& tasks,
                     const WindowedDataset& ds, const FoldPlan* plan,
                     std::vector<const FoldedGbdt*>* producers) {
  const auto& target_model = tasks.at(target);
  const int target_width = task_is_classification(target) ? 7 : 1;

  std::size_t total = target_model.term_models.size() * target_width;
  std::vector<Task> others;
  for (Task t : kTaskOrder) {
    if (t == target) continue;
    if (!tasks.contains(t)) {
      throw ConfigError(std::string("fusion: missing multi-term model for ") +
                        task_name(t));
    }
    others.push_back(t);
    total += task_is_classification(t) ? 7 : 1;
  }

  Matrix stack(ds.samples.size(), total);
  std::size_t offset = 0;
  for (const auto& tm : target_model.term_models) {
    Matrix p = plan ? oof_predict_single_term(tm, ds, *plan)
                    : predict_single_term(tm, ds);
    append_columns(stack, p, offset);
    offset += target_width;
    if (producers) {
      for (const auto& sub : tm.subs) producers->push_back(&sub.model);
      producers->push_back(&tm.combiner);
    }
  }
  for (Task t : others) {
    const auto& other = tasks.at(t);
    Matrix p = plan ? oof_predict_multi_term(other, ds, *plan)
                    : predict_multi_term(other, ds);
    append_columns(stack, p, offset);
    offset += task_is_classification(t) ? 7 : 1;
    if (producers) collect_producers(other, *producers);
  }
  return stack;
}

}  // namespace

FusionModel train_fusion(Task target,
                         const std::map<Task, MultiTermModel>& all_tasks,
                         const WindowedDataset& target_ds,
                         const StackingConfig& cfg, const FoldPlan& plan,
                         AuditLog* audit) {
  std::vector<const FoldedGbdt*> producers;
  Matrix stack = fusion_inputs(target, all_tasks, target_ds, &plan,
                               &producers);
  const auto y = label_vector(target_ds, "short", target);
  log_combiner_rows(audit, std::string(task_name(target)) + "/fusion",
                    video_vector(target_ds), plan.sample_folds(target_ds),
                    producers);

  FusionModel model;
  model.task = target;
  for (Task t : kTaskOrder) {
    if (t != target) model.other_tasks.push_back(t);
  }
  model.combiner = train_gbdt(stack, y, nullptr, nullptr, cfg.params,
                              task_objective(target), task_metric(target));
  return model;
}

Matrix predict_fusion(const FusionModel& model,
                      const std::map<Task, MultiTermModel>& all_tasks,
                      const WindowedDataset& ds) {
  Matrix stack = fusion_inputs(model.task, all_tasks, ds, nullptr, nullptr);
  return model.combiner.predict(stack);
}

namespace {

nlohmann::json group_sub_to_json(const GroupSubModel& sub) {
  return {{"group", sub.group},
          {"selected_features", sub.selected_features},
          {"model", sub.model.to_json()}};
}

GroupSubModel group_sub_from_json(const nlohmann::json& j) {
  GroupSubModel sub;
  sub.group = j.at("group").get<std::string>();
  sub.selected_features = j.at("selected_features").get<std::vector<int>>();
  sub.model = FoldedGbdt::from_json(j.at("model"));
  return sub;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump() << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw StageDependencyError("missing bundle file: " + path.string());
  return nlohmann::json::parse(in);
}

}  // namespace

void save_bundle(const EnsembleBundle& bundle, const std::string& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  for (const auto& t : bundle.terms) {
    manifest["terms"].push_back({{"name", t.name}, {"seconds", t.seconds}});
  }
  for (const auto& g : bundle.groups) {
    manifest["groups"].push_back({{"name", g.name}, {"dim", g.dim}});
  }
  manifest["plan"] = bundle.plan.to_json();
  manifest["tasks"] = nlohmann::json::array();

  for (const auto& [task, model] : bundle.multi_term) {
    const std::string tdir = std::string(task_name(task));
    manifest["tasks"].push_back(tdir);
    nlohmann::json term_names = nlohmann::json::array();
    for (const auto& tm : model.term_models) {
      term_names.push_back(tm.term);
      for (const auto& sub : tm.subs) {
        write_json(fs::path(dir) / tdir / tm.term / (sub.group + ".json"),
                   group_sub_to_json(sub));
      }
      write_json(fs::path(dir) / tdir / tm.term / "combiner.json",
                 tm.combiner.to_json());
    }
    manifest["term_models"][tdir] = term_names;
    write_json(fs::path(dir) / tdir / "multi_term_combiner.json",
               model.combiner.to_json());
  }
  for (const auto& [task, fusion] : bundle.fusion) {
    const std::string tdir = std::string(task_name(task));
    nlohmann::json fj;
    fj["task"] = task_name(task);
    fj["other_tasks"] = nlohmann::json::array();
    for (Task t : fusion.other_tasks) fj["other_tasks"].push_back(task_name(t));
    fj["combiner"] = fusion.combiner.to_json();
    write_json(fs::path(dir) / tdir / "fusion.json", fj);
    manifest["fusion_tasks"].push_back(tdir);
  }
  write_json(fs::path(dir) / "manifest.json", manifest);
}

EnsembleBundle load_bundle(const std::string& dir) {
  auto manifest = read_json(fs::path(dir) / "manifest.json");

  EnsembleBundle bundle;
  for (const auto& t : manifest.at("terms")) {
    bundle.terms.push_back(
        {t.at("name").get<std::string>(), t.at("seconds").get<double>()});
  }
  for (const auto& g : manifest.at("groups")) {
    bundle.groups.push_back(
        {g.at("name").get<std::string>(), g.at("dim").get<int>()});
  }
  bundle.plan = FoldPlan::from_json(manifest.at("plan"));

  for (const auto& tj : manifest.at("tasks")) {
    const std::string tdir = tj.get<std::string>();
    const Task task = task_from_name(tdir);
    MultiTermModel model;
    model.task = task;
    for (const auto& term : manifest.at("term_models").at(tdir)) {
      SingleTermModel tm;
      tm.task = task;
      tm.term = term.get<std::string>();
      for (const auto& g : bundle.groups) {
        tm.subs.push_back(group_sub_from_json(
            read_json(fs::path(dir) / tdir / tm.term / (g.name + ".json"))));
      }
      tm.combiner = FoldedGbdt::from_json(
          read_json(fs::path(dir) / tdir / tm.term / "combiner.json"));
      model.term_models.push_back(std::move(tm));
    }
    model.combiner = FoldedGbdt::from_json(
        read_json(fs::path(dir) / tdir / "multi_term_combiner.json"));
    bundle.multi_term[task] = std::move(model);
  }

  if (manifest.contains("fusion_tasks")) {
    for (const auto& tj : manifest.at("fusion_tasks")) {
      const std::string tdir = tj.get<std::string>();
      auto fj = read_json(fs::path(dir) / tdir / "fusion.json");
      FusionModel fusion;
      fusion.task = task_from_name(fj.at("task").get<std::string>());
      for (const auto& o : fj.at("other_tasks")) {
        fusion.other_tasks.push_back(task_from_name(o.get<std::string>()));
      }
      fusion.combiner = GbdtModel::from_json(fj.at("combiner"));
      bundle.fusion[fusion.task] = fusion;
    }
  }
  return bundle;
}

}  // namespace affect
