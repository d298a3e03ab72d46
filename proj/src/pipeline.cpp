#include "affect/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "affect/csv.hpp"
#include "affect/ensemble.hpp"
#include "affect/error.hpp"
#include "affect/synthetic.hpp"

namespace fs = std::filesystem;

namespace affect {

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StageDependencyError("missing file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string extracted_csv(const PipelineConfig& cfg, const std::string& name) {
  return (fs::path(cfg.work_dir) / "extracted" / (name + ".csv")).string();
}
std::string extracted_json(const PipelineConfig& cfg, const std::string& name) {
  return (fs::path(cfg.work_dir) / "extracted" / (name + ".json")).string();
}
std::string balanced_csv(const PipelineConfig& cfg, const std::string& name) {
  return (fs::path(cfg.work_dir) / "balanced" / (name + ".csv")).string();
}
std::string balanced_json(const PipelineConfig& cfg, const std::string& name) {
  return (fs::path(cfg.work_dir) / "balanced" / (name + ".json")).string();
}

WindowedDataset load_stage_input(const std::string& csv_path,
                                 const std::string& manifest_path) {
  if (!fs::exists(csv_path) || !fs::exists(manifest_path)) {
    throw StageDependencyError("missing upstream artifact: " + csv_path);
  }
  return load_windowed(csv_path, manifest_path);
}

bool has_task(const PipelineConfig& cfg, Task task) {
  return std::find(cfg.tasks.begin(), cfg.tasks.end(), task) !=
         cfg.tasks.end();
}

Matrix group_frame_matrix(const std::vector<FrameSequence>& seqs, int group,
                          int dim) {
  std::size_t frames = 0;
  for (const auto& s : seqs) frames += s.frame_count();
  Matrix m(frames, dim);
  std::size_t row = 0;
  for (const auto& s : seqs) {
    for (std::size_t f = 0; f < s.frame_count(); ++f, ++row) {
      for (int c = 0; c < dim; ++c) {
        m.at(row, c) = s.features[group][f * dim + c];
      }
    }
  }
  return m;
}

}  // namespace

CorpusSplit load_corpus(const PipelineConfig& cfg) {
  const fs::path index_path = fs::path(cfg.corpus_dir) / "index.csv";
  std::ifstream index(index_path);
  if (!index) {
    throw StageDependencyError("missing corpus index: " + index_path.string());
  }
  std::string line;
  std::getline(index, line);
  if (line != "video_id,fps,split") {
    throw SchemaError("corpus index header must be video_id,fps,split");
  }

  CorpusSplit corpus;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, fps_str, split;
    std::getline(ss, id, ',');
    std::getline(ss, fps_str, ',');
    std::getline(ss, split, ',');
    const double fps = std::stod(fps_str);
    if (corpus.fps == 0.0) {
      corpus.fps = fps;
    } else if (corpus.fps != fps) {
      throw DataError("corpus mixes frame rates: " + id);
    }
    if (split != "train" && split != "val") {
      throw DataError("video " + id + " has unknown split " + split);
    }

    const fs::path vdir = fs::path(cfg.corpus_dir) / id;
    FrameSequence seq = load_feature_table((vdir / "features.csv").string(),
                                           cfg.data_schema, fps);
    seq.video_id = id;
    for (Task task : cfg.tasks) {
      const auto label_path =
          vdir / (std::string(task_name(task)) + ".csv");
      attach_labels(seq, task, load_labels(label_path.string(), task));
    }
    (split == "train" ? corpus.train : corpus.val).push_back(std::move(seq));
  }
  if (corpus.train.empty()) {
    throw EmptyInputError("corpus has no training videos");
  }
  return corpus;
}

nlohmann::json Preprocess::to_json() const {
  nlohmann::json j;
  for (const auto& g : raw_schema.groups) {
    j["raw_schema"].push_back({{"name", g.name}, {"dim", g.dim}});
  }
  for (const auto& g : model_schema.groups) {
    j["model_schema"].push_back({{"name", g.name}, {"dim", g.dim}});
  }
  j["mean"] = stats.mean;
  j["stddev"] = stats.stddev;
  j["constant"] = stats.constant;
  for (const auto& [group, model] : pca) j["pca"][group] = model.to_json();
  return j;
}

Preprocess Preprocess::from_json(const nlohmann::json& j) {
  Preprocess p;
  for (const auto& g : j.at("raw_schema")) {
    p.raw_schema.groups.push_back(
        {g.at("name").get<std::string>(), g.at("dim").get<int>()});
  }
  for (const auto& g : j.at("model_schema")) {
    p.model_schema.groups.push_back(
        {g.at("name").get<std::string>(), g.at("dim").get<int>()});
  }
  p.stats.mean = j.at("mean").get<std::vector<double>>();
  p.stats.stddev = j.at("stddev").get<std::vector<double>>();
  p.stats.constant = j.at("constant").get<std::vector<std::uint8_t>>();
  if (j.contains("pca")) {
    for (const auto& [group, model] : j.at("pca").items()) {
      p.pca[group] = PcaModel::from_json(model);
    }
  }
  return p;
}

Preprocess fit_preprocess(const PipelineConfig& cfg,
                          const std::vector<FrameSequence>& train) {
  Preprocess pre;
  pre.raw_schema = cfg.data_schema;
  pre.model_schema = cfg.data_schema;
  pre.stats = fit_standardizer(train, cfg.data_schema);

  if (!cfg.pca_dims.empty()) {
    std::vector<FrameSequence> standardized;
    standardized.reserve(train.size());
    for (const auto& s : train) {
      standardized.push_back(standardize(s, cfg.data_schema, pre.stats));
    }
    for (const auto& [group, dims] : cfg.pca_dims) {
      const int g = cfg.data_schema.group_index(group);
      Matrix frames = group_frame_matrix(standardized, g,
                                         cfg.data_schema.groups[g].dim);
      pre.pca[group] = fit_pca(frames, dims);
      pre.model_schema.groups[g].dim = dims;
    }
  }
  return pre;
}

FrameSequence apply_preprocess(const Preprocess& pre,
                               const FrameSequence& seq) {
  FrameSequence out = standardize(seq, pre.raw_schema, pre.stats);
  for (const auto& [group, model] : pre.pca) {
    const int g = pre.raw_schema.group_index(group);
    const int dim = pre.raw_schema.groups[g].dim;
    Matrix frames(out.frame_count(), dim);
    for (std::size_t f = 0; f < out.frame_count(); ++f) {
      for (int c = 0; c < dim; ++c) frames.at(f, c) = out.features[g][f * dim + c];
    }
    Matrix proj = transform_pca(model, frames);
    out.features[g] = proj.data;
  }
  return out;
}

void stage_synth(const PipelineConfig& cfg) {
  if (cfg.corpus_dir.empty()) throw ConfigError("corpus_dir is required");
  auto corpus = gen_synthetic(cfg.synth);
  write_corpus(corpus, cfg.synth.schema, cfg.corpus_dir);
  int train = 0, val = 0;
  for (const auto& v : corpus) (v.split == "train" ? train : val)++;
  std::cout << "synth: wrote " << train << " train + " << val
            << " val videos to " << cfg.corpus_dir << "\n";
  write_run_manifest(cfg, "synth", {});
}

void stage_extract(const PipelineConfig& cfg) {
  auto corpus = load_corpus(cfg);
  auto pre = fit_preprocess(cfg, corpus.train);
  const WindowConfig wcfg = cfg.window_config(corpus.fps);
  wcfg.validate();

  fs::create_directories(fs::path(cfg.work_dir) / "extracted");
  {
    std::ofstream out(extracted_json(cfg, "preprocess"));
    out << pre.to_json().dump() << '\n';
  }
  for (const char* name : {"train", "val"}) {
    const auto& seqs =
        std::string(name) == "train" ? corpus.train : corpus.val;
    std::vector<FrameSequence> prepped;
    prepped.reserve(seqs.size());
    for (const auto& s : seqs) prepped.push_back(apply_preprocess(pre, s));
    auto ds = extract_corpus(prepped, pre.model_schema, wcfg, cfg.tasks,
                             cfg.params.parallel);
    save_windowed(ds, extracted_csv(cfg, name), extracted_json(cfg, name));
    std::cout << "extract: " << name << " " << ds.samples.size()
              << " samples x " << ds.feature_dim() << " features\n";
  }
  write_run_manifest(cfg, "extract",
                     {(fs::path(cfg.corpus_dir) / "index.csv").string()});
}

void stage_balance(const PipelineConfig& cfg) {
  if (!cfg.balance) throw ConfigError("balance stage run with balance=false");
  auto train = load_stage_input(extracted_csv(cfg, "train"),
                                extracted_json(cfg, "train"));
  fs::create_directories(fs::path(cfg.work_dir) / "balanced");
  std::ostringstream report;

  if (has_task(cfg, Task::kValence) && has_task(cfg, Task::kArousal)) {
    VaGrid grid;
    grid.center_regions = cfg.balance_center_regions;
    auto balanced = balance_va(train, grid, cfg.balance_seed);
    save_windowed(balanced, balanced_csv(cfg, "va"), balanced_json(cfg, "va"));
    report << "va: " << train.samples.size() << " -> "
           << balanced.samples.size() << " samples\n";
  }
  if (has_task(cfg, Task::kExpression)) {
    auto balanced = balance_expression(train, cfg.balance_seed);
    save_windowed(balanced, balanced_csv(cfg, "expr"),
                  balanced_json(cfg, "expr"));
    std::vector<int> before(kExpressionClasses, 0),
        after(kExpressionClasses, 0);
    for (std::size_t i = 0; i < train.samples.size(); ++i) {
      before[static_cast<int>(train.label(i, "short", Task::kExpression))]++;
    }
    for (std::size_t i = 0; i < balanced.samples.size(); ++i) {
      after[static_cast<int>(
          balanced.label(i, "short", Task::kExpression))]++;
    }
    for (int c = 0; c < kExpressionClasses; ++c) {
      report << "expr class " << c << ": " << before[c] << " -> " << after[c]
             << "\n";
    }
  }

  std::ofstream out(fs::path(cfg.work_dir) / "balanced" / "report.txt");
  out << report.str();
  std::cout << report.str();
  write_run_manifest(cfg, "balance", {extracted_csv(cfg, "train")});
}

namespace {

WindowedDataset task_train_dataset(const PipelineConfig& cfg, Task task) {
  if (cfg.balance) {
    const std::string name = task_is_classification(task) ? "expr" : "va";
    return load_stage_input(balanced_csv(cfg, name), balanced_json(cfg, name));
  }
  return load_stage_input(extracted_csv(cfg, "train"),
                          extracted_json(cfg, "train"));
}

}  // namespace

void stage_train(const PipelineConfig& cfg) {
  auto extracted = load_stage_input(extracted_csv(cfg, "train"),
                                    extracted_json(cfg, "train"));
  const FoldPlan plan = make_fold_plan(extracted, cfg.folds, cfg.fold_seed);
  const StackingConfig stacking = cfg.stacking_config();

  EnsembleBundle bundle;
  bundle.terms = extracted.terms;
  bundle.groups = extracted.groups;
  bundle.plan = plan;

  std::map<Task, WindowedDataset> task_ds;
  for (Task task : cfg.tasks) {
    task_ds[task] = task_train_dataset(cfg, task);
    std::vector<SingleTermModel> term_models;
    for (const auto& term : extracted.terms) {
      std::cout << "train: " << task_name(task) << " " << term.name << "\n";
      term_models.push_back(
          train_single_term(task_ds[task], term.name, task, stacking, plan));
    }
    bundle.multi_term[task] = train_multi_term(
        task_ds[task], task, std::move(term_models), stacking, plan);
    std::cout << "train: " << task_name(task) << " multi-term done\n";
  }

  const bool all_tasks = bundle.multi_term.size() == 3;
  if (all_tasks) {
    for (Task task : cfg.tasks) {
      bundle.fusion[task] = train_fusion(task, bundle.multi_term,
                                         task_ds[task], stacking, plan);
      std::cout << "train: " << task_name(task) << " fusion done\n";
    }
  } else {
    std::cout << "train: fusion skipped (needs all three tasks)\n";
  }

  save_bundle(bundle, (fs::path(cfg.work_dir) / "bundle").string());
  write_run_manifest(cfg, "train", {extracted_csv(cfg, "train")});
}

namespace {

EnsembleBundle load_bundle_checked(const PipelineConfig& cfg) {
  const auto dir = fs::path(cfg.work_dir) / "bundle";
  if (!fs::exists(dir / "manifest.json")) {
    throw StageDependencyError("missing model bundle: " + dir.string());
  }
  return load_bundle(dir.string());
}

Matrix bundle_predict(const EnsembleBundle& bundle, Task task,
                      const WindowedDataset& ds) {
  if (auto it = bundle.fusion.find(task); it != bundle.fusion.end()) {
    return predict_fusion(it->second, bundle.multi_term, ds);
  }
  return predict_multi_term(bundle.multi_term.at(task), ds);
}

}  // namespace

void stage_predict(const PipelineConfig& cfg, const std::string& split) {
  auto bundle = load_bundle_checked(cfg);
  auto ds = load_stage_input(extracted_csv(cfg, split),
                             extracted_json(cfg, split));
  fs::create_directories(fs::path(cfg.work_dir) / "predictions");

  for (const auto& [task, model] : bundle.multi_term) {
    Matrix preds = bundle_predict(bundle, task, ds);
    const auto path = fs::path(cfg.work_dir) / "predictions" /
                      (std::string(task_name(task)) + "_" + split + ".csv");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    if (task_is_classification(task)) {
      out << "video_id,anchor,class";
      for (int c = 0; c < kExpressionClasses; ++c) out << ",p" << c;
      out << '\n';
      for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        int best = 0;
        for (int c = 1; c < kExpressionClasses; ++c) {
          if (preds.at(i, c) > preds.at(i, best)) best = c;
        }
        out << ds.samples[i].video_id << ','
            << csv::format_value(ds.samples[i].anchor) << ',' << best;
        for (int c = 0; c < kExpressionClasses; ++c) {
          out << ',' << csv::format_value(preds.at(i, c));
        }
        out << '\n';
      }
    } else {
      out << "video_id,anchor,prediction\n";
      for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        out << ds.samples[i].video_id << ','
            << csv::format_value(ds.samples[i].anchor) << ','
            << csv::format_value(preds.at(i, 0)) << '\n';
      }
    }
    std::cout << "predict: wrote " << path.string() << "\n";
  }
  write_run_manifest(cfg, "predict", {extracted_csv(cfg, split)});
}

EvalReport stage_evaluate(const PipelineConfig& cfg,
                          const std::string& split) {
  auto bundle = load_bundle_checked(cfg);
  auto ds = load_stage_input(extracted_csv(cfg, split),
                             extracted_json(cfg, split));
  if (ds.samples.empty()) throw EmptyInputError("no samples in " + split);

  EvalReport report;
  std::map<Task, Matrix> preds;
  for (const auto& [task, model] : bundle.multi_term) {
    preds[task] = bundle_predict(bundle, task, ds);
  }

  std::vector<double> truth(ds.samples.size());
  if (preds.contains(Task::kValence)) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      truth[i] = ds.label(i, "short", Task::kValence);
    }
    report.ccc_valence = ccc(preds.at(Task::kValence).data, truth);
    report.va_samples = ds.samples.size();
  }
  if (preds.contains(Task::kArousal)) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      truth[i] = ds.label(i, "short", Task::kArousal);
    }
    report.ccc_arousal = ccc(preds.at(Task::kArousal).data, truth);
    report.va_samples = ds.samples.size();
  }
  if (preds.contains(Task::kValence) && preds.contains(Task::kArousal)) {
    report.va_score = va_score(report.ccc_valence, report.ccc_arousal);
  }
  if (preds.contains(Task::kExpression)) {
    const Matrix& p = preds.at(Task::kExpression);
    std::vector<int> pred_cls(ds.samples.size()), truth_cls(ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      int best = 0;
      for (int c = 1; c < kExpressionClasses; ++c) {
        if (p.at(i, c) > p.at(i, best)) best = c;
      }
      pred_cls[i] = best;
      truth_cls[i] =
          static_cast<int>(ds.label(i, "short", Task::kExpression));
    }
    auto score = expression_score(pred_cls, truth_cls);
    report.macro_f1 = score.macro_f1;
    report.accuracy = score.accuracy;
    report.expr_score = score.expr_score;
    report.expr_samples = ds.samples.size();
  }

  const std::string text = format_report(report);
  std::ofstream out(fs::path(cfg.work_dir) / ("report_" + split + ".txt"));
  out << text;
  std::cout << text;
  write_run_manifest(cfg, "evaluate", {extracted_csv(cfg, split)});
  return report;
}

void stage_gridsearch(const PipelineConfig& cfg, Task task) {
  auto train = load_stage_input(extracted_csv(cfg, "train"),
                                extracted_json(cfg, "train"));
  auto val = load_stage_input(extracted_csv(cfg, "val"),
                              extracted_json(cfg, "val"));
  if (val.samples.empty()) {
    throw EmptyInputError("gridsearch needs a non-empty validation split");
  }

  auto to_matrix = [](const WindowedDataset& ds) {
    Matrix m(ds.samples.size(), ds.feature_dim());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      for (int c = 0; c < ds.feature_dim(); ++c) {
        m.at(i, c) = ds.samples[i].features[c];
      }
    }
    return m;
  };
  auto labels = [&](const WindowedDataset& ds) {
    std::vector<double> y(ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      y[i] = ds.label(i, "short", task);
    }
    return y;
  };

  const Objective objective = task_is_classification(task)
                                  ? Objective::kMulticlass7
                                  : Objective::kRegression;
  const EvalFn metric = task_is_classification(task)
                            ? default_classification_metric()
                            : default_regression_metric();
  auto result = grid_search(cfg.grid, cfg.params, to_matrix(train),
                            labels(train), to_matrix(val), labels(val),
                            objective, metric);

  csv::Table table;
  table.header = {"num_leaves", "learning_rate", "max_depth",
                  "min_child_samples", "score"};
  for (const auto& cell : result.cells) {
    table.rows.push_back({static_cast<double>(cell.params.num_leaves),
                          cell.params.learning_rate,
                          static_cast<double>(cell.params.max_depth),
                          static_cast<double>(cell.params.min_child_samples),
                          cell.score});
  }
  const auto path = fs::path(cfg.work_dir) /
                    ("gridsearch_" + std::string(task_name(task)) + ".csv");
  csv::write_table(path.string(), table);
  const auto& best = result.cells[result.best];
  std::cout << "gridsearch: best score " << best.score << " at num_leaves="
            << best.params.num_leaves << " learning_rate="
            << best.params.learning_rate << " max_depth="
            << best.params.max_depth << " min_child_samples="
            << best.params.min_child_samples << "\n";
  write_run_manifest(cfg, "gridsearch", {extracted_csv(cfg, "train")});
}

void write_run_manifest(const PipelineConfig& cfg, const std::string& command,
                        const std::vector<std::string>& inputs) {
  fs::create_directories(cfg.work_dir);
  const fs::path path = fs::path(cfg.work_dir) / "runs.json";
  nlohmann::json runs = nlohmann::json::array();
  if (fs::exists(path)) {
    std::ifstream in(path);
    runs = nlohmann::json::parse(in);
  }
  nlohmann::json entry;
  entry["command"] = command;
  entry["config_hash"] = fnv1a(cfg.source_text);
  entry["seeds"] = {{"learner", cfg.params.seed},
                    {"folds", cfg.fold_seed},
                    {"balance", cfg.balance_seed},
                    {"synth", cfg.synth.seed}};
  for (const auto& input : inputs) {
    entry["input_digests"][input] = fnv1a(slurp(input));
  }
  runs.push_back(entry);
  std::ofstream out(path);
  out << runs.dump(2) << '\n';
}

}  // namespace affect
