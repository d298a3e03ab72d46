#include "affect/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "affect/csv.hpp"
#include "affect/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace affect {

double WindowConfig::longest() const {
  double w = 0.0;
  for (const auto& t : terms) w = std::max(w, t.seconds);
  return w;
}

int WindowConfig::term_index(const std::string& name) const {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void WindowConfig::validate() const {
  if (fps <= 0) throw ConfigError("window config: fps must be positive");
  if (stride <= 0) throw ConfigError("window config: stride must be positive");
  if (terms.empty()) throw ConfigError("window config: no terms");
  if (term_index("short") < 0) {
    throw ConfigError("window config: term set must contain \"short\"");
  }
  std::set<std::string> seen;
  for (const auto& t : terms) {
    if (t.seconds <= 0) {
      throw ConfigError("window config: term " + t.name +
                        " has non-positive length");
    }
    if (std::lround(t.seconds * fps) < 2) {
      throw ConfigError("window config: term " + t.name +
                        " spans fewer than 2 frames at fps " +
                        std::to_string(fps));
    }
    if (!seen.insert(t.name).second) {
      throw ConfigError("window config: duplicate term name " + t.name);
    }
  }
}

double slope(std::span<const double> values, std::span<const double> ts) {
  const std::size_t n = values.size();
  if (n < 2) throw DataError("slope: need at least 2 points");
  if (ts.size() != n) throw ShapeError("slope: length mismatch");
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tm += ts[i];
    ym += values[i];
  }
  tm /= n;
  ym /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = ts[i] - tm;
    num += dt * (values[i] - ym);
    den += dt * dt;
  }
  if (den == 0.0) throw DataError("slope: degenerate timestamps");
  return num / den;
}

WindowStats window_stats(std::span<const double> values,
                         std::span<const double> ts) {
  const std::size_t n = values.size();
  if (n < 2) throw DataError("window_stats: need at least 2 points");
  WindowStats s;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    s.mean += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  s.mean /= n;
  double var = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    var += d * d;
  }
  s.stddev = std::sqrt(var / n);
  s.max_change = hi - lo;
  s.slope = slope(values, ts);
  return s;
}

double aggregate_label_regression(std::span<const double> labels) {
  if (labels.empty()) throw EmptyInputError("aggregate: no labels");
  double sum = 0.0;
  for (double v : labels) sum += v;
  return sum / labels.size();
}

int aggregate_label_classification(std::span<const int> labels) {
  if (labels.empty()) throw EmptyInputError("aggregate: no labels");
  int counts[kExpressionClasses] = {0};
  for (int c : labels) counts[c]++;
  int best = 0;
  for (int c = 1; c < kExpressionClasses; ++c) {
    if (counts[c] > counts[best]) best = c;  // ties keep the smaller id
  }
  return best;
}

int WindowedDataset::feature_dim() const {
  int per_term = 0;
  for (const auto& g : groups) per_term += kStatsPerFeature * g.dim;
  return per_term * static_cast<int>(terms.size());
}

std::pair<int, int> WindowedDataset::block_range(int term, int group) const {
  int per_term = 0;
  for (const auto& g : groups) per_term += kStatsPerFeature * g.dim;
  int offset = term * per_term;
  for (int g = 0; g < group; ++g) offset += kStatsPerFeature * groups[g].dim;
  return {offset, offset + kStatsPerFeature * groups[group].dim};
}

double WindowedDataset::label(std::size_t sample, const std::string& term,
                              Task task) const {
  for (std::size_t t = 0; t < terms.size(); ++t) {
    if (terms[t].name == term) {
      auto it = samples[sample].term_labels[t].find(task);
      if (it == samples[sample].term_labels[t].end()) {
        throw DataError("sample has no label for task " +
                        std::string(task_name(task)));
      }
      return it->second;
    }
  }
  throw DataError("unknown term: " + term);
}

std::vector<std::string> WindowedDataset::feature_names() const {
  static const char* kStatNames[kStatsPerFeature] = {"mean", "std",
                                                     "max_change", "slope"};
  std::vector<std::string> names;
  names.reserve(feature_dim());
  for (const auto& t : terms) {
    for (const auto& g : groups) {
      for (int c = 0; c < g.dim; ++c) {
        for (const char* s : kStatNames) {
          names.push_back(t.name + "." + g.name + "." + std::to_string(c) +
                          "." + s);
        }
      }
    }
  }
  return names;
}

int anchor_count(double duration, double w_max, double stride) {
  if (duration + 1e-9 < w_max) return 0;
  return static_cast<int>(std::floor((duration - w_max) / stride + 1e-9)) + 1;
}

namespace {

struct FrameRange {
  int begin = 0;
  int end = 0;  // exclusive
};

// Right-aligned window frames; count rounded from seconds*fps, minimum 2.
FrameRange term_range(double anchor, double term_seconds, double fps,
                      int frame_count) {
  int n = static_cast<int>(std::lround(term_seconds * fps));
  n = std::max(n, 2);
  int end = static_cast<int>(std::lround(anchor * fps));
  end = std::min(end, frame_count);
  return {end - n, end};
}

bool build_sample(const FrameSequence& seq, const Schema& schema,
                  const WindowConfig& cfg, const std::vector<Task>& tasks,
                  double anchor, WindowedSample& out) {
  const int frames = static_cast<int>(seq.frame_count());
  const std::size_t nterms = cfg.terms.size();

  // Reject the sample if any term window touches an invalid label.
  for (std::size_t t = 0; t < nterms; ++t) {
    const auto r = term_range(anchor, cfg.terms[t].seconds, cfg.fps, frames);
    if (r.begin < 0 || r.end > frames || r.end - r.begin < 2) return false;
    for (Task task : tasks) {
      const auto& track = seq.labels.at(task);
      for (int i = r.begin; i < r.end; ++i) {
        if (!track.valid[i]) return false;
      }
    }
  }

  out.video_id = seq.video_id;
  out.anchor = anchor;
  out.features.clear();
  out.term_labels.assign(nterms, {});

  for (std::size_t t = 0; t < nterms; ++t) {
    const auto r = term_range(anchor, cfg.terms[t].seconds, cfg.fps, frames);
    const int n = r.end - r.begin;
    std::span<const double> ts(seq.timestamps.data() + r.begin,
                               static_cast<std::size_t>(n));
    std::vector<double> column(n);
    for (std::size_t gi = 0; gi < schema.groups.size(); ++gi) {
      const int dim = schema.groups[gi].dim;
      const auto& mat = seq.features[gi];
      for (int c = 0; c < dim; ++c) {
        for (int i = 0; i < n; ++i) {
          column[i] = mat[static_cast<std::size_t>(r.begin + i) * dim + c];
        }
        const auto s = window_stats(column, ts);
        out.features.push_back(s.mean);
        out.features.push_back(s.stddev);
        out.features.push_back(s.max_change);
        out.features.push_back(s.slope);
      }
    }
    for (Task task : tasks) {
      const auto& track = seq.labels.at(task);
      if (task_is_classification(task)) {
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) {
          labels[i] = static_cast<int>(track.values[r.begin + i]);
        }
        out.term_labels[t][task] = aggregate_label_classification(labels);
      } else {
        std::span<const double> labels(track.values.data() + r.begin,
                                       static_cast<std::size_t>(n));
        out.term_labels[t][task] = aggregate_label_regression(labels);
      }
    }
  }
  return true;
}

}  // namespace

WindowedDataset extract_multiterm(const FrameSequence& seq,
                                  const Schema& schema,
                                  const WindowConfig& cfg,
                                  const std::vector<Task>& tasks,
                                  bool parallel) {
  cfg.validate();
  schema.validate();

  WindowedDataset ds;
  ds.terms = cfg.terms;
  ds.groups = schema.groups;
  ds.tasks = tasks;

  for (Task task : tasks) {
    if (!seq.labels.contains(task)) {
      throw DataError("sequence " + seq.video_id + " lacks labels for " +
                      task_name(task));
    }
  }

  const double w_max = cfg.longest();
  const int count = anchor_count(seq.duration(), w_max, cfg.stride);
  if (count == 0) return ds;  // too short; empty dataset, not an error

  std::vector<WindowedSample> slots(count);
  std::vector<char> kept(count, 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (int k = 0; k < count; ++k) {
    const double anchor = w_max + k * cfg.stride;
    kept[k] = build_sample(seq, schema, cfg, tasks, anchor, slots[k]) ? 1 : 0;
  }
  (void)parallel;

  for (int k = 0; k < count; ++k) {
    if (kept[k]) ds.samples.push_back(std::move(slots[k]));
  }
  return ds;
}

WindowedDataset extract_corpus(const std::vector<FrameSequence>& seqs,
                               const Schema& schema, const WindowConfig& cfg,
                               const std::vector<Task>& tasks, bool parallel) {
  WindowedDataset all;
  bool first = true;
  std::vector<const FrameSequence*> order;
  for (const auto& s : seqs) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const FrameSequence* a, const FrameSequence* b) {
              return a->video_id < b->video_id;
            });
  for (const FrameSequence* seq : order) {
    auto ds = extract_multiterm(*seq, schema, cfg, tasks, parallel);
    if (first) {
      all = std::move(ds);
      first = false;
    } else {
      for (auto& s : ds.samples) all.samples.push_back(std::move(s));
    }
  }
  if (first) {
    all.terms = cfg.terms;
    all.groups = schema.groups;
    all.tasks = tasks;
  }
  return all;
}

void save_windowed(const WindowedDataset& ds, const std::string& csv_path,
                   const std::string& manifest_path) {
  std::ofstream out(csv_path);
  if (!out) throw DataError("cannot write " + csv_path);
  out << "video_id,anchor";
  for (const auto& name : ds.feature_names()) out << ',' << name;
  for (const auto& t : ds.terms) {
    for (Task task : ds.tasks) {
      out << ",label_" << t.name << "_" << task_name(task);
    }
  }
  out << '\n';
  for (const auto& s : ds.samples) {
    out << s.video_id << ',' << csv::format_value(s.anchor);
    for (double v : s.features) out << ',' << csv::format_value(v);
    for (std::size_t t = 0; t < ds.terms.size(); ++t) {
      for (Task task : ds.tasks) {
        out << ',' << csv::format_value(s.term_labels[t].at(task));
      }
    }
    out << '\n';
  }

  nlohmann::json m;
  for (const auto& t : ds.terms) {
    m["terms"].push_back({{"name", t.name}, {"seconds", t.seconds}});
  }
  for (const auto& g : ds.groups) {
    m["groups"].push_back({{"name", g.name}, {"dim", g.dim}});
  }
  for (Task task : ds.tasks) m["tasks"].push_back(task_name(task));
  std::ofstream mo(manifest_path);
  if (!mo) throw DataError("cannot write " + manifest_path);
  mo << m.dump(2) << '\n';
}

WindowedDataset load_windowed(const std::string& csv_path,
                              const std::string& manifest_path) {
  std::ifstream mi(manifest_path);
  if (!mi) throw StageDependencyError("missing manifest: " + manifest_path);
  nlohmann::json m = nlohmann::json::parse(mi);

  WindowedDataset ds;
  for (const auto& t : m.at("terms")) {
    ds.terms.push_back({t.at("name").get<std::string>(),
                        t.at("seconds").get<double>()});
  }
  for (const auto& g : m.at("groups")) {
    ds.groups.push_back({g.at("name").get<std::string>(),
                         g.at("dim").get<int>()});
  }
  for (const auto& t : m.at("tasks")) {
    ds.tasks.push_back(task_from_name(t.get<std::string>()));
  }

  std::ifstream in(csv_path);
  if (!in) throw StageDependencyError("missing dataset: " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw EmptyInputError("empty file: " + csv_path);

  const int nfeat = ds.feature_dim();
  const std::size_t expected =
      2 + nfeat + ds.terms.size() * ds.tasks.size();
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    WindowedSample s;
    std::size_t pos = 0, field = 0;
    std::string cell;
    auto consume = [&](const std::string& c) {
      if (field == 0) {
        s.video_id = c;
      } else if (field == 1) {
        s.anchor = std::stod(c);
      } else if (field < static_cast<std::size_t>(2 + nfeat)) {
        s.features.push_back(std::stod(c));
      } else {
        const std::size_t li = field - 2 - nfeat;
        const std::size_t t = li / ds.tasks.size();
        if (s.term_labels.size() <= t) s.term_labels.resize(t + 1);
        s.term_labels[t][ds.tasks[li % ds.tasks.size()]] = std::stod(c);
      }
      ++field;
    };
    for (char c : line) {
      if (c == ',') {
        consume(cell);
        cell.clear();
      } else if (c != '\r') {
        cell += c;
      }
    }
    consume(cell);
    if (field != expected) {
      throw DataError(csv_path + ": row " + std::to_string(row_no) + " has " +
                      std::to_string(field) + " cells, expected " +
                      std::to_string(expected));
    }
    s.term_labels.resize(ds.terms.size());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace affect
