#include "affect/data_model.hpp"

#include <cmath>
#include <set>

#include "affect/csv.hpp"
#include "affect/error.hpp"

namespace affect {

const char* task_name(Task task) {
  switch (task) {
    case Task::kValence: return "valence";
    case Task::kArousal: return "arousal";
    case Task::kExpression: return "expression";
  }
  return "?";
}

Task task_from_name(const std::string& name) {
  if (name == "valence") return Task::kValence;
  if (name == "arousal") return Task::kArousal;
  if (name == "expression") return Task::kExpression;
  throw ConfigError("unknown task: " + name);
}

bool task_is_classification(Task task) { return task == Task::kExpression; }

int Schema::group_index(const std::string& name) const {
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int Schema::total_dim() const {
  int total = 0;
  for (const auto& g : groups) total += g.dim;
  return total;
}

void Schema::validate() const {
  if (groups.empty()) throw SchemaError("schema has no feature groups");
  std::set<std::string> seen;
  for (const auto& g : groups) {
    if (g.dim < 1) {
      throw SchemaError("group " + g.name + " has dim " +
                        std::to_string(g.dim) + ", need >= 1");
    }
    if (!seen.insert(g.name).second) {
      throw SchemaError("duplicate group name: " + g.name);
    }
  }
}

Schema default_schema(int deep_dim) {
  Schema s;
  s.groups = {{"au_intensity", 17}, {"au_occurrence", 18}, {"head_pose", 6},
              {"gaze", 8},          {"pose", 75},          {"deep", deep_dim}};
  s.validate();
  return s;
}

std::vector<std::string> default_group_columns(const FeatureGroupSpec& group) {
  std::vector<std::string> cols;
  cols.reserve(group.dim);
  for (int i = 0; i < group.dim; ++i) {
    cols.push_back(group.name + "_" + std::to_string(i));
  }
  return cols;
}

namespace {

void slice_group(
    FrameSequence& seq, const csv::Table& table, const std::string& path,
    const Schema& schema, const std::string& group_name,
    const std::map<std::string, std::vector<std::string>>& overrides) {
  int gi = schema.group_index(group_name);
  if (gi < 0) throw SchemaError("group not in schema: " + group_name);
  const auto& group = schema.groups[gi];

  std::vector<std::string> cols;
  auto it = overrides.find(group_name);
  if (it != overrides.end()) {
    cols = it->second;
    if (static_cast<int>(cols.size()) != group.dim) {
      throw SchemaError("group " + group_name + " maps " +
                        std::to_string(cols.size()) + " columns, dim is " +
                        std::to_string(group.dim));
    }
  } else {
    cols = default_group_columns(group);
  }

  std::vector<int> idx(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    idx[c] = table.column(cols[c]);
    if (idx[c] < 0) {
      throw SchemaError(path + ": missing column \"" + cols[c] + "\"");
    }
  }

  auto& mat = seq.features[gi];
  mat.resize(table.nrows() * group.dim);
  for (std::size_t r = 0; r < table.nrows(); ++r) {
    for (int c = 0; c < group.dim; ++c) {
      double v = table.rows[r][idx[c]];
      if (!std::isfinite(v)) {
        throw DataError(path + ": non-finite value at row " +
                        std::to_string(r + 2) + " column " + cols[c]);
      }
      mat[r * group.dim + c] = v;
    }
  }
}

}  // namespace

FrameSequence load_feature_table(
    const std::string& path, const Schema& schema, double fps,
    const std::map<std::string, std::vector<std::string>>& column_overrides) {
  if (fps <= 0) throw ConfigError("fps must be positive");
  schema.validate();
  auto table = csv::read_table(path);

  FrameSequence seq;
  seq.fps = fps;
  seq.features.resize(schema.groups.size());
  seq.timestamps.resize(table.nrows());
  for (std::size_t i = 0; i < table.nrows(); ++i) {
    seq.timestamps[i] = static_cast<double>(i) / fps;
  }
  for (const auto& g : schema.groups) {
    slice_group(seq, table, path, schema, g.name, column_overrides);
  }
  return seq;
}

void merge_feature_table(
    FrameSequence& seq, const std::string& path, const Schema& schema,
    const std::vector<std::string>& group_names,
    const std::map<std::string, std::vector<std::string>>& column_overrides) {
  auto table = csv::read_table(path);
  if (table.nrows() != seq.frame_count()) {
    throw ShapeError(path + ": " + std::to_string(table.nrows()) +
                     " rows, sequence has " +
                     std::to_string(seq.frame_count()) + " frames");
  }
  if (seq.features.size() != schema.groups.size()) {
    seq.features.resize(schema.groups.size());
  }
  for (const auto& name : group_names) {
    slice_group(seq, table, path, schema, name, column_overrides);
  }
}

LabelTrack load_labels(const std::string& path, Task task) {
  auto table = csv::read_table(path, /*allow_blank=*/true);
  if (table.ncols() != 1) {
    throw SchemaError(path + ": label file must have a single column, has " +
                      std::to_string(table.ncols()));
  }
  LabelTrack track;
  track.values.reserve(table.nrows());
  track.valid.reserve(table.nrows());
  for (const auto& row : table.rows) {
    double v = row[0];
    bool ok = std::isfinite(v);
    if (ok) {
      if (task == Task::kExpression) {
        ok = v == std::floor(v) && v >= 0 && v < kExpressionClasses;
      } else {
        ok = v >= -1.0 && v <= 1.0;
      }
    }
    track.values.push_back(ok ? v : 0.0);
    track.valid.push_back(ok ? 1 : 0);
  }
  return track;
}

void attach_labels(FrameSequence& seq, Task task, LabelTrack track) {
  if (track.size() != seq.frame_count()) {
    throw ShapeError("label track for " + std::string(task_name(task)) +
                     " has " + std::to_string(track.size()) +
                     " rows, sequence " + seq.video_id + " has " +
                     std::to_string(seq.frame_count()) + " frames");
  }
  seq.labels[task] = std::move(track);
}

StandardizerStats fit_standardizer(const std::vector<FrameSequence>& train,
                                   const Schema& schema) {
  schema.validate();
  const int total = schema.total_dim();
  std::size_t frames = 0;
  for (const auto& seq : train) frames += seq.frame_count();
  if (frames == 0) throw EmptyInputError("standardizer: no training frames");

  StandardizerStats stats;
  stats.mean.assign(total, 0.0);
  stats.stddev.assign(total, 0.0);
  stats.constant.assign(total, 0);

  // Two-pass mean then variance.
  int offset = 0;
  for (std::size_t gi = 0; gi < schema.groups.size(); ++gi) {
    const int dim = schema.groups[gi].dim;
    for (const auto& seq : train) {
      const auto& mat = seq.features[gi];
      const std::size_t n = seq.frame_count();
      for (std::size_t r = 0; r < n; ++r) {
        for (int c = 0; c < dim; ++c) {
          stats.mean[offset + c] += mat[r * dim + c];
        }
      }
    }
    for (int c = 0; c < dim; ++c) stats.mean[offset + c] /= frames;
    for (const auto& seq : train) {
      const auto& mat = seq.features[gi];
      const std::size_t n = seq.frame_count();
      for (std::size_t r = 0; r < n; ++r) {
        for (int c = 0; c < dim; ++c) {
          double d = mat[r * dim + c] - stats.mean[offset + c];
          stats.stddev[offset + c] += d * d;
        }
      }
    }
    for (int c = 0; c < dim; ++c) {
      double var = stats.stddev[offset + c] / frames;
      stats.stddev[offset + c] = std::sqrt(var);
      if (stats.stddev[offset + c] == 0.0) stats.constant[offset + c] = 1;
    }
    offset += dim;
  }
  return stats;
}

FrameSequence standardize(const FrameSequence& seq, const Schema& schema,
                          const StandardizerStats& stats) {
  if (static_cast<int>(stats.size()) != schema.total_dim()) {
    throw SchemaError("standardizer has " + std::to_string(stats.size()) +
                      " columns, schema has " +
                      std::to_string(schema.total_dim()));
  }
  FrameSequence out = seq;
  int offset = 0;
  for (std::size_t gi = 0; gi < schema.groups.size(); ++gi) {
    const int dim = schema.groups[gi].dim;
    auto& mat = out.features[gi];
    const std::size_t n = out.frame_count();
    for (std::size_t r = 0; r < n; ++r) {
      for (int c = 0; c < dim; ++c) {
        if (stats.constant[offset + c]) continue;
        mat[r * dim + c] =
            (mat[r * dim + c] - stats.mean[offset + c]) /
            stats.stddev[offset + c];
      }
    }
    offset += dim;
  }
  return out;
}

}  // namespace affect
