#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace affect {

enum class Task { kValence, kArousal, kExpression };

constexpr int kExpressionClasses = 7;  // neutral + six basic emotions

const char* task_name(Task task);
Task task_from_name(const std::string& name);
bool task_is_classification(Task task);

struct FeatureGroupSpec {
  std::string name;  // au_intensity, au_occurrence, head_pose, gaze, pose, deep
  int dim = 0;
};

// Group order is schema order everywhere downstream.
struct Schema {
  std::vector<FeatureGroupSpec> groups;

  int group_index(const std::string& name) const;  // -1 when absent
  int total_dim() const;
  void validate() const;  // unique names, dim >= 1
};

// Paper-default dims; deep width is configurable upstream.
Schema default_schema(int deep_dim);

// Per-frame labels with an explicit validity mask (no sentinel values).
struct LabelTrack {
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  std::size_t size() const { return values.size(); }
};

struct FrameSequence {
  std::string video_id;
  double fps = 0.0;
  std::vector<double> timestamps;
  // One row-major frames x dim matrix per schema group, schema order.
  std::vector<std::vector<double>> features;
  std::map<Task, LabelTrack> labels;

  std::size_t frame_count() const { return timestamps.size(); }
  double duration() const { return frame_count() / fps; }
};

// Maps a schema group to the columns holding it in a feature CSV.
// Defaults to <group>_0 .. <group>_{dim-1}.
std::vector<std::string> default_group_columns(const FeatureGroupSpec& group);

// Reads one video's feature table, slicing columns per schema. Column names
// default to <group>_i but may be overridden per group.
FrameSequence load_feature_table(
    const std::string& path, const Schema& schema, double fps,
    const std::map<std::string, std::vector<std::string>>& column_overrides =
        {});

// Merges another table's groups into an existing sequence (frame counts must
// match); used when a video's groups are split across files.
void merge_feature_table(
    FrameSequence& seq, const std::string& path, const Schema& schema,
    const std::vector<std::string>& group_names,
    const std::map<std::string, std::vector<std::string>>& column_overrides =
        {});

// Single-column label CSV, one row per frame. Out-of-range values (VA outside
// [-1,1], expression outside 0..6) and blanks become invalid entries.
LabelTrack load_labels(const std::string& path, Task task);

void attach_labels(FrameSequence& seq, Task task, LabelTrack track);

struct StandardizerStats {
  // Flat over all schema columns, group order.
  std::vector<double> mean;
  std::vector<double> stddev;          // population
  std::vector<std::uint8_t> constant;  // std == 0, passes through unchanged

  std::size_t size() const { return mean.size(); }
};

// Population mean/std per column over all training frames.
StandardizerStats fit_standardizer(const std::vector<FrameSequence>& train,
                                   const Schema& schema);

FrameSequence standardize(const FrameSequence& seq, const Schema& schema,
                          const StandardizerStats& stats);

}  // namespace affect
