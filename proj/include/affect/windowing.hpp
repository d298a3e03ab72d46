#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "affect/data_model.hpp"

namespace affect {

struct TermSpec {
  std::string name;
  double seconds = 0.0;
};

struct WindowConfig {
  // Window lengths in seconds; "short" is always present and is the
  // supervision term downstream.
  std::vector<TermSpec> terms = {{"short", 1.0}, {"middle", 6.0},
                                 {"long", 12.0}};
  double stride = 0.2;
  double fps = 0.0;

  double longest() const;
  int term_index(const std::string& name) const;
  void validate() const;
};

// Per-feature statistics over one window, in output order.
struct WindowStats {
  double mean = 0.0;
  double stddev = 0.0;      // population
  double max_change = 0.0;  // max - min
  double slope = 0.0;       // least squares vs timestamps
};

constexpr int kStatsPerFeature = 4;

// OLS slope of values against timestamps; exact for affine inputs.
double slope(std::span<const double> values, std::span<const double> ts);

WindowStats window_stats(std::span<const double> values,
                         std::span<const double> ts);

double aggregate_label_regression(std::span<const double> labels);

// Mode; ties broken by smallest class id.
int aggregate_label_classification(std::span<const int> labels);

struct WindowedSample {
  std::string video_id;
  double anchor = 0.0;  // shared right edge, seconds
  // Concatenated per-term, per-group stats: for each term (config order),
  // for each group (schema order), 4*dim values ordered
  // (mean, std, max_change, slope) per input feature.
  std::vector<double> features;
  // term_labels[term][task]
  std::vector<std::map<Task, double>> term_labels;
};

struct WindowedDataset {
  std::vector<TermSpec> terms;
  std::vector<FeatureGroupSpec> groups;
  std::vector<Task> tasks;
  std::vector<WindowedSample> samples;

  int feature_dim() const;  // terms * sum(4*dim)
  // [begin, end) feature range for one (term, group) block.
  std::pair<int, int> block_range(int term, int group) const;
  double label(std::size_t sample, const std::string& term, Task task) const;
  std::vector<std::string> feature_names() const;
};

// Number of anchors for a sequence: floor((duration - w_max)/stride) + 1
// when duration >= w_max, else 0 (before invalid-label skipping).
int anchor_count(double duration, double w_max, double stride);

// Multi-term extraction. Anchors at w_max, w_max+stride, ... <= duration;
// each term window right-aligned at the anchor. Samples containing any
// invalid label in any term window for any requested task are skipped.
// A sequence shorter than the longest window yields zero samples.
WindowedDataset extract_multiterm(const FrameSequence& seq,
                                  const Schema& schema,
                                  const WindowConfig& cfg,
                                  const std::vector<Task>& tasks,
                                  bool parallel = true);

// Extracts every sequence and concatenates, ordered by (video_id, anchor).
WindowedDataset extract_corpus(const std::vector<FrameSequence>& seqs,
                               const Schema& schema, const WindowConfig& cfg,
                               const std::vector<Task>& tasks,
                               bool parallel = true);

void save_windowed(const WindowedDataset& ds, const std::string& csv_path,
                   const std::string& manifest_path);
WindowedDataset load_windowed(const std::string& csv_path,
                              const std::string& manifest_path);

}  // namespace affect
