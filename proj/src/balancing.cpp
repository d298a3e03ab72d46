#include "affect/balancing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "affect/error.hpp"

namespace affect {

int va_region_index(double valence, double arousal) {
  if (valence < -1.0 || valence > 1.0 || arousal < -1.0 || arousal > 1.0) {
    throw DataError("va_region_index: input outside [-1,1]");
  }
  const int v_bin = std::min(
      static_cast<int>(std::floor((valence + 1.0) / 0.25)), 7);
  const int a_bin = std::min(
      static_cast<int>(std::floor((arousal + 1.0) / 0.25)), 7);
  return a_bin * VaGrid::kBinsPerAxis + v_bin;
}

namespace {

// Keeps ceil(n/2) of the indices in each downsample bucket (seeded, without
// replacement); every other sample is emitted twice. Order preserved.
WindowedDataset rebuild(const WindowedDataset& ds,
                        const std::vector<int>& bucket,
                        const std::vector<int>& downsampled_buckets,
                        std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < bucket.size(); ++i) {
    members[bucket[i]].push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> keep(ds.samples.size(), 1);
  for (int b : downsampled_buckets) {
    auto it = members.find(b);
    if (it == members.end()) continue;
    auto idx = it->second;
    const std::size_t target = (idx.size() + 1) / 2;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = target; i < idx.size(); ++i) keep[idx[i]] = 0;
  }

  WindowedDataset out;
  out.terms = ds.terms;
  out.groups = ds.groups;
  out.tasks = ds.tasks;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const bool down = std::find(downsampled_buckets.begin(),
                                downsampled_buckets.end(),
                                bucket[i]) != downsampled_buckets.end();
    if (down) {
      if (keep[i]) out.samples.push_back(ds.samples[i]);
    } else {
      out.samples.push_back(ds.samples[i]);
      out.samples.push_back(ds.samples[i]);
    }
  }
  return out;
}

}  // namespace

WindowedDataset balance_expression(const WindowedDataset& ds,
                                   std::uint64_t seed) {
  std::vector<int> bucket(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    bucket[i] =
        static_cast<int>(ds.label(i, "short", Task::kExpression));
  }
  return rebuild(ds, bucket, {0}, seed);  // class 0 = neutral
}

WindowedDataset balance_va(const WindowedDataset& ds, const VaGrid& grid,
                           std::uint64_t seed) {
  std::vector<int> bucket(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const double v =
        std::clamp(ds.label(i, "short", Task::kValence), -1.0, 1.0);
    const double a =
        std::clamp(ds.label(i, "short", Task::kArousal), -1.0, 1.0);
    bucket[i] = va_region_index(v, a);
  }
  return rebuild(ds, bucket, grid.center_regions, seed);
}

}  // namespace affect
