#pragma once

#include <cstdint>
#include <vector>

#include "affect/windowing.hpp"

namespace affect {

// 8x8 valence-arousal grid over [-1,1]^2, bin width 0.25 per axis.
struct VaGrid {
  static constexpr int kBinsPerAxis = 8;
  // Regions downsampled as over-represented; default is the 2x2 central
  // block (v_bin, a_bin in {3,4}).
  std::vector<int> center_regions = {27, 28, 35, 36};
};

// region id = a_bin*8 + v_bin; the upper boundary 1.0 clamps to bin 7.
int va_region_index(double valence, double arousal);

// Short-term expression label keys the classes. Neutral (class 0) is
// downsampled to ceil(n0/2) by seeded choice without replacement; every
// other sample is duplicated once. Output preserves input order, with
// duplicates adjacent to their originals.
WindowedDataset balance_expression(const WindowedDataset& ds,
                                   std::uint64_t seed);

// Center regions downsampled to ceil(n/2) per region; all other samples
// duplicated once.
WindowedDataset balance_va(const WindowedDataset& ds, const VaGrid& grid,
                           std::uint64_t seed);

}  // namespace affect
