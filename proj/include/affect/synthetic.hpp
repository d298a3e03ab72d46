#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "affect/data_model.hpp"

namespace affect {

// Verification corpus: per-video mean-reverting latents at three time
// scales drive the labels, and the observed feature groups are noisy
// linear views of those latents. No single window length can recover all
// three scales from the noisy features, so multi-term stacking has a real
// advantage on this data by construction.
struct SyntheticSpec {
  int videos = 50;
  int val_videos = 10;  // last val_videos ids are marked split=val
  double duration = 60.0;
  double fps = 5.0;
  std::uint64_t seed = 7;

  // Feature groups emitted; dims kept small so the corpus trains quickly.
  Schema schema = {{{"gaze", 4}, {"head_pose", 4}, {"au_intensity", 6}}};

  double latent_tau_fast = 1.0;
  double latent_tau_medium = 6.0;
  double latent_tau_slow = 12.0;
  double feature_noise = 5.0;
  double neutral_band = 0.66;  // |drive| below this is expression class 0
};

struct SyntheticVideo {
  FrameSequence seq;  // features plus all three label tracks
  std::string split;  // "train" or "val"
  // True latents per frame, for oracle checks.
  std::vector<double> z_fast, z_medium, z_slow;
};

// Frame-level valence from the latents; labels are this, clipped to [-1,1].
double synthetic_valence(double z_fast, double z_medium, double z_slow);

std::vector<SyntheticVideo> gen_synthetic(const SyntheticSpec& spec);

// Writes <dir>/index.csv plus <dir>/<video_id>/{features,valence,arousal,
// expression}.csv. Deterministic given the spec.
void write_corpus(const std::vector<SyntheticVideo>& corpus,
                  const Schema& schema, const std::string& dir);

}  // namespace affect
