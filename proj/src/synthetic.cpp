#include "affect/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "affect/csv.hpp"
#include "affect/error.hpp"

namespace fs = std::filesystem;

namespace affect {

namespace {

// One Ornstein-Uhlenbeck step with unit stationary variance.
double ou_step(double z, double dt, double tau, double noise) {
  const double a = std::exp(-dt / tau);
  return z * a + std::sqrt(1.0 - a * a) * noise;
}

double clip1(double v) { return std::clamp(v, -1.0, 1.0); }

int expression_class(double drive, double fast, double band) {
  if (std::abs(drive) < band) return 0;
  const int strength =
      std::min(2, static_cast<int>((std::abs(drive) - band) / 0.25));
  (void)fast;
  return (drive > 0 ? 1 : 4) + strength;
}

}  // namespace

double synthetic_valence(double z_fast, double z_medium, double z_slow) {
  return clip1(0.25 * z_fast + 0.30 * z_medium + 0.35 * z_slow);
}

std::vector<SyntheticVideo> gen_synthetic(const SyntheticSpec& spec) {
  if (spec.videos <= 0 || spec.fps <= 0 || spec.duration <= 0) {
    throw ConfigError("synthetic spec: videos, fps, duration must be positive");
  }
  spec.schema.validate();
  const int frames = static_cast<int>(std::llround(spec.duration * spec.fps));
  const double dt = 1.0 / spec.fps;
  const int d = spec.schema.total_dim();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Fixed per-channel loadings onto (fast, medium, slow, nuisance), shared
  // across videos so the latent-to-feature map is one learnable function.
  std::vector<std::array<double, 4>> loading(d);
  for (auto& row : loading) {
    for (auto& w : row) w = gauss(rng);
  }

  std::vector<SyntheticVideo> corpus;
  for (int v = 0; v < spec.videos; ++v) {
    SyntheticVideo video;
    char id[16];
    std::snprintf(id, sizeof(id), "vid%03d", v);
    video.seq.video_id = id;
    video.seq.fps = spec.fps;
    video.split = v >= spec.videos - spec.val_videos ? "val" : "train";

    double zf = gauss(rng), zm = gauss(rng), zs = gauss(rng);
    double zn = gauss(rng);  // nuisance latent, never enters the labels
    LabelTrack valence, arousal, expression;
    video.seq.features.resize(spec.schema.groups.size());
    for (std::size_t g = 0; g < spec.schema.groups.size(); ++g) {
      video.seq.features[g].reserve(
          static_cast<std::size_t>(frames) * spec.schema.groups[g].dim);
    }

    for (int f = 0; f < frames; ++f) {
      if (f > 0) {
        zf = ou_step(zf, dt, spec.latent_tau_fast, gauss(rng));
        zm = ou_step(zm, dt, spec.latent_tau_medium, gauss(rng));
        zs = ou_step(zs, dt, spec.latent_tau_slow, gauss(rng));
        zn = ou_step(zn, dt, 2.0, gauss(rng));
      }
      video.seq.timestamps.push_back(f * dt);
      video.z_fast.push_back(zf);
      video.z_medium.push_back(zm);
      video.z_slow.push_back(zs);

      valence.values.push_back(synthetic_valence(zf, zm, zs));
      valence.valid.push_back(1);
      arousal.values.push_back(
          clip1(0.35 * zf + 0.20 * zm + 0.25 * zs + 0.15 * zn));
      arousal.valid.push_back(1);
      expression.values.push_back(expression_class(
          0.5 * zm + 0.5 * zs, zf, spec.neutral_band));
      expression.valid.push_back(1);

      int channel = 0;
      for (std::size_t g = 0; g < spec.schema.groups.size(); ++g) {
        for (int c = 0; c < spec.schema.groups[g].dim; ++c, ++channel) {
          const auto& w = loading[channel];
          video.seq.features[g].push_back(
              w[0] * zf + w[1] * zm + w[2] * zs + w[3] * zn +
              spec.feature_noise * gauss(rng));
        }
      }
    }
    video.seq.labels[Task::kValence] = std::move(valence);
    video.seq.labels[Task::kArousal] = std::move(arousal);
    video.seq.labels[Task::kExpression] = std::move(expression);
    corpus.push_back(std::move(video));
  }
  return corpus;
}

void write_corpus(const std::vector<SyntheticVideo>& corpus,
                  const Schema& schema, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream index(fs::path(dir) / "index.csv");
  if (!index) throw DataError("cannot write " + dir + "/index.csv");
  index << "video_id,fps,split\n";

  for (const auto& video : corpus) {
    index << video.seq.video_id << ',' << csv::format_value(video.seq.fps)
          << ',' << video.split << '\n';
    const fs::path vdir = fs::path(dir) / video.seq.video_id;
    fs::create_directories(vdir);

    csv::Table features;
    for (const auto& g : schema.groups) {
      for (const auto& name : default_group_columns(g)) {
        features.header.push_back(name);
      }
    }
    const std::size_t frames = video.seq.frame_count();
    features.rows.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t g = 0; g < schema.groups.size(); ++g) {
        const int dim = schema.groups[g].dim;
        for (int c = 0; c < dim; ++c) {
          features.rows[f].push_back(video.seq.features[g][f * dim + c]);
        }
      }
    }
    csv::write_table((vdir / "features.csv").string(), features);

    for (Task task :
         {Task::kValence, Task::kArousal, Task::kExpression}) {
      const auto& track = video.seq.labels.at(task);
      csv::Table t;
      t.header = {task_name(task)};
      for (std::size_t f = 0; f < frames; ++f) {
        t.rows.push_back({track.values[f]});
      }
      csv::write_table(
          (vdir / (std::string(task_name(task)) + ".csv")).string(), t);
    }
  }
}

}  // namespace affect
