// Timings for the two OpenMP kernels against their serial reference paths:
// window extraction (parallel over anchors) and GBDT split search (parallel
// over features). Both paths must agree bit for bit; the benchmark checks
// that while it measures.

#include <chrono>
#include <cstdio>
#include <random>

#include "affect/gbdt.hpp"
#include "affect/synthetic.hpp"
#include "affect/windowing.hpp"

using namespace affect;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

}  // namespace

int main() {
  SyntheticSpec spec;
  spec.videos = 6;
  spec.val_videos = 0;
  spec.duration = 120.0;
  spec.fps = 10.0;
  auto corpus = gen_synthetic(spec);
  std::vector<FrameSequence> seqs;
  for (auto& v : corpus) seqs.push_back(std::move(v.seq));

  WindowConfig wcfg;
  wcfg.fps = spec.fps;
  const std::vector<Task> tasks = {Task::kValence};

  auto t0 = clock_type::now();
  auto serial = extract_corpus(seqs, spec.schema, wcfg, tasks, false);
  const double t_serial = seconds_since(t0);
  t0 = clock_type::now();
  auto parallel = extract_corpus(seqs, spec.schema, wcfg, tasks, true);
  const double t_parallel = seconds_since(t0);

  bool equal = serial.samples.size() == parallel.samples.size();
  for (std::size_t i = 0; equal && i < serial.samples.size(); ++i) {
    equal = serial.samples[i].features == parallel.samples[i].features;
  }
  std::printf("windowing   serial %.3fs  parallel %.3fs  speedup %.2fx  %s\n",
              t_serial, t_parallel, t_serial / t_parallel,
              equal ? "identical" : "MISMATCH");

  // Split-search benchmark: one wide regression fit.
  const std::size_t n = 20000, d = 64;
  Matrix x(n, d);
  std::vector<double> y(n);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& v : x.data) v = gauss(rng);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = x.at(i, 0) + 0.5 * x.at(i, 7) * x.at(i, 13) + 0.1 * gauss(rng);
  }

  GbdtParams params;
  params.num_rounds = 20;
  params.num_leaves = 31;
  params.parallel = false;
  t0 = clock_type::now();
  auto m_serial = train_regressor(x, y, nullptr, nullptr, params);
  const double g_serial = seconds_since(t0);
  params.parallel = true;
  t0 = clock_type::now();
  auto m_parallel = train_regressor(x, y, nullptr, nullptr, params);
  const double g_parallel = seconds_since(t0);

  auto p1 = m_serial.predict_values(x);
  auto p2 = m_parallel.predict_values(x);
  std::printf("split search serial %.3fs  parallel %.3fs  speedup %.2fx  %s\n",
              g_serial, g_parallel, g_serial / g_parallel,
              p1 == p2 ? "identical" : "MISMATCH");
  return (equal && p1 == p2) ? 0 : 1;
}
