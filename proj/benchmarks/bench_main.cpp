#include "primsim/correspondence.hpp"
#include "primsim/io.hpp"
#include "primsim/metric.hpp"
#include "primsim/sequence.hpp"
#include "primsim/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace primsim;

namespace {

Shape ellipse(std::size_t n, double a, double b) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    pts.emplace_back(a * std::cos(t), b * std::sin(t), 0.0);
  }
  return Shape::loop(std::move(pts), 2);
}

MotionSequence motion(const std::string& cls, std::size_t frames, std::uint64_t seed) {
  GeneratorSpec s;
  s.class_name = cls;
  s.duration_frames = frames;
  s.noise_sigma = 0.01;
  s.seed = seed;
  return generate(s);
}

void BM_Geodesic(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = ellipse(n, 1.0, 1.0), b = ellipse(n, 1.6, 0.7);
  GeodesicOptions opt;
  opt.steps = static_cast<std::size_t>(state.range(1));
  opt.tolerance = 1e-6;
  for (auto _ : state) benchmark::DoNotOptimize(geodesic(a, b, MetricConfig{}, opt).length);
}
BENCHMARK(BM_Geodesic)->Args({32, 8})->Args({64, 8})->Args({64, 16})->Unit(benchmark::kMillisecond);

void BM_Align(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = ellipse(n, 1.0, 1.0), b = ellipse(n, 1.6, 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(align(a, b).residual);
}
BENCHMARK(BM_Align)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_Dtw(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(dtw_align(cost).raw_cost);
}
BENCHMARK(BM_Dtw)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_SequenceDistance(benchmark::State& state) {
  const auto frames = static_cast<std::size_t>(state.range(0));
  const auto a = motion("walk", frames, 1), b = motion("jump", frames, 2);
  SequenceOptions opt;
  opt.geodesic = io::sequence_geodesic_defaults();
  opt.jobs = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(sequence_distance(a, b, MetricConfig{}, opt));
}
BENCHMARK(BM_SequenceDistance)->Args({16, 1})->Args({16, 4})->Args({32, 4})->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
