#include <benchmark/benchmark.h>

#include <memory>

#include "wobble/wobble.hpp"

namespace {

using namespace wobble;

MlpModel bench_model(std::size_t in, std::size_t hidden, std::size_t out) {
  CounterRng rng(1);
  auto layer = [&](std::size_t i, std::size_t o, Activation a) {
    std::vector<float> w(i * o), b(o);
    for (auto& v : w) v = static_cast<float>(0.1 * rng.normal());
    for (auto& v : b) v = static_cast<float>(0.1 * rng.normal());
    return DenseLayer{Tensor({i, o}, std::move(w)), Tensor({o}, std::move(b)), a};
  };
  MlpModel m;
  m.layers.push_back(layer(in, hidden, Activation::relu));
  m.layers.push_back(layer(hidden, out, Activation::none));
  return m;
}

std::vector<double> normals(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  CounterRng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = sd * rng.normal();
  return v;
}

void BM_SampleCloud(benchmark::State& state) {
  const std::vector<double> x(static_cast<std::size_t>(state.range(0)), 0.5);
  NoiseConfig cfg;
  cfg.n_samples = 500;
  std::uint64_t point = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_cloud(x, cfg, point++));
  state.SetItemsProcessed(state.iterations() * 500 * state.range(0));
}
BENCHMARK(BM_SampleCloud)->Arg(64)->Arg(784);

void BM_EntropyKernel(benchmark::State& state) {
  CounterRng rng(2);
  std::vector<std::uint32_t> labels(static_cast<std::size_t>(state.range(0)));
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.below(10));
  for (auto _ : state) {
    const auto h = class_histogram(labels, 10);
    benchmark::DoNotOptimize(wobbliness_entropy(h, kDefaultSmoothing));
  }
}
BENCHMARK(BM_EntropyKernel)->Arg(500)->Arg(2000);

void BM_Test(benchmark::State& state, TestKind kind) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = normals(n, 3), b = normals(n, 4, 1.2);
  for (auto _ : state) benchmark::DoNotOptimize(run_test(kind, a, b));
}
BENCHMARK_CAPTURE(BM_Test, levene, TestKind::levene)->Arg(25)->Arg(250);
BENCHMARK_CAPTURE(BM_Test, fligner, TestKind::fligner)->Arg(25)->Arg(250);
BENCHMARK_CAPTURE(BM_Test, ks, TestKind::ks)->Arg(25)->Arg(250);

void BM_MlpClassify(benchmark::State& state) {
  auto h = open_in_process(std::make_shared<MlpClassifier>(bench_model(784, 64, 10)));
  const auto x = sample_cloud(std::vector<double>(784, 0.5), NoiseConfig{}, 0).points;
  for (auto _ : state) benchmark::DoNotOptimize(h.classify(x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.rows()));
}
BENCHMARK(BM_MlpClassify);

void BM_MeasurePoint(benchmark::State& state) {
  auto h = open_in_process(std::make_shared<MlpClassifier>(bench_model(784, 64, 10)));
  const Matrix points(1, 784, 0.5);
  MeasureConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(measure_points(h, points, cfg));
}
BENCHMARK(BM_MeasurePoint);

}  // namespace
BENCHMARK_MAIN();
