// Serial reference loops against their OpenMP counterparts on the kernels
// that dominate a pipeline run.

#include <benchmark/benchmark.h>

#include "tensmooth/noise.hpp"
#include "tensmooth/phantom.hpp"
#include "tensmooth/regression.hpp"
#include "tensmooth/smoothing.hpp"

using namespace tensmooth;

namespace {

PhantomConfig bench_phantom() {
  PhantomConfig cfg = default_phantom_config();
  cfg.grid.dims = {64, 64, 2};
  return cfg;
}

const TensorField& noisy_field() {
  static const TensorField f = spectral_corrupt(build_phantom(bench_phantom()), {20, 0.3}, {1}).field;
  return f;
}

Execution exec_of(const benchmark::State& st) { return st.range(1) ? Execution::parallel : Execution::serial; }

void BM_Smooth(benchmark::State& st) {
  SmoothingConfig cfg;
  cfg.metric = static_cast<Metric>(st.range(0));
  cfg.h = 0.01;
  for (auto _ : st) benchmark::DoNotOptimize(smooth_field(noisy_field(), cfg, exec_of(st)));
  st.SetLabel(std::string(to_string(cfg.metric)) + (st.range(1) ? " parallel" : " serial"));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(noisy_field().values.size()));
}

void BM_Fit(benchmark::State& st) {
  const GradientScheme g = default_scheme(2);
  const DwiVolume v = rician_corrupt(noiseless_dwi(build_phantom(bench_phantom()), g, 10.0), 0.5, {2});
  const auto method = st.range(0) ? FitMethod::nonlinear : FitMethod::linear;
  for (auto _ : st) benchmark::DoNotOptimize(fit_field(v, g, method, 0.5, {}, exec_of(st)));
  st.SetLabel(std::string(to_string(method)) + (st.range(1) ? " parallel" : " serial"));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(v.grid.size()));
}

void BM_RicianNoise(benchmark::State& st) {
  const DwiVolume clean = noiseless_dwi(build_phantom(), default_scheme(2), 10.0);
  for (auto _ : st) benchmark::DoNotOptimize(rician_corrupt(clean, 0.5, {3}, exec_of(st)));
  st.SetLabel(st.range(1) ? "parallel" : "serial");
}

}  // namespace

BENCHMARK(BM_Smooth)
    ->ArgsProduct({{static_cast<int>(Metric::euclidean), static_cast<int>(Metric::log_euclidean),
                    static_cast<int>(Metric::affine)},
                   {0, 1}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Fit)->ArgsProduct({{0, 1}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RicianNoise)->ArgsProduct({{0}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
