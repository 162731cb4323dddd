#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "batdiff/degradation.hpp"
#include "batdiff/denoiser.hpp"
#include "batdiff/pipeline.hpp"
#include "batdiff/synthetic.hpp"
#include "batdiff/wavelet.hpp"

using namespace batdiff;

namespace {

DenoiserConfig desk_net() {
  DenoiserConfig dc;
  dc.features = 16;
  dc.blocks = 2;
  dc.levels = 3;
  dc.timesteps = 25;
  return dc;
}

void BM_AtrousDecompose(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image x = checkerboard_stripes(n);
  for (auto _ : state) benchmark::DoNotOptimize(atrous_decompose(x, 6));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_AtrousDecompose)->Arg(64)->Arg(256);

void BM_DegradeAdjoint(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  DegradationModel m;
  m.scale_factor = 4.0;
  const DegradationOperator op(m, {n, n});
  const Image x = checkerboard_stripes(n);
  for (auto _ : state) benchmark::DoNotOptimize(op.adjoint(op.apply(x)));
}
BENCHMARK(BM_DegradeAdjoint)->Arg(64)->Arg(256);

void BM_PredictNoise(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const DenoiserParams p = DenoiserParams::initialize(desk_net(), rng);
  const Image x = checkerboard_stripes(n);
  const DenoiserInput in{x, x, 10, 2};
  for (auto _ : state) benchmark::DoNotOptimize(predict_noise(in, p));
}
BENCHMARK(BM_PredictNoise)->Arg(32)->Arg(64);

void BM_LossAndGrad(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const DenoiserParams p = DenoiserParams::initialize(desk_net(), rng);
  const Image x = checkerboard_stripes(32);
  std::vector<TrainingSample> batch(static_cast<std::size_t>(state.range(0)),
                                    TrainingSample{{x, x, 10, 2}, x});
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(batch, p));
}
BENCHMARK(BM_LossAndGrad)->Arg(1)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
