// Copyright 2026 The dp_toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "dptk/accountant.h"
#include "dptk/data.h"
#include "dptk/dppca.h"
#include "dptk/mechanisms.h"
#include "dptk/nn.h"
#include "dptk/random.h"

namespace dptk {
namespace {

void BM_ComputeLogMoments(benchmark::State& state) {
  const auto orders = default_orders(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_log_moments({0.01, 4.0}, orders));
  }
}
BENCHMARK(BM_ComputeLogMoments)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_AccumulateAndReadEpsilon(benchmark::State& state) {
  const auto steps = static_cast<std::uint64_t>(state.range(0));
  cached_log_moments({0.01, 4.0}, default_orders());
  for (auto _ : state) {
    const LogMomentLedger ledger = accumulate_repeated(LogMomentLedger(), {0.01, 4.0}, steps);
    benchmark::DoNotOptimize(get_epsilon(ledger, 1e-5));
  }
}
BENCHMARK(BM_AccumulateAndReadEpsilon)->Arg(10000)->Arg(40000)->Unit(benchmark::kMillisecond);

void BM_ClippedGradientSum(benchmark::State& state) {
  const auto lot = static_cast<Eigen::Index>(state.range(0));
  const std::vector<std::size_t> dims = {60, 1000, 10};
  const MlpParams params = MlpParams::glorot_uniform(dims, 1);
  CounterRng rng(2);
  RowMatrix inputs(lot, 60);
  for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = rng.normal();
  std::vector<int> labels(static_cast<std::size_t>(lot));
  for (int& y : labels) y = static_cast<int>(rng.below(10));
  const ClipConfig clip =
      ClipConfig::per_segment(params.layer_parameter_counts(), {4.0, 4.0});
  for (auto _ : state) {
    benchmark::DoNotOptimize(clipped_gradient_sum(params, inputs, labels, clip));
  }
  state.SetItemsProcessed(state.iterations() * lot);
}
BENCHMARK(BM_ClippedGradientSum)->Arg(60)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_PerExampleGradients(benchmark::State& state) {
  const std::vector<std::size_t> dims = {60, 1000, 10};
  const MlpParams params = MlpParams::glorot_uniform(dims, 1);
  CounterRng rng(3);
  RowMatrix x(60, 60);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  std::vector<int> labels(60);
  for (int& y : labels) y = static_cast<int>(rng.below(10));
  const Dataset data(x, labels, 10);
  std::vector<LabeledExample> batch;
  for (std::size_t i = 0; i < data.size(); ++i) batch.push_back(data.example(i));
  for (auto _ : state) {
    benchmark::DoNotOptimize(per_example_gradients(params, batch));
  }
  state.SetItemsProcessed(state.iterations() * 60);
}
BENCHMARK(BM_PerExampleGradients)->Unit(benchmark::kMillisecond);

void BM_JacobiEigen(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  CounterRng rng(4);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(jacobi_eigen(a));
  }
}
BENCHMARK(BM_JacobiEigen)->Arg(20)->Arg(60)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_NoiseFill(benchmark::State& state) {
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  NoiseSource noise(5);
  for (auto _ : state) {
    noise.fill(out, 4.0);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NoiseFill)->Arg(71010);

}  // namespace
}  // namespace dptk

BENCHMARK_MAIN();
