/* Copyright (c) 2026 The mapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

// Parallel kernels against their serial references at U-Net layer sizes.
// Run with OMP_NUM_THREADS to compare thread counts.

#include <benchmark/benchmark.h>

#include <vector>

#include "mapseg/kernels/gemm.hpp"
#include "mapseg/layers.hpp"
#include "mapseg/rng.hpp"

namespace {

using mapseg::Rng;
using mapseg::Tensor;
namespace kernels = mapseg::kernels;
namespace nn = mapseg::nn;

std::vector<float> random_vector(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

template <bool kReference>
void BM_Gemm(benchmark::State& state) {
  const std::int64_t m = state.range(0), k = state.range(1), n = state.range(2);
  Rng rng(1);
  const auto a = random_vector(static_cast<std::size_t>(m * k), rng);
  const auto b = random_vector(static_cast<std::size_t>(k * n), rng);
  std::vector<float> c(static_cast<std::size_t>(m * n));
  const auto am = kernels::ConstMatrix<float>::row_major(a.data(), m, k);
  const auto bm = kernels::ConstMatrix<float>::row_major(b.data(), k, n);
  const auto cm = kernels::MutMatrix<float>::row_major(c.data(), m, n);
  for (auto _ : state) {
    if constexpr (kReference)
      kernels::reference::gemm(am, bm, cm, false);
    else
      kernels::gemm(am, bm, cm, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOPS"] = benchmark::Counter(2.0 * static_cast<double>(m * n * k),
                                                benchmark::Counter::kIsIterationInvariantRate,
                                                benchmark::Counter::kIs1000);
}

// (out channels, depth = in channels * 9, pixels) of typical 3x3 layers.
void GemmShapes(benchmark::internal::Benchmark* b) {
  b->Args({16, 144, 16384})->Args({32, 288, 4096})->Args({64, 576, 1024})->Args({128, 1152, 256});
}

BENCHMARK(BM_Gemm<false>)->Name("gemm/blocked")->Apply(GemmShapes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gemm<true>)->Name("gemm/reference")->Apply(GemmShapes)->Unit(benchmark::kMillisecond);

template <bool kReference>
void BM_Conv3x3(benchmark::State& state) {
  const std::int64_t cin = state.range(0), cout = state.range(1), size = state.range(2);
  Rng rng(2);
  const Tensor x = mapseg::tensor_rand_normal<float>({1, cin, size, size}, 0.0, 1.0, rng);
  nn::ConvParams<float> p{mapseg::tensor_rand_normal<float>({cout, cin, 3, 3}, 0.0, 0.1, rng),
                          std::vector<float>(static_cast<std::size_t>(cout), 0.0f)};
  for (auto _ : state) {
    if constexpr (kReference)
      benchmark::DoNotOptimize(nn::reference::conv2d_forward(x, p, 1, 1));
    else
      benchmark::DoNotOptimize(nn::conv2d_infer(x, p, 1, 1));
  }
  state.counters["GFLOPS"] =
      benchmark::Counter(2.0 * static_cast<double>(cin * cout * 9 * size * size),
                         benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}

void ConvShapes(benchmark::internal::Benchmark* b) {
  b->Args({16, 16, 128})->Args({32, 32, 64})->Args({64, 64, 32})->Args({192, 64, 32});
}

BENCHMARK(BM_Conv3x3<false>)->Name("conv3x3/im2col")->Apply(ConvShapes)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv3x3<true>)->Name("conv3x3/reference")->Apply(ConvShapes)->Unit(benchmark::kMillisecond);

void BM_ConvBackward(benchmark::State& state) {
  const std::int64_t cin = state.range(0), cout = state.range(1), size = state.range(2);
  Rng rng(3);
  const Tensor x = mapseg::tensor_rand_normal<float>({1, cin, size, size}, 0.0, 1.0, rng);
  nn::ConvParams<float> p{mapseg::tensor_rand_normal<float>({cout, cin, 3, 3}, 0.0, 0.1, rng),
                          std::vector<float>(static_cast<std::size_t>(cout), 0.0f)};
  const auto fwd = nn::conv2d_forward(x, p, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_backward(fwd.y, fwd.cache, p));
}

BENCHMARK(BM_ConvBackward)->Name("conv3x3/backward")->Apply(ConvShapes)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
