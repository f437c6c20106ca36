// Copyright 2026 The JML Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference vs OpenMP paths of the hot kernels. The second benchmark
// argument selects the path: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "jml/kernels.hpp"
#include "jml/labels.hpp"
#include "jml/metrics.hpp"
#include "jml/tensor.hpp"

namespace {

using jml::Exec;

Exec exec_arg(const benchmark::State& state)
{
    return state.range(1) == 0 ? Exec::serial : Exec::parallel;
}

std::vector<double> uniform(std::size_t n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = u(rng);
    }
    return v;
}

void BM_Sum(benchmark::State& state)
{
    const auto x = uniform(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jml::kernels::sum(x, exec_arg(state)));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sum)->ArgsProduct({{1 << 14, 1 << 20}, {0, 1}});

// Shapes of the patch MLP: 27 inputs, 16 hidden units, 2 x 64 x 64 pixels.
void BM_Gemm(benchmark::State& state)
{
    const std::size_t m = 16, k = 27, n = static_cast<std::size_t>(state.range(0));
    const bool tb = state.range(2) != 0;
    const auto a = uniform(m * k, 2);
    const auto b = uniform(k * n, 3);
    std::vector<double> c(m * n);
    for (auto _ : state) {
        if (tb) {
            // weight gradient: (m x n) * (n x k)^T pattern
            jml::kernels::gemm(false, true, m, k, n, c, b, std::span<double>(c.data(), m * k), exec_arg(state));
        } else {
            jml::kernels::gemm(false, false, m, n, k, a, b, c, exec_arg(state));
        }
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_Gemm)->ArgsProduct({{8192}, {0, 1}, {0, 1}});

void BM_MaxPool(benchmark::State& state)
{
    const std::size_t planes = 8, h = 64, w = 64;
    const auto k = static_cast<std::size_t>(state.range(0));
    const auto in = uniform(planes * h * w, 4);
    std::vector<double> out(in.size());
    for (auto _ : state) {
        jml::kernels::max_pool2d(in, planes, h, w, k, out, {}, exec_arg(state));
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_MaxPool)->ArgsProduct({{3, 9}, {0, 1}});

void BM_BoundaryMask(benchmark::State& state)
{
    jml::labels::LabelMap map;
    map.height = 128;
    map.width = 128;
    std::mt19937_64 rng(5);
    for (std::size_t i = 0; i < map.height * map.width; ++i) {
        map.classes.push_back(static_cast<int>((i / 37 + rng() % 2) % 4));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(jml::labels::boundary_mask(map, 3, exec_arg(state)));
    }
}
BENCHMARK(BM_BoundaryMask)->ArgsProduct({{0}, {0, 1}});

void BM_Calibration(benchmark::State& state)
{
    const std::size_t classes = 4;
    const auto pixels = static_cast<std::size_t>(state.range(0));
    auto raw = uniform(classes * pixels, 6);
    for (std::size_t p = 0; p < pixels; ++p) {
        double total = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            total += raw[c * pixels + p];
        }
        for (std::size_t c = 0; c < classes; ++c) {
            raw[c * pixels + p] /= total;
        }
    }
    const jml::Tensor probs(jml::Shape{classes, pixels}, raw);
    std::vector<int> truth(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
        truth[p] = static_cast<int>(p % classes);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(jml::metrics::calibration_error(probs, truth, 15, jml::metrics::CalibrationKind::sce,
                                                                 nullptr, 255, exec_arg(state)));
    }
}
BENCHMARK(BM_Calibration)->ArgsProduct({{1 << 16}, {0, 1}});

}  // namespace

BENCHMARK_MAIN();
