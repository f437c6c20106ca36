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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "jml/kernels.hpp"
#include "jml/parallel.hpp"
#include "jml/tensor.hpp"

namespace {

using jml::Exec;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = u(rng);
    }
    return v;
}

TEST(Tensor, ShapeAndAccess)
{
    jml::Tensor t(jml::Shape{2, 3});
    EXPECT_EQ(t.size(), 6u);
    t.at({1, 2}) = 5.0;
    EXPECT_EQ(t[5], 5.0);
    EXPECT_EQ(jml::to_string(t.shape()), "[2, 3]");
    EXPECT_THROW(t.at({2, 0}), std::out_of_range);
    EXPECT_THROW(t.item(), std::logic_error);
    EXPECT_THROW(jml::Tensor(jml::Shape{2}, {1.0}), std::invalid_argument);
    EXPECT_EQ(t.reshaped({3, 2}).shape(), (jml::Shape{3, 2}));
    EXPECT_THROW(t.reshaped({4}), std::invalid_argument);
}

TEST(Kernels, SumAndDotMatchSerial)
{
    for (std::size_t n : {0u, 1u, 7u, 2048u, 2049u, 10000u}) {
        auto x = random_vector(n, n + 1);
        auto y = random_vector(n, n + 2);
        double sx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sx += x[i];
            sxy += x[i] * y[i];
        }
        EXPECT_EQ(jml::kernels::sum(x, Exec::serial), sx);
        EXPECT_EQ(jml::kernels::dot(x, y, Exec::serial), sxy);
        EXPECT_NEAR(jml::kernels::sum(x, Exec::parallel), sx, 1e-10);
        EXPECT_NEAR(jml::kernels::dot(x, y, Exec::parallel), sxy, 1e-10);
    }
}

TEST(Kernels, ParallelSumIsRepeatable)
{
    auto x = random_vector(50000, 3);
    const double first = jml::kernels::sum(x);
    for (int r = 0; r < 5; ++r) {
        EXPECT_EQ(jml::kernels::sum(x), first);
    }
}

TEST(Kernels, GemmParallelMatchesSerialExactly)
{
    const std::size_t dims[][3] = {{1, 1, 1}, {3, 5, 2}, {4, 300, 7}, {7, 513, 54}, {16, 1000, 9}, {5, 2, 600}};
    std::uint64_t seed = 10;
    for (const auto& d : dims) {
        const std::size_t m = d[0], n = d[1], k = d[2];
        for (bool ta : {false, true}) {
            for (bool tb : {false, true}) {
                auto a = random_vector(m * k, ++seed);
                auto b = random_vector(k * n, ++seed);
                std::vector<double> cs(m * n), cp(m * n, 99.0);
                jml::kernels::gemm(ta, tb, m, n, k, a, b, cs, Exec::serial);
                jml::kernels::gemm(ta, tb, m, n, k, a, b, cp, Exec::parallel);
                EXPECT_EQ(cs, cp) << m << "x" << n << "x" << k << " ta=" << ta << " tb=" << tb;
                // spot-check one entry against the definition
                double s = 0.0;
                for (std::size_t p = 0; p < k; ++p) {
                    s += (ta ? a[p * m] : a[p]) * (tb ? b[(n - 1) * k + p] : b[p * n + n - 1]);
                }
                EXPECT_NEAR(cs[n - 1], s, 1e-12);
            }
        }
    }
}

TEST(Kernels, GemmRejectsBadSizes)
{
    std::vector<double> a(6), b(6), c(4);
    EXPECT_THROW(jml::kernels::gemm(false, false, 2, 2, 2, a, b, c), std::invalid_argument);
}

TEST(Kernels, MaxPoolMatchesBruteForce)
{
    const std::size_t planes = 3, h = 6, w = 5;
    auto in = random_vector(planes * h * w, 77);
    for (std::size_t k : {1u, 3u, 5u, 11u}) {
        std::vector<double> ps(in.size()), pp(in.size());
        std::vector<std::size_t> as(in.size()), ap(in.size());
        jml::kernels::max_pool2d(in, planes, h, w, k, ps, as, Exec::serial);
        jml::kernels::max_pool2d(in, planes, h, w, k, pp, ap, Exec::parallel);
        EXPECT_EQ(ps, pp);
        EXPECT_EQ(as, ap);
        const long r = static_cast<long>(k / 2);
        for (std::size_t q = 0; q < planes; ++q) {
            for (long i = 0; i < static_cast<long>(h); ++i) {
                for (long j = 0; j < static_cast<long>(w); ++j) {
                    double best = -1e300;
                    for (long di = -r; di <= r; ++di) {
                        for (long dj = -r; dj <= r; ++dj) {
                            const long ii = std::clamp(i + di, 0L, static_cast<long>(h) - 1);
                            const long jj = std::clamp(j + dj, 0L, static_cast<long>(w) - 1);
                            best = std::max(best, in[q * h * w + ii * w + jj]);
                        }
                    }
                    EXPECT_EQ(ps[q * h * w + i * w + j], best);
                }
            }
        }
    }
}

TEST(Parallel, ExceptionsPropagate)
{
    EXPECT_THROW(jml::parallel_for(100, Exec::parallel,
                                   [](std::size_t i) {
                                       if (i == 42) {
                                           throw std::runtime_error("boom");
                                       }
                                   }),
                 std::runtime_error);
}

}  // namespace
