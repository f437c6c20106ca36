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

#include <random>

#include "jml/labels.hpp"

namespace {

namespace lb = jml::labels;

lb::LabelMap random_map(std::size_t h, std::size_t w, int classes, std::mt19937_64& rng, double ignore_rate = 0.0)
{
    std::uniform_int_distribution<int> cls(0, classes - 1);
    std::bernoulli_distribution ignored(ignore_rate);
    std::vector<int> v(h * w);
    for (auto& c : v) {
        c = ignored(rng) ? lb::kDefaultIgnore : cls(rng);
    }
    return lb::LabelMap(h, w, std::move(v));
}

// Direct neighbourhood scan, independent of the pooling implementation.
lb::Mask boundary_oracle(const lb::LabelMap& m, std::size_t k)
{
    const long r = static_cast<long>(k / 2);
    const long h = static_cast<long>(m.height);
    const long w = static_cast<long>(m.width);
    lb::Mask out(m.size(), 0);
    for (long i = 0; i < h; ++i) {
        for (long j = 0; j < w; ++j) {
            const std::size_t self = static_cast<std::size_t>(i * w + j);
            if (m.ignored(self)) {
                continue;
            }
            for (long di = -r; di <= r && !out[self]; ++di) {
                for (long dj = -r; dj <= r; ++dj) {
                    const long ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= h || jj >= w) {
                        continue;
                    }
                    const std::size_t other = static_cast<std::size_t>(ii * w + jj);
                    if (!m.ignored(other) && m.classes[other] != m.classes[self]) {
                        out[self] = 1;
                        break;
                    }
                }
            }
        }
    }
    return out;
}

TEST(Labels, OneHot)
{
    lb::LabelMap m(1, 3, {0, 2, lb::kDefaultIgnore});
    auto f = lb::one_hot(m, 3);
    EXPECT_EQ(f.values.shape(), (jml::Shape{3, 1, 3}));
    EXPECT_EQ(f.values.storage(), (std::vector<double>{1, 0, 0, 0, 0, 0, 0, 1, 0}));
    EXPECT_EQ(f.valid, (lb::Mask{1, 1, 0}));
    EXPECT_THROW(lb::one_hot(lb::LabelMap(1, 1, {3}), 3), std::invalid_argument);
    EXPECT_THROW(lb::LabelMap(2, 2, {0, 1}), std::invalid_argument);
}

TEST(Labels, BoundaryMaskMatchesNeighbourhoodScan)
{
    std::mt19937_64 rng(1);
    for (int t = 0; t < 200; ++t) {
        const std::size_t h = 1 + rng() % 9, w = 1 + rng() % 9;
        auto m = random_map(h, w, 1 + static_cast<int>(rng() % 4), rng, t % 3 == 0 ? 0.2 : 0.0);
        for (std::size_t k : {1u, 3u, 5u, 7u}) {
            auto expected = boundary_oracle(m, k);
            EXPECT_EQ(lb::boundary_mask(m, k, jml::Exec::serial), expected);
            EXPECT_EQ(lb::boundary_mask(m, k, jml::Exec::parallel), expected);
        }
    }
    EXPECT_THROW(lb::boundary_mask(lb::LabelMap(1, 1, {0}), 2), std::invalid_argument);
}

TEST(Labels, SmoothedRowsSumToOne)
{
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        auto m = random_map(8, 7, 4, rng, 0.1);
        auto onehot = lb::one_hot(m, 4);
        for (auto mode : {lb::SmoothingMode::uniform, lb::SmoothingMode::boundary}) {
            auto s = lb::smooth_labels(onehot, 0.1 * (t % 11), mode, 3);
            const std::size_t n = m.size();
            for (std::size_t i = 0; i < n; ++i) {
                double total = 0.0;
                for (std::size_t c = 0; c < 4; ++c) {
                    total += s.values[c * n + i];
                }
                EXPECT_NEAR(total, onehot.valid[i] ? 1.0 : 0.0, 1e-12);
            }
            EXPECT_EQ(s.valid, onehot.valid);
        }
    }
}

TEST(Labels, UniformSmoothingValues)
{
    auto s = lb::smooth_labels(lb::one_hot(lb::LabelMap(1, 2, {1, 0}), 4), 0.4, lb::SmoothingMode::uniform);
    // (1 - 0.4) * onehot + 0.4 / 4
    EXPECT_EQ(s.values.storage(), (std::vector<double>{0.1, 0.7, 0.7, 0.1, 0.1, 0.1, 0.1, 0.1}));
    EXPECT_THROW(lb::smooth_labels(lb::one_hot(lb::LabelMap(1, 1, {0}), 2), 1.5, lb::SmoothingMode::uniform),
                 std::invalid_argument);
}

TEST(Labels, BoundaryModeTouchesOnlyBoundaryPixels)
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        auto m = random_map(9, 9, 3, rng, 0.05);
        auto onehot = lb::one_hot(m, 3);
        auto s = lb::smooth_labels(onehot, 0.5, lb::SmoothingMode::boundary, 3);
        auto mask = boundary_oracle(m, 3);
        const std::size_t n = m.size();
        for (std::size_t i = 0; i < n; ++i) {
            bool changed = false;
            for (std::size_t c = 0; c < 3; ++c) {
                changed = changed || s.values[c * n + i] != onehot.values[c * n + i];
            }
            EXPECT_EQ(changed, mask[i] != 0) << "pixel " << i;
        }
    }
}

TEST(Labels, ImageSpanningKernelIsUniformSmoothing)
{
    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; ++t) {
        const std::size_t h = 2 + rng() % 10, w = 2 + rng() % 10;
        auto m = random_map(h, w, 3, rng);
        m.classes[0] = 0;
        m.classes[1] = 1;  // at least two classes
        const std::size_t k = 2 * std::max(h, w) - 1;
        auto onehot = lb::one_hot(m, 3);
        auto b = lb::smooth_labels(onehot, 0.5, lb::SmoothingMode::boundary, k);
        auto u = lb::smooth_labels(onehot, 0.5, lb::SmoothingMode::uniform);
        EXPECT_EQ(b.values, u.values);
    }
}

TEST(Labels, ImageSizedKernelCanMissDistantPixels)
{
    // 5 x 5 map, class 1 only in the top-left corner: with k = 5 the
    // bottom-right pixel sees rows/cols 2..4 and stays one-hot.
    std::vector<int> v(25, 0);
    v[0] = 1;
    lb::LabelMap m(5, 5, v);
    auto onehot = lb::one_hot(m, 2);
    auto b = lb::smooth_labels(onehot, 0.5, lb::SmoothingMode::boundary, 5);
    EXPECT_EQ(b.values[24], 1.0);
    auto full = lb::smooth_labels(onehot, 0.5, lb::SmoothingMode::boundary, 9);
    EXPECT_EQ(full.values[24], 0.75);
}

}  // namespace
