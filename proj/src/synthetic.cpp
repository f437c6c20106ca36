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

#include "jml/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace jml::harness {

namespace {

std::mt19937_64 image_rng(std::uint64_t seed, std::uint64_t stream, std::size_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
    return std::mt19937_64(seq);
}

std::size_t foreground_class(std::mt19937_64& rng, std::size_t classes)
{
    std::vector<double> w;
    for (std::size_t k = 1; k < classes; ++k) {
        w.push_back(1.0 / static_cast<double>(k));
    }
    return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng) + 1;
}

labels::LabelMap layout_from(std::mt19937_64& rng, const DatasetSpec& spec)
{
    const auto h = static_cast<double>(spec.height);
    const auto w = static_cast<double>(spec.width);
    labels::LabelMap map(spec.height, spec.width, std::vector<int>(spec.height * spec.width, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double whole = std::floor(spec.shape_density);
    std::size_t shapes = static_cast<std::size_t>(whole);
    if (unit(rng) < spec.shape_density - whole) {
        ++shapes;
    }
    const double scale = std::min(h, w);
    for (std::size_t s = 0; s < shapes; ++s) {
        const int cls = static_cast<int>(foreground_class(rng, spec.classes));
        const double cy = unit(rng) * h;
        const double cx = unit(rng) * w;
        if (rng() & 1U) {
            const double hh = (0.05 + 0.15 * unit(rng)) * scale;
            const double hw = (0.05 + 0.15 * unit(rng)) * scale;
            for (std::size_t r = 0; r < spec.height; ++r) {
                for (std::size_t c = 0; c < spec.width; ++c) {
                    if (std::fabs(static_cast<double>(r) + 0.5 - cy) <= hh &&
                        std::fabs(static_cast<double>(c) + 0.5 - cx) <= hw) {
                        map.classes[r * spec.width + c] = cls;
                    }
                }
            }
        } else {
            const double radius = (0.05 + 0.15 * unit(rng)) * scale;
            for (std::size_t r = 0; r < spec.height; ++r) {
                for (std::size_t c = 0; c < spec.width; ++c) {
                    const double dy = static_cast<double>(r) + 0.5 - cy;
                    const double dx = static_cast<double>(c) + 0.5 - cx;
                    if (dy * dy + dx * dx <= radius * radius) {
                        map.classes[r * spec.width + c] = cls;
                    }
                }
            }
        }
    }
    return map;
}

// Replaces a fraction of boundary labels with the label of a random
// 3 x 3 neighbour.
void jitter_boundaries(std::mt19937_64& rng, labels::LabelMap& map, double fraction)
{
    if (fraction <= 0.0) {
        return;
    }
    const labels::LabelMap source = map;
    const labels::Mask boundary = labels::boundary_mask(source, 3, Exec::serial);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto h = static_cast<long>(map.height);
    const auto w = static_cast<long>(map.width);
    for (long r = 0; r < h; ++r) {
        for (long c = 0; c < w; ++c) {
            const auto i = static_cast<std::size_t>(r * w + c);
            if (!boundary[i] || unit(rng) >= fraction) {
                continue;
            }
            const long nr = std::clamp(r + static_cast<long>(rng() % 3) - 1, 0L, h - 1);
            const long nc = std::clamp(c + static_cast<long>(rng() % 3) - 1, 0L, w - 1);
            map.classes[i] = source.classes[static_cast<std::size_t>(nr * w + nc)];
        }
    }
}

Tensor features_for(std::mt19937_64& rng, const DatasetSpec& spec, const labels::LabelMap& clean)
{
    const std::size_t n = spec.height * spec.width;
    Tensor f(Shape{spec.feature_channels(), spec.height, spec.width});
    std::normal_distribution<double> noise(0.0, spec.feature_noise);
    for (std::size_t r = 0; r < spec.height; ++r) {
        for (std::size_t c = 0; c < spec.width; ++c) {
            const std::size_t i = r * spec.width + c;
            f[i] = 2.0 * (static_cast<double>(r) + 0.5) / static_cast<double>(spec.height) - 1.0;
            f[n + i] = 2.0 * (static_cast<double>(c) + 0.5) / static_cast<double>(spec.width) - 1.0;
        }
    }
    for (std::size_t k = 0; k < spec.classes; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const double mean = clean.classes[i] == static_cast<int>(k) ? spec.signal : 0.0;
            f[(2 + k) * n + i] = mean + noise(rng);
        }
    }
    return f;
}

Sample make_sample(const DatasetSpec& spec, std::uint64_t seed, std::uint64_t stream, std::size_t index,
                   bool training)
{
    auto rng = image_rng(seed, stream, index);
    Sample s;
    s.clean = layout_from(rng, spec);
    s.features = features_for(rng, spec, s.clean);
    s.labels = s.clean;
    jitter_boundaries(rng, s.labels, spec.boundary_jitter);
    if (training && spec.label_noise > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (auto& v : s.labels.classes) {
            if (unit(rng) < spec.label_noise) {
                v = static_cast<int>(rng() % spec.classes);
            }
        }
    }
    return s;
}

}  // namespace

void DatasetSpec::validate() const
{
    if (height == 0 || width == 0) {
        throw std::invalid_argument("dataset: image size must be positive");
    }
    if (classes < 2) {
        throw std::invalid_argument("dataset: need at least 2 classes");
    }
    if (train_images == 0 || val_images == 0) {
        throw std::invalid_argument("dataset: need at least one training and one validation image");
    }
    if (!(shape_density >= 0.0)) {
        throw std::invalid_argument("dataset: shape density must be non-negative");
    }
    if (!(label_noise >= 0.0 && label_noise <= 1.0) || !(boundary_jitter >= 0.0 && boundary_jitter <= 1.0)) {
        throw std::invalid_argument("dataset: label noise and boundary jitter must lie in [0, 1]");
    }
    if (!(feature_noise >= 0.0)) {
        throw std::invalid_argument("dataset: feature noise must be non-negative");
    }
}

labels::LabelMap draw_layout(const DatasetSpec& spec, std::uint64_t seed, std::size_t index)
{
    spec.validate();
    auto rng = image_rng(seed, 0, index);
    return layout_from(rng, spec);
}

Dataset generate_synthetic(const DatasetSpec& spec, std::uint64_t seed)
{
    spec.validate();
    Dataset d;
    d.spec = spec;
    for (std::size_t i = 0; i < spec.train_images; ++i) {
        d.train.push_back(make_sample(spec, seed, 0, i, true));
    }
    for (std::size_t i = 0; i < spec.val_images; ++i) {
        d.val.push_back(make_sample(spec, seed, 1, i, false));
    }
    return d;
}

}  // namespace jml::harness
