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

#include "jml/labels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "jml/kernels.hpp"

namespace jml::labels {

LabelMap::LabelMap(std::size_t h, std::size_t w, std::vector<int> values, std::optional<int> ignore_value)
    : height(h), width(w), classes(std::move(values)), ignore(ignore_value)
{
    if (classes.size() != h * w) {
        throw std::invalid_argument("label map has " + std::to_string(classes.size()) + " entries, expected " +
                                    std::to_string(h * w));
    }
}

void LabelMap::validate(std::size_t num_classes) const
{
    if (classes.size() != height * width) {
        throw std::invalid_argument("label map size does not match its extents");
    }
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (ignored(i)) {
            continue;
        }
        if (classes[i] < 0 || static_cast<std::size_t>(classes[i]) >= num_classes) {
            throw std::invalid_argument("label " + std::to_string(classes[i]) + " at pixel " + std::to_string(i) +
                                        " is outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

SoftLabelField one_hot(const LabelMap& labels, std::size_t num_classes)
{
    labels.validate(num_classes);
    const std::size_t n = labels.size();
    SoftLabelField field{Tensor(Shape{num_classes, labels.height, labels.width}), Mask(n, 0)};
    for (std::size_t i = 0; i < n; ++i) {
        if (labels.ignored(i)) {
            continue;
        }
        field.values[static_cast<std::size_t>(labels.classes[i]) * n + i] = 1.0;
        field.valid[i] = 1;
    }
    return field;
}

Mask boundary_mask(const SoftLabelField& onehot, std::size_t k, Exec exec)
{
    if (k == 0 || k % 2 == 0) {
        throw std::invalid_argument("boundary kernel size must be odd and positive, got " + std::to_string(k));
    }
    const std::size_t c = onehot.classes();
    const std::size_t h = onehot.height();
    const std::size_t w = onehot.width();
    const std::size_t n = h * w;
    std::vector<double> pooled(onehot.values.size());
    kernels::max_pool2d(onehot.values.values(), c, h, w, k, pooled, {}, exec);
    Mask mask(n, 0);
    parallel_for(n, exec, [&](std::size_t i) {
        if (!onehot.valid[i]) {
            return;
        }
        std::size_t active = 0;
        for (std::size_t ch = 0; ch < c; ++ch) {
            active += pooled[ch * n + i] > 0.0 ? 1 : 0;
        }
        mask[i] = active > 1 ? 1 : 0;
    });
    return mask;
}

Mask boundary_mask(const LabelMap& labels, std::size_t k, Exec exec)
{
    int top = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels.ignored(i)) {
            top = std::max(top, labels.classes[i]);
        }
    }
    return boundary_mask(one_hot(labels, static_cast<std::size_t>(top) + 1), k, exec);
}

SoftLabelField smooth_labels(const SoftLabelField& onehot, double epsilon, SmoothingMode mode, std::size_t k,
                             Exec exec)
{
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("smoothing coefficient must lie in [0, 1]");
    }
    const std::size_t c = onehot.classes();
    const std::size_t n = onehot.height() * onehot.width();
    Mask target = mode == SmoothingMode::boundary ? boundary_mask(onehot, k, exec) : onehot.valid;
    SoftLabelField out = onehot;
    const double floor = epsilon / static_cast<double>(c);
    parallel_for(n, exec, [&](std::size_t i) {
        if (!onehot.valid[i] || !target[i]) {
            return;
        }
        for (std::size_t ch = 0; ch < c; ++ch) {
            out.values[ch * n + i] = (1.0 - epsilon) * onehot.values[ch * n + i] + floor;
        }
    });
    return out;
}

}  // namespace jml::labels
