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

#ifndef JML_LABELS_HPP
#define JML_LABELS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "jml/parallel.hpp"
#include "jml/tensor.hpp"

namespace jml::labels {

inline constexpr int kDefaultIgnore = 255;

using Mask = std::vector<std::uint8_t>;

/// H x W map of class indices. Pixels equal to `ignore` carry no label.
struct LabelMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<int> classes;
    std::optional<int> ignore = kDefaultIgnore;

    LabelMap() = default;
    LabelMap(std::size_t h, std::size_t w, std::vector<int> values, std::optional<int> ignore_value = kDefaultIgnore);

    std::size_t size() const { return classes.size(); }
    int at(std::size_t row, std::size_t col) const { return classes[row * width + col]; }
    bool ignored(std::size_t i) const { return ignore && classes[i] == *ignore; }
    /// Throws unless every non-ignored entry lies in [0, C).
    void validate(std::size_t num_classes) const;
};

/// C x H x W per-pixel class distributions. `valid` is H x W; ignored pixels
/// have an all-zero column and valid = 0.
struct SoftLabelField {
    Tensor values;
    Mask valid;

    std::size_t classes() const { return values.shape()[0]; }
    std::size_t height() const { return values.shape()[1]; }
    std::size_t width() const { return values.shape()[2]; }
};

SoftLabelField one_hot(const LabelMap& labels, std::size_t num_classes);

/// Pixel i is a boundary pixel iff some pixel in its k x k neighbourhood has a
/// different (non-ignored) label. Computed by max-pooling each one-hot channel
/// and flagging pixels where more than one channel is active. Ignored pixels
/// are never boundary pixels and never count as neighbours.
Mask boundary_mask(const LabelMap& labels, std::size_t k, Exec exec = Exec::parallel);
Mask boundary_mask(const SoftLabelField& onehot, std::size_t k, Exec exec = Exec::parallel);

enum class SmoothingMode { uniform, boundary };

/// (1 - eps) * onehot + eps / C, applied to every valid pixel (uniform) or to
/// boundary pixels only (boundary, kernel k).
SoftLabelField smooth_labels(const SoftLabelField& onehot, double epsilon, SmoothingMode mode, std::size_t k = 3,
                             Exec exec = Exec::parallel);

}  // namespace jml::labels

#endif  // JML_LABELS_HPP
