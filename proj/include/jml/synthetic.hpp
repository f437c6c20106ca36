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

#ifndef JML_SYNTHETIC_HPP
#define JML_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "jml/labels.hpp"
#include "jml/tensor.hpp"

namespace jml::harness {

/// Synthetic segmentation data: rectangles and discs of foreground classes
/// over class 0. Foreground class k is drawn with weight 1/k, so higher
/// classes are rarer.
struct DatasetSpec {
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t classes = 4;
    std::size_t train_images = 16;
    std::size_t val_images = 8;
    double shape_density = 5.0;    // expected shapes per image
    double label_noise = 0.0;      // fraction of train pixels relabelled uniformly
    double boundary_jitter = 0.3;  // fraction of boundary pixels given a neighbour's label
    double feature_noise = 1.5;    // std-dev of the per-class signal noise
    double signal = 1.0;           // mean of the true class's signal channel

    void validate() const;
    /// 2 coordinate channels plus one signal channel per class.
    std::size_t feature_channels() const { return 2 + classes; }
};

struct Sample {
    Tensor features;           // F x H x W
    labels::LabelMap labels;   // labels used for training / scoring
    labels::LabelMap clean;    // labels before jitter and noise
};

struct Dataset {
    DatasetSpec spec;
    std::vector<Sample> train;
    std::vector<Sample> val;
};

/// Deterministic in (spec, seed). Boundary jitter applies to both splits,
/// label noise to the training split only.
Dataset generate_synthetic(const DatasetSpec& spec, std::uint64_t seed);

/// The class map alone, before jitter, noise and feature synthesis.
labels::LabelMap draw_layout(const DatasetSpec& spec, std::uint64_t seed, std::size_t index);

}  // namespace jml::harness

#endif  // JML_SYNTHETIC_HPP
