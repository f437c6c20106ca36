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

#ifndef JML_EVALUATION_HPP
#define JML_EVALUATION_HPP

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "jml/labels.hpp"
#include "jml/metrics.hpp"
#include "jml/parallel.hpp"
#include "jml/tensor.hpp"

namespace jml::harness {

struct EvalMetrics {
    double acc = 0.0;
    double miou_dataset = 0.0;
    double miou_image = 0.0;
    double ece = 0.0;
    double bece = 0.0;  // ECE over boundary pixels of the labels
    double sce = 0.0;
    double bsce = 0.0;
    metrics::MiouResult class_iou;        // dataset scope
    metrics::CalibrationResult ece_table;

    nlohmann::json to_json() const;
};

/// Scores C x B x H x W probabilities against B label maps. Boundary pixels
/// come from boundary_mask(labels, boundary_k) per image. BECE and BSCE are
/// reported as 0 when no image has a boundary pixel.
EvalMetrics evaluate_predictions(const Tensor& probs, const std::vector<labels::LabelMap>& labels,
                                 std::size_t bins, std::size_t boundary_k, Exec exec = Exec::parallel);

}  // namespace jml::harness

#endif  // JML_EVALUATION_HPP
