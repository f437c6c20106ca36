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

#include "jml/evaluation.hpp"

#include <algorithm>
#include <stdexcept>

namespace jml::harness {

nlohmann::json EvalMetrics::to_json() const
{
    return {{"acc", acc},   {"miou_dataset", miou_dataset}, {"miou_image", miou_image}, {"ece", ece},
            {"bece", bece}, {"sce", sce},                   {"bsce", bsce}};
}

EvalMetrics evaluate_predictions(const Tensor& probs, const std::vector<labels::LabelMap>& labels,
                                 std::size_t bins, std::size_t boundary_k, Exec exec)
{
    if (probs.rank() != 4) {
        throw std::invalid_argument("evaluate_predictions: expected C x B x H x W, got " + to_string(probs.shape()));
    }
    const std::size_t classes = probs.shape()[0];
    const std::size_t images = probs.shape()[1];
    const std::size_t pixels = probs.shape()[2] * probs.shape()[3];
    if (labels.size() != images) {
        throw std::invalid_argument("evaluate_predictions: " + std::to_string(labels.size()) + " label maps for " +
                                    std::to_string(images) + " images");
    }
    const Tensor flat = probs.reshaped({classes, images * pixels});
    const std::vector<int> predicted = metrics::argmax_labels(flat);
    std::vector<int> truth;
    std::vector<std::uint8_t> boundary;
    truth.reserve(images * pixels);
    boundary.reserve(images * pixels);
    std::optional<int> ignore;
    std::vector<metrics::ConfusionAccumulator> per_image;
    for (std::size_t b = 0; b < images; ++b) {
        const auto& map = labels[b];
        if (map.height * map.width != pixels) {
            throw std::invalid_argument("evaluate_predictions: label map " + std::to_string(b) +
                                        " does not match the prediction size");
        }
        if (b == 0) {
            ignore = map.ignore;
        } else if (map.ignore != ignore) {
            throw std::invalid_argument("evaluate_predictions: label maps disagree on the ignore value");
        }
        truth.insert(truth.end(), map.classes.begin(), map.classes.end());
        const labels::Mask mask = labels::boundary_mask(map, boundary_k, exec);
        boundary.insert(boundary.end(), mask.begin(), mask.end());
        metrics::ConfusionAccumulator acc(classes);
        acc.accumulate(std::span(predicted).subspan(b * pixels, pixels), map.classes, map.ignore, exec);
        per_image.push_back(std::move(acc));
    }
    EvalMetrics m;
    const auto dataset = metrics::miou(per_image, metrics::MiouScope::dataset);
    m.class_iou = dataset;
    m.miou_dataset = dataset.value;
    m.miou_image = metrics::miou(per_image, metrics::MiouScope::image).value;
    metrics::ConfusionAccumulator pooled(classes);
    for (const auto& acc : per_image) {
        pooled.merge(acc);
    }
    m.acc = pooled.accuracy();
    m.ece_table = metrics::calibration_error(flat, truth, bins, metrics::CalibrationKind::ece, nullptr, ignore, exec);
    m.ece = m.ece_table.value;
    m.sce = metrics::calibration_error(flat, truth, bins, metrics::CalibrationKind::sce, nullptr, ignore, exec).value;
    if (std::any_of(boundary.begin(), boundary.end(), [](std::uint8_t v) { return v != 0; })) {
        m.bece =
            metrics::calibration_error(flat, truth, bins, metrics::CalibrationKind::ece, &boundary, ignore, exec).value;
        m.bsce =
            metrics::calibration_error(flat, truth, bins, metrics::CalibrationKind::sce, &boundary, ignore, exec).value;
    }
    return m;
}

}  // namespace jml::harness
