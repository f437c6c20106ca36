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

#include "jml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace jml::metrics {

ConfusionAccumulator::ConfusionAccumulator(std::size_t classes)
    : intersection_(classes, 0), union_(classes, 0), predicted_(classes, 0), labelled_(classes, 0)
{
}

void ConfusionAccumulator::accumulate(std::span<const int> predicted, std::span<const int> truth,
                                      std::optional<int> ignore, Exec exec)
{
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("accumulate: prediction has " + std::to_string(predicted.size()) +
                                    " pixels, labels have " + std::to_string(truth.size()));
    }
    const auto c = static_cast<int>(classes());
    auto part = blocked_reduce(
        truth.size(), exec, ConfusionAccumulator(classes()),
        [&](std::size_t begin, std::size_t end) {
            ConfusionAccumulator local(classes());
            for (std::size_t i = begin; i < end; ++i) {
                const int t = truth[i];
                if (ignore && t == *ignore) {
                    continue;
                }
                const int p = predicted[i];
                if (t < 0 || t >= c || p < 0 || p >= c) {
                    throw std::invalid_argument("accumulate: class index out of range at pixel " + std::to_string(i));
                }
                ++local.total_;
                ++local.predicted_[static_cast<std::size_t>(p)];
                ++local.labelled_[static_cast<std::size_t>(t)];
                if (p == t) {
                    ++local.correct_;
                    ++local.intersection_[static_cast<std::size_t>(t)];
                    ++local.union_[static_cast<std::size_t>(t)];
                } else {
                    ++local.union_[static_cast<std::size_t>(t)];
                    ++local.union_[static_cast<std::size_t>(p)];
                }
            }
            return local;
        },
        [](ConfusionAccumulator& acc, const ConfusionAccumulator& part) { acc.merge(part); });
    merge(part);
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other)
{
    if (other.classes() != classes()) {
        throw std::invalid_argument("merge: accumulators have different class counts");
    }
    for (std::size_t k = 0; k < classes(); ++k) {
        intersection_[k] += other.intersection_[k];
        union_[k] += other.union_[k];
        predicted_[k] += other.predicted_[k];
        labelled_[k] += other.labelled_[k];
    }
    total_ += other.total_;
    correct_ += other.correct_;
}

double ConfusionAccumulator::accuracy() const
{
    if (total_ == 0) {
        throw std::domain_error("accuracy: no scored pixels");
    }
    return static_cast<double>(correct_) / static_cast<double>(total_);
}

MiouResult miou(const ConfusionAccumulator& acc)
{
    if (acc.total() == 0) {
        throw std::domain_error("miou: no scored pixels");
    }
    MiouResult result;
    result.per_class.resize(acc.classes());
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < acc.classes(); ++c) {
        if (acc.union_count(c) == 0) {
            continue;
        }
        const double iou = static_cast<double>(acc.intersection(c)) / static_cast<double>(acc.union_count(c));
        result.per_class[c] = iou;
        total += iou;
        ++counted;
    }
    result.value = total / static_cast<double>(counted);
    return result;
}

MiouResult miou(std::span<const ConfusionAccumulator> images, MiouScope scope)
{
    if (images.empty()) {
        throw std::domain_error("miou: no images");
    }
    if (scope == MiouScope::dataset) {
        ConfusionAccumulator pooled(images.front().classes());
        for (const auto& image : images) {
            pooled.merge(image);
        }
        return miou(pooled);
    }
    const std::size_t classes = images.front().classes();
    MiouResult result;
    result.per_class.resize(classes);
    std::vector<double> class_sum(classes, 0.0);
    std::vector<std::size_t> class_count(classes, 0);
    double total = 0.0;
    std::size_t scored_images = 0;
    for (const auto& image : images) {
        if (image.total() == 0) {
            continue;
        }
        const MiouResult one = miou(image);
        total += one.value;
        ++scored_images;
        for (std::size_t c = 0; c < classes; ++c) {
            if (one.per_class[c]) {
                class_sum[c] += *one.per_class[c];
                ++class_count[c];
            }
        }
    }
    if (scored_images == 0) {
        throw std::domain_error("miou: no scored pixels");
    }
    for (std::size_t c = 0; c < classes; ++c) {
        if (class_count[c] != 0) {
            result.per_class[c] = class_sum[c] / static_cast<double>(class_count[c]);
        }
    }
    result.value = total / static_cast<double>(scored_images);
    return result;
}

CalibrationBins::CalibrationBins(std::size_t bins, std::size_t classes)
    : bins_(bins), classes_(classes), count_(bins * classes, 0), conf_(bins * classes, 0.0), acc_(bins * classes, 0.0)
{
    if (bins == 0) {
        throw std::invalid_argument("calibration needs at least one bin");
    }
}

std::size_t CalibrationBins::bin_of(double confidence) const
{
    const auto b = static_cast<std::size_t>(std::floor(confidence * static_cast<double>(bins_)));
    return std::min(b, bins_ - 1);
}

void CalibrationBins::add(std::size_t cls, double confidence, bool correct)
{
    const std::size_t at = cls * bins_ + bin_of(confidence);
    ++count_[at];
    conf_[at] += confidence;
    acc_[at] += correct ? 1.0 : 0.0;
}

void CalibrationBins::merge(const CalibrationBins& other)
{
    if (other.bins_ != bins_ || other.classes_ != classes_) {
        throw std::invalid_argument("merge: calibration tables differ in layout");
    }
    for (std::size_t i = 0; i < count_.size(); ++i) {
        count_[i] += other.count_[i];
        conf_[i] += other.conf_[i];
        acc_[i] += other.acc_[i];
    }
}

double CalibrationBins::error(std::uint64_t scored) const
{
    if (scored == 0) {
        throw std::domain_error("calibration error: no scored pixels");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < count_.size(); ++i) {
        // (n_b / N) * |acc_b / n_b - conf_b / n_b| = |acc_sum - conf_sum| / N
        total += std::fabs(acc_[i] - conf_[i]);
    }
    return total / static_cast<double>(scored) / static_cast<double>(classes_);
}

std::vector<int> argmax_labels(const Tensor& probs)
{
    if (probs.rank() == 0 || probs.shape()[0] == 0) {
        throw std::invalid_argument("argmax_labels: needs a class axis");
    }
    const std::size_t classes = probs.shape()[0];
    const std::size_t pixels = probs.size() / classes;
    std::vector<int> out(pixels, 0);
    for (std::size_t j = 0; j < pixels; ++j) {
        double best = probs[j];
        for (std::size_t c = 1; c < classes; ++c) {
            if (probs[c * pixels + j] > best) {
                best = probs[c * pixels + j];
                out[j] = static_cast<int>(c);
            }
        }
    }
    return out;
}

CalibrationResult calibration_error(const Tensor& probs, std::span<const int> truth, std::size_t bins,
                                    CalibrationKind kind, const std::vector<std::uint8_t>* mask,
                                    std::optional<int> ignore, Exec exec)
{
    if (probs.rank() == 0 || probs.shape()[0] == 0) {
        throw std::invalid_argument("calibration_error: probabilities need a class axis");
    }
    const std::size_t classes = probs.shape()[0];
    const std::size_t pixels = probs.size() / classes;
    if (truth.size() != pixels) {
        throw std::invalid_argument("calibration_error: " + std::to_string(truth.size()) + " labels for " +
                                    std::to_string(pixels) + " pixels");
    }
    if (mask != nullptr && mask->size() != pixels) {
        throw std::invalid_argument("calibration_error: mask size does not match pixel count");
    }
    const std::size_t rows = kind == CalibrationKind::ece ? 1 : classes;

    struct Partial {
        CalibrationBins table;
        std::uint64_t scored = 0;
    };
    Partial merged = blocked_reduce(
        pixels, exec, Partial{CalibrationBins(bins, rows), 0},
        [&](std::size_t begin, std::size_t end) {
            Partial local{CalibrationBins(bins, rows), 0};
            for (std::size_t j = begin; j < end; ++j) {
                const int t = truth[j];
                if ((ignore && t == *ignore) || (mask != nullptr && !(*mask)[j])) {
                    continue;
                }
                if (t < 0 || static_cast<std::size_t>(t) >= classes) {
                    throw std::invalid_argument("calibration_error: label out of range at pixel " + std::to_string(j));
                }
                double mass = 0.0;
                std::size_t top = 0;
                for (std::size_t c = 0; c < classes; ++c) {
                    const double v = probs[c * pixels + j];
                    mass += v;
                    if (v > probs[top * pixels + j]) {
                        top = c;
                    }
                }
                if (std::fabs(mass - 1.0) > 1e-6) {
                    throw std::invalid_argument("calibration_error: pixel " + std::to_string(j) +
                                                " is not a normalized distribution");
                }
                ++local.scored;
                if (kind == CalibrationKind::ece) {
                    local.table.add(0, probs[top * pixels + j], static_cast<int>(top) == t);
                } else {
                    for (std::size_t c = 0; c < classes; ++c) {
                        local.table.add(c, probs[c * pixels + j], static_cast<int>(c) == t);
                    }
                }
            }
            return local;
        },
        [](Partial& acc, const Partial& part) {
            acc.table.merge(part.table);
            acc.scored += part.scored;
        });
    if (merged.scored == 0) {
        throw std::domain_error("calibration_error: no pixels selected");
    }
    CalibrationResult result{merged.table.error(merged.scored), merged.scored, kind, merged.table};
    return result;
}

void write_bins_csv(std::ostream& os, const CalibrationResult& result)
{
    const CalibrationBins& t = result.table;
    const bool per_class = result.kind == CalibrationKind::sce;
    os << (per_class ? "class,bin_lo,bin_hi,count,mean_conf,mean_acc\n" : "bin_lo,bin_hi,count,mean_conf,mean_acc\n");
    const auto width = static_cast<double>(t.bins());
    for (std::size_t c = 0; c < t.classes(); ++c) {
        for (std::size_t b = 0; b < t.bins(); ++b) {
            const std::uint64_t n = t.count(c, b);
            if (per_class) {
                os << c << ',';
            }
            os << static_cast<double>(b) / width << ',' << static_cast<double>(b + 1) / width << ',' << n << ',';
            if (n == 0) {
                os << ",\n";
            } else {
                os << t.confidence_sum(c, b) / static_cast<double>(n) << ','
                   << t.accuracy_sum(c, b) / static_cast<double>(n) << '\n';
            }
        }
    }
}

void write_class_iou_csv(std::ostream& os, const MiouResult& result)
{
    os << "class,iou\n";
    for (std::size_t c = 0; c < result.per_class.size(); ++c) {
        os << c << ',';
        if (result.per_class[c]) {
            os << *result.per_class[c];
        }
        os << '\n';
    }
}

}  // namespace jml::metrics
