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

#ifndef JML_METRICS_HPP
#define JML_METRICS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "jml/parallel.hpp"
#include "jml/tensor.hpp"

namespace jml::metrics {

/// Per-class intersection / union / prediction / label counts plus pixel
/// accuracy counters. Accumulators are values: accumulate images into
/// separate instances and merge() them.
class ConfusionAccumulator {
public:
    explicit ConfusionAccumulator(std::size_t classes = 0);

    /// Pixels whose true label equals `ignore` are skipped. Predictions must be
    /// valid class indices; true labels must be valid or ignored.
    void accumulate(std::span<const int> predicted, std::span<const int> truth, std::optional<int> ignore,
                    Exec exec = Exec::parallel);
    void merge(const ConfusionAccumulator& other);

    std::size_t classes() const { return intersection_.size(); }
    std::uint64_t intersection(std::size_t c) const { return intersection_.at(c); }
    std::uint64_t union_count(std::size_t c) const { return union_.at(c); }
    std::uint64_t predicted(std::size_t c) const { return predicted_.at(c); }
    std::uint64_t labelled(std::size_t c) const { return labelled_.at(c); }
    std::uint64_t total() const { return total_; }
    std::uint64_t correct() const { return correct_; }
    double accuracy() const;

    friend bool operator==(const ConfusionAccumulator&, const ConfusionAccumulator&) = default;

private:
    std::vector<std::uint64_t> intersection_;
    std::vector<std::uint64_t> union_;
    std::vector<std::uint64_t> predicted_;
    std::vector<std::uint64_t> labelled_;
    std::uint64_t total_ = 0;
    std::uint64_t correct_ = 0;
};

enum class MiouScope { dataset, image };

struct MiouResult {
    double value = 0.0;
    /// IoU per class; empty where the class has zero union.
    std::vector<std::optional<double>> per_class;
};

/// Dataset scope: IoU from pooled counts, averaged over classes with a
/// nonzero union.
MiouResult miou(const ConfusionAccumulator& acc);
/// Dataset scope pools the per-image accumulators; image scope averages each
/// image's class-mean IoU over images (per_class then holds the mean over
/// images where the class has a nonzero union).
MiouResult miou(std::span<const ConfusionAccumulator> images, MiouScope scope);

enum class CalibrationKind { ece, sce };

/// Equal-width confidence bins over [0, 1]; the last bin is right-closed.
/// For SCE every class keeps its own row of bins.
class CalibrationBins {
public:
    CalibrationBins(std::size_t bins = 15, std::size_t classes = 1);

    std::size_t bins() const { return bins_; }
    std::size_t classes() const { return classes_; }
    std::size_t bin_of(double confidence) const;
    void add(std::size_t cls, double confidence, bool correct);
    void merge(const CalibrationBins& other);

    std::uint64_t count(std::size_t cls, std::size_t bin) const { return count_[cls * bins_ + bin]; }
    double confidence_sum(std::size_t cls, std::size_t bin) const { return conf_[cls * bins_ + bin]; }
    double accuracy_sum(std::size_t cls, std::size_t bin) const { return acc_[cls * bins_ + bin]; }
    /// sum over classes and bins of (n_b / N) |acc_b - conf_b| divided by the
    /// number of class rows, with N the number of scored samples per row.
    double error(std::uint64_t scored) const;

private:
    std::size_t bins_;
    std::size_t classes_;
    std::vector<std::uint64_t> count_;
    std::vector<double> conf_;
    std::vector<double> acc_;
};

struct CalibrationResult {
    double value = 0.0;
    std::uint64_t scored = 0;
    CalibrationKind kind = CalibrationKind::ece;
    CalibrationBins table;
};

/// Top-class (ECE) or per-class (SCE) calibration error of C x P
/// probabilities against true labels. With a mask only masked pixels are
/// scored (BECE / BSCE). Pixels labelled `ignore` are skipped.
CalibrationResult calibration_error(const Tensor& probs, std::span<const int> truth, std::size_t bins,
                                    CalibrationKind kind, const std::vector<std::uint8_t>* mask = nullptr,
                                    std::optional<int> ignore = 255, Exec exec = Exec::parallel);

/// Argmax over the class axis of C x P probabilities (lowest index on ties).
std::vector<int> argmax_labels(const Tensor& probs);

/// Columns: bin_lo, bin_hi, count, mean_conf, mean_acc (SCE prepends class).
void write_bins_csv(std::ostream& os, const CalibrationResult& result);
/// Columns: class, iou (empty for classes without support).
void write_class_iou_csv(std::ostream& os, const MiouResult& result);

}  // namespace jml::metrics

#endif  // JML_METRICS_HPP
