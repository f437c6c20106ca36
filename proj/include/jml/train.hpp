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

#ifndef JML_TRAIN_HPP
#define JML_TRAIN_HPP

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "jml/compositions.hpp"
#include "jml/config.hpp"
#include "jml/evaluation.hpp"
#include "jml/model.hpp"

namespace jml::harness {

/// Thrown when the training loss becomes NaN or infinite.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t iteration, double loss);
    std::size_t iteration() const { return iteration_; }

private:
    std::size_t iteration_;
};

struct HistoryRow {
    std::size_t iteration = 0;  // 1-based count of completed steps
    double train_loss = 0.0;    // mean objective since the previous row
    double learning_rate = 0.0; // rate used by the last step
    EvalMetrics metrics;
};

struct RunResult {
    std::vector<HistoryRow> history;
    EvalMetrics final_metrics;
    Mlp model;
    Tensor val_probs;  // C x B x H x W
};

struct TrainResult {
    ExperimentConfig config;
    RunResult student;
    std::optional<RunResult> teacher;  // distillation only
    std::vector<labels::LabelMap> val_labels;
};

struct TrainHooks {
    /// Called after every optimizer step with the objective just minimized.
    std::function<void(std::size_t iteration, const compose::Objective&)> on_step;
};

TrainResult train(const ExperimentConfig& config, const TrainHooks& hooks = {});

/// history.csv, final_metrics.json, class_iou.csv, calibration_bins.csv,
/// predictions.ptf, val_labels.ptf, model.json, config.json, plus
/// teacher_history.csv and teacher_model.json for distillation.
void write_artifacts(const TrainResult& result, const std::filesystem::path& out_dir);

/// Per-pixel supervision for a training image under a technique: one-hot,
/// uniformly smoothed (ls) or boundary-smoothed (bls).
labels::SoftLabelField training_targets(const labels::LabelMap& map, std::size_t classes, Technique technique,
                                        const losses::LossConfig& loss);

}  // namespace jml::harness

#endif  // JML_TRAIN_HPP
