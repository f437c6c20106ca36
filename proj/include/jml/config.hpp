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

#ifndef JML_CONFIG_HPP
#define JML_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "jml/compositions.hpp"
#include "jml/losses.hpp"
#include "jml/synthetic.hpp"

namespace jml::harness {

enum class Technique { supervised, ls, bls, kd, ssl };
std::string_view to_string(Technique t);
Technique parse_technique(std::string_view name);

struct ModelSpec {
    std::size_t patch = 3;
    std::vector<std::size_t> hidden{16};
};

struct OptimizerSpec {
    double learning_rate = 0.01;
    double momentum = 0.9;
    double poly_power = 0.9;
    double weight_decay = 5e-4;
    std::size_t iterations = 2000;
    std::size_t batch_size = 2;
    /// Side of the square random window each training image is cut to;
    /// 0 trains on whole images. Validation always uses whole images.
    std::size_t crop = 32;
};

struct KdSpec {
    std::size_t width_multiplier = 4;
    Technique teacher_technique = Technique::supervised;
    std::size_t teacher_iterations = 0;  // 0: same as the student
};

struct SslSpec {
    double labeled_fraction = 0.25;
    double ema_decay = 0.999;
    double augment_noise = 0.1;  // std-dev added to the student's view
};

struct EvalSpec {
    std::size_t interval = 250;  // iterations between validation passes
    std::size_t bins = 15;
    std::size_t boundary_kernel = 3;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    Technique technique = Technique::supervised;
    DatasetSpec dataset;
    ModelSpec model;
    OptimizerSpec optimizer;
    losses::LossConfig loss;
    compose::CompositionWeights weights;
    KdSpec kd;
    SslSpec ssl;
    EvalSpec eval;

    /// Throws on any inconsistent or out-of-range field.
    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& c);
nlohmann::json to_json(const DatasetSpec& d);
/// Missing keys keep their defaults; unknown keys are errors.
ExperimentConfig config_from_json(const nlohmann::json& j);
DatasetSpec dataset_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace jml::harness

#endif  // JML_CONFIG_HPP
