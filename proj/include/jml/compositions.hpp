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

#ifndef JML_COMPOSITIONS_HPP
#define JML_COMPOSITIONS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jml/autodiff.hpp"
#include "jml/losses.hpp"
#include "jml/tensor.hpp"

// Training objectives that mix cross entropy with a Jaccard-type term:
//
//   smoothed labels:  l_ce * CE(S, L) + l_jml * JML(S, L)
//   distillation:     l_ce * (mu_L CE(S, L) + mu_T CE(S, T))
//                   + l_jml * (nu_L JML(S, L) + nu_T JML(S, T))
//   semi-supervised:  l_ce * (eta_S CE_S + eta_U CE_U)
//                   + l_jml * (theta_S JML_S + theta_U JML_U)
//
// Terms with a zero weight are left out of the graph. Teacher predictions
// always pass through stop_gradient.
namespace jml::compose {

struct CompositionWeights {
    double lambda_ce = 0.25;
    double lambda_jml = 0.75;
    double mu_label = 0.5;
    double mu_teacher = 0.5;
    double nu_label = 0.5;
    double nu_teacher = 0.5;
    double eta_sup = 0.5;
    double eta_unsup = 0.5;
    double theta_sup = 0.5;
    double theta_unsup = 0.5;

    /// Throws unless all weights are non-negative and lambda_ce + lambda_jml > 0.
    void validate() const;
};

/// Shape of a C x B x H x W prediction batch.
struct BatchLayout {
    std::size_t classes = 0;
    std::size_t images = 1;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t pixels_per_image() const { return height * width; }
    Shape shape() const { return {classes, images, height, width}; }
    losses::ClassLayout class_layout() const { return {classes, images, height * width}; }
};

/// Per-pixel class distributions (C x B x H x W) and a B x H x W validity
/// mask; invalid pixels have all-zero label columns.
struct Supervision {
    Tensor labels;
    std::vector<std::uint8_t> valid;

    std::size_t scored() const;
};

struct Term {
    std::string name;
    double weight = 0.0;  // overall coefficient, e.g. lambda_ce * mu_label
    ad::Expr value;
    std::vector<std::size_t> active_classes;  // empty for CE terms
};

struct Objective {
    ad::Expr total;
    std::vector<Term> terms;
};

/// Class-averaged IoU-type loss of `student` against `target` under the
/// config's variant and scope. `student_value` and `target_value` feed class
/// selection. Invalid pixels are masked out of both operands.
Term jaccard_term(std::string name, double weight, ad::Expr student, const Tensor& student_value, ad::Expr target,
                  const Tensor& target_value, const std::vector<std::uint8_t>& valid, const BatchLayout& layout,
                  const losses::LossConfig& config, const losses::ActiveClassPolicy& policy);

Objective ls_objective(ad::Graph& graph, ad::Expr student, const Tensor& student_value, const Supervision& labels,
                       const BatchLayout& layout, const CompositionWeights& weights, const losses::LossConfig& config);

Objective kd_objective(ad::Graph& graph, ad::Expr student, const Tensor& student_value, ad::Expr teacher,
                       const Tensor& teacher_value, const Supervision& hard_labels, const BatchLayout& layout,
                       const CompositionWeights& weights, const losses::LossConfig& config);

struct SslBatch {
    ad::Expr student;     // predictions on the augmented batch
    Tensor student_value;
    BatchLayout layout;
};

Objective ssl_objective(ad::Graph& graph, const SslBatch& supervised, const Supervision& labels,
                        const SslBatch& unsupervised, ad::Expr teacher_targets, const Tensor& teacher_value,
                        const CompositionWeights& weights, const losses::LossConfig& config);

/// teacher <- decay * teacher + (1 - decay) * student, elementwise.
void ema_update(std::span<double> teacher, std::span<const double> student, double decay);
void ema_update(std::vector<Tensor>& teacher, const std::vector<Tensor>& student, double decay);

}  // namespace jml::compose

#endif  // JML_COMPOSITIONS_HPP
