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

#include "jml/compositions.hpp"

#include <algorithm>
#include <stdexcept>

namespace jml::compose {

void CompositionWeights::validate() const
{
    for (double w : {lambda_ce, lambda_jml, mu_label, mu_teacher, nu_label, nu_teacher, eta_sup, eta_unsup, theta_sup,
                     theta_unsup}) {
        if (!(w >= 0.0)) {
            throw std::invalid_argument("composition weights must be non-negative");
        }
    }
    if (!(lambda_ce + lambda_jml > 0.0)) {
        throw std::invalid_argument("lambda_ce + lambda_jml must be positive");
    }
}

std::size_t Supervision::scored() const
{
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

namespace {

void check_layout(const Tensor& t, const BatchLayout& layout, const char* what)
{
    if (t.shape() != layout.shape()) {
        throw std::invalid_argument(std::string(what) + " has shape " + to_string(t.shape()) + ", expected " +
                                    to_string(layout.shape()));
    }
}

bool all_valid(const std::vector<std::uint8_t>& valid)
{
    return std::all_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; });
}

// C x B x H x W replication of a B x H x W validity mask.
Tensor class_mask(const std::vector<std::uint8_t>& valid, const BatchLayout& layout)
{
    Tensor mask(layout.shape());
    const std::size_t n = valid.size();
    for (std::size_t c = 0; c < layout.classes; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            mask[c * n + i] = valid[i] ? 1.0 : 0.0;
        }
    }
    return mask;
}

Tensor masked(const Tensor& t, const Tensor& mask)
{
    Tensor out = t;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= mask[i];
    }
    return out;
}

Objective assemble(ad::Graph& graph, std::vector<Term> terms)
{
    Objective objective;
    for (auto& term : terms) {
        if (term.weight == 0.0) {
            continue;
        }
        ad::Expr weighted = term.weight * term.value;
        objective.total = objective.total.valid() ? objective.total + weighted : weighted;
        objective.terms.push_back(std::move(term));
    }
    if (!objective.total.valid()) {
        objective.total = graph.scalar(0.0);
    }
    return objective;
}

Term ce_term(std::string name, double weight, ad::Expr student, ad::Expr target, std::size_t scored)
{
    Term term;
    term.name = std::move(name);
    term.weight = weight;
    if (weight != 0.0) {
        term.value = losses::cross_entropy(student, target, scored);
    }
    return term;
}

}  // namespace

Term jaccard_term(std::string name, double weight, ad::Expr student, const Tensor& student_value, ad::Expr target,
                  const Tensor& target_value, const std::vector<std::uint8_t>& valid, const BatchLayout& layout,
                  const losses::LossConfig& config, const losses::ActiveClassPolicy& policy)
{
    check_layout(student_value, layout, "student predictions");
    check_layout(target_value, layout, "targets");
    Term term;
    term.name = std::move(name);
    term.weight = weight;
    if (weight == 0.0) {
        return term;
    }
    ad::Graph& graph = student.graph();
    ad::Expr x = student;
    ad::Expr y = target;
    Tensor selection_target = target_value;
    if (!all_valid(valid)) {
        const Tensor mask = class_mask(valid, layout);
        ad::Expr m = graph.constant(mask);
        x = x * m;
        y = y * m;
        selection_target = masked(target_value, mask);
    }
    term.active_classes = losses::select_active_classes(selection_target, student_value, policy);
    if (term.active_classes.empty()) {
        term.value = graph.scalar(0.0);
        return term;
    }
    const losses::LossVariant variant = config.variant;
    term.value = losses::aggregate_classes([&variant](ad::Expr a, ad::Expr b) { return losses::build(variant, a, b); },
                                           x, y, layout.class_layout(), term.active_classes, config.scope);
    return term;
}

Objective ls_objective(ad::Graph& graph, ad::Expr student, const Tensor& student_value, const Supervision& labels,
                       const BatchLayout& layout, const CompositionWeights& weights, const losses::LossConfig& config)
{
    weights.validate();
    check_layout(labels.labels, layout, "labels");
    ad::Expr target = graph.constant(labels.labels);
    const auto policy = losses::resolve_policy(config, losses::is_hard(labels.labels));
    std::vector<Term> terms;
    terms.push_back(ce_term("ce", weights.lambda_ce, student, target, labels.scored()));
    terms.push_back(jaccard_term("jml", weights.lambda_jml, student, student_value, target, labels.labels, labels.valid,
                                 layout, config, policy));
    return assemble(graph, std::move(terms));
}

Objective kd_objective(ad::Graph& graph, ad::Expr student, const Tensor& student_value, ad::Expr teacher,
                       const Tensor& teacher_value, const Supervision& hard_labels, const BatchLayout& layout,
                       const CompositionWeights& weights, const losses::LossConfig& config)
{
    weights.validate();
    if (teacher_value.shape() != student_value.shape()) {
        throw std::invalid_argument("teacher predictions " + to_string(teacher_value.shape()) +
                                    " do not match student predictions " + to_string(student_value.shape()));
    }
    check_layout(hard_labels.labels, layout, "labels");
    ad::Expr target = graph.constant(hard_labels.labels);
    ad::Expr soft = ad::stop_gradient(teacher);
    ad::Expr soft_for_ce = soft;
    if (!all_valid(hard_labels.valid)) {
        soft_for_ce = soft * graph.constant(class_mask(hard_labels.valid, layout));
    }
    const std::size_t scored = hard_labels.scored();
    const auto label_policy = losses::resolve_policy(config, true);

    std::vector<Term> terms;
    terms.push_back(ce_term("ce_label", weights.lambda_ce * weights.mu_label, student, target, scored));
    terms.push_back(ce_term("ce_teacher", weights.lambda_ce * weights.mu_teacher, student, soft_for_ce, scored));
    terms.push_back(jaccard_term("jml_label", weights.lambda_jml * weights.nu_label, student, student_value, target,
                                 hard_labels.labels, hard_labels.valid, layout, config, label_policy));
    terms.push_back(jaccard_term("jml_teacher", weights.lambda_jml * weights.nu_teacher, student, student_value, soft,
                                 teacher_value, hard_labels.valid, layout, config, config.teacher_active));
    return assemble(graph, std::move(terms));
}

Objective ssl_objective(ad::Graph& graph, const SslBatch& supervised, const Supervision& labels,
                        const SslBatch& unsupervised, ad::Expr teacher_targets, const Tensor& teacher_value,
                        const CompositionWeights& weights, const losses::LossConfig& config)
{
    weights.validate();
    check_layout(labels.labels, supervised.layout, "labels");
    check_layout(teacher_value, unsupervised.layout, "teacher targets");
    ad::Expr target = graph.constant(labels.labels);
    ad::Expr soft = ad::stop_gradient(teacher_targets);
    const std::vector<std::uint8_t> everywhere(
        unsupervised.layout.images * unsupervised.layout.pixels_per_image(), 1);

    std::vector<Term> terms;
    terms.push_back(ce_term("ce_sup", weights.lambda_ce * weights.eta_sup, supervised.student, target, labels.scored()));
    terms.push_back(ce_term("ce_unsup", weights.lambda_ce * weights.eta_unsup, unsupervised.student, soft,
                            everywhere.size()));
    terms.push_back(jaccard_term("jml_sup", weights.lambda_jml * weights.theta_sup, supervised.student,
                                 supervised.student_value, target, labels.labels, labels.valid, supervised.layout,
                                 config, losses::resolve_policy(config, losses::is_hard(labels.labels))));
    terms.push_back(jaccard_term("jml_unsup", weights.lambda_jml * weights.theta_unsup, unsupervised.student,
                                 unsupervised.student_value, soft, teacher_value, everywhere, unsupervised.layout,
                                 config, losses::resolve_policy(config, losses::is_hard(teacher_value))));
    return assemble(graph, std::move(terms));
}

void ema_update(std::span<double> teacher, std::span<const double> student, double decay)
{
    if (teacher.size() != student.size()) {
        throw std::invalid_argument("ema_update: parameter sizes differ");
    }
    if (!(decay >= 0.0 && decay < 1.0)) {
        throw std::invalid_argument("ema_update: decay must lie in [0, 1)");
    }
    for (std::size_t i = 0; i < teacher.size(); ++i) {
        teacher[i] = decay * teacher[i] + (1.0 - decay) * student[i];
    }
}

void ema_update(std::vector<Tensor>& teacher, const std::vector<Tensor>& student, double decay)
{
    if (teacher.size() != student.size()) {
        throw std::invalid_argument("ema_update: parameter lists differ in length");
    }
    for (std::size_t i = 0; i < teacher.size(); ++i) {
        if (teacher[i].shape() != student[i].shape()) {
            throw std::invalid_argument("ema_update: parameter " + std::to_string(i) + " has shape " +
                                        to_string(teacher[i].shape()) + " vs " + to_string(student[i].shape()));
        }
        ema_update(teacher[i].values(), student[i].values(), decay);
    }
}

}  // namespace jml::compose
