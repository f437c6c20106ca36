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

#include "jml/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace jml::losses {

std::string_view to_string(Family f)
{
    switch (f) {
    case Family::iou_hard: return "iou";
    case Family::sjl: return "sjl";
    case Family::jml1: return "jml1";
    case Family::jml2: return "jml2";
    case Family::lovasz_softmax: return "lovasz";
    case Family::tversky: return "tversky";
    case Family::cross_entropy: return "ce";
    }
    return "unknown";
}

std::string_view to_string(Norm n)
{
    return n == Norm::l1 ? "l1" : "l2";
}

std::string_view to_string(ActiveMode m)
{
    switch (m) {
    case ActiveMode::all: return "ALL";
    case ActiveMode::present: return "PRESENT";
    case ActiveMode::prob: return "PROB";
    case ActiveMode::label: return "LABEL";
    case ActiveMode::both: return "BOTH";
    }
    return "unknown";
}

std::string_view to_string(Scope s)
{
    switch (s) {
    case Scope::per_batch: return "per_batch";
    case Scope::per_image: return "per_image";
    case Scope::class_agnostic: return "class_agnostic";
    }
    return "unknown";
}

Family parse_family(std::string_view name)
{
    for (Family f : {Family::iou_hard, Family::sjl, Family::jml1, Family::jml2, Family::lovasz_softmax,
                     Family::tversky, Family::cross_entropy}) {
        if (name == to_string(f)) {
            return f;
        }
    }
    throw std::invalid_argument("unknown loss family '" + std::string(name) +
                                "' (expected iou, sjl, jml1, jml2, lovasz, tversky or ce)");
}

Norm parse_norm(std::string_view name)
{
    if (name == "l1") {
        return Norm::l1;
    }
    if (name == "l2") {
        return Norm::squared_l2;
    }
    throw std::invalid_argument("unknown norm '" + std::string(name) + "' (expected l1 or l2)");
}

ActiveMode parse_active_mode(std::string_view name)
{
    for (ActiveMode m : {ActiveMode::all, ActiveMode::present, ActiveMode::prob, ActiveMode::label, ActiveMode::both}) {
        if (name == to_string(m)) {
            return m;
        }
    }
    throw std::invalid_argument("unknown active class mode '" + std::string(name) +
                                "' (expected ALL, PRESENT, PROB, LABEL or BOTH)");
}

Scope parse_scope(std::string_view name)
{
    for (Scope s : {Scope::per_batch, Scope::per_image, Scope::class_agnostic}) {
        if (name == to_string(s)) {
            return s;
        }
    }
    throw std::invalid_argument("unknown aggregation scope '" + std::string(name) + "'");
}

namespace {

void check_pair(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("loss operands differ in length: " + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()));
    }
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!std::all_of(x.begin(), x.end(), in_unit)) {
        throw std::invalid_argument("predictions must lie in [0, 1]");
    }
    if (!std::all_of(y.begin(), y.end(), in_unit)) {
        throw std::invalid_argument("labels must lie in [0, 1]");
    }
}

bool binary(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double e) { return e == 0.0 || e == 1.0; });
}

double ratio_loss(double num, double den)
{
    return den == 0.0 ? 0.0 : 1.0 - num / den;
}

}  // namespace

double iou_loss_hard(std::span<const double> x, std::span<const double> y)
{
    check_pair(x, y);
    if (!binary(x) || !binary(y)) {
        throw std::invalid_argument("iou_loss_hard requires binary masks");
    }
    std::size_t mispredicted = 0;
    std::size_t united = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mispredicted += x[i] != y[i] ? 1 : 0;
        united += (x[i] == 1.0 || y[i] == 1.0) ? 1 : 0;
    }
    return united == 0 ? 0.0 : static_cast<double>(mispredicted) / static_cast<double>(united);
}

double sjl(std::span<const double> x, std::span<const double> y, Norm norm)
{
    check_pair(x, y);
    double inter = 0.0;
    double nx = 0.0;
    double ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        inter += x[i] * y[i];
        nx += norm == Norm::l1 ? x[i] : x[i] * x[i];
        ny += norm == Norm::l1 ? y[i] : y[i] * y[i];
    }
    return ratio_loss(inter, nx + ny - inter);
}

double jml(std::span<const double> x, std::span<const double> y, Family kind, Norm norm)
{
    if (kind != Family::jml1 && kind != Family::jml2) {
        throw std::invalid_argument("jml: kind must be jml1 or jml2");
    }
    check_pair(x, y);
    double inter = 0.0;
    double nx = 0.0;
    double ny = 0.0;
    double diff = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        inter += x[i] * y[i];
        if (norm == Norm::l1) {
            nx += x[i];
            ny += y[i];
            diff += std::fabs(d);
        } else {
            nx += x[i] * x[i];
            ny += y[i] * y[i];
            diff += d * d;
        }
    }
    if (kind == Family::jml1) {
        return ratio_loss(nx + ny - diff, nx + ny + diff);
    }
    return ratio_loss(inter, inter + diff);
}

double tversky(std::span<const double> x, std::span<const double> y, double alpha, double beta)
{
    if (alpha < 0.0 || beta < 0.0) {
        throw std::invalid_argument("tversky: alpha and beta must be non-negative");
    }
    check_pair(x, y);
    double total = 0.0;
    double diff = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        total += x[i] + y[i];
        diff += std::fabs(x[i] - y[i]);
        fp += std::max(x[i] - y[i], 0.0);
        fn += std::max(y[i] - x[i], 0.0);
    }
    const double tp = 0.5 * (total - diff);
    return ratio_loss(tp, tp + alpha * fp + beta * fn);
}

double lovasz_softmax(std::span<const double> x, std::span<const double> y)
{
    check_pair(x, y);
    if (!binary(y)) {
        throw std::invalid_argument("Lovasz extension requires binary labels");
    }
    const std::size_t p = x.size();
    std::vector<double> errors(p);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < p; ++i) {
        errors[i] = y[i] == 1.0 ? 1.0 - x[i] : x[i];
        positives += y[i] == 1.0 ? 1 : 0;
    }
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });
    double loss = 0.0;
    std::size_t negatives = 0;
    for (std::size_t i = 0; i < p; ++i) {
        negatives += y[order[i]] == 0.0 ? 1 : 0;
        const double prefix = static_cast<double>(i + 1) / static_cast<double>(positives + negatives);
        const double following = i + 1 < p ? errors[order[i + 1]] : 0.0;
        loss += (errors[order[i]] - following) * prefix;
    }
    return loss;
}

double cross_entropy(std::span<const double> probs, std::span<const double> labels, std::size_t classes)
{
    if (classes == 0 || probs.size() != labels.size() || probs.size() % classes != 0) {
        throw std::invalid_argument("cross_entropy: probs and labels must both be C x P");
    }
    const std::size_t pixels = probs.size() / classes;
    double total = 0.0;
    std::size_t scored = 0;
    for (std::size_t j = 0; j < pixels; ++j) {
        double label_mass = 0.0;
        double prob_mass = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            const double yl = labels[c * pixels + j];
            const double xp = probs[c * pixels + j];
            if (yl < 0.0 || xp < 0.0) {
                throw std::invalid_argument("cross_entropy: negative probability");
            }
            label_mass += yl;
            prob_mass += xp;
        }
        if (label_mass == 0.0) {
            continue;
        }
        if (std::fabs(label_mass - 1.0) > 1e-6 || std::fabs(prob_mass - 1.0) > 1e-6) {
            throw std::invalid_argument("cross_entropy: pixel " + std::to_string(j) +
                                        " does not carry normalized distributions");
        }
        for (std::size_t c = 0; c < classes; ++c) {
            const double yl = labels[c * pixels + j];
            if (yl != 0.0) {
                const double xp = std::clamp(probs[c * pixels + j], kProbabilityClamp, 1.0 - kProbabilityClamp);
                total -= yl * std::log(xp);
            }
        }
        ++scored;
    }
    if (scored == 0) {
        throw std::invalid_argument("cross_entropy: no scored pixels");
    }
    return total / static_cast<double>(scored);
}

double evaluate(const LossVariant& variant, std::span<const double> x, std::span<const double> y)
{
    switch (variant.family) {
    case Family::iou_hard: return iou_loss_hard(x, y);
    case Family::sjl: return sjl(x, y, variant.norm);
    case Family::jml1:
    case Family::jml2: return jml(x, y, variant.family, variant.norm);
    case Family::lovasz_softmax: return lovasz_softmax(x, y);
    case Family::tversky: return tversky(x, y, variant.alpha, variant.beta);
    case Family::cross_entropy: break;
    }
    throw std::invalid_argument("evaluate: cross entropy is not a per-class pair loss");
}

// --- graph builders ---------------------------------------------------------

namespace {

struct Operands {
    ad::Expr x;
    ad::Expr y;
};

Operands checked(ad::Expr x, ad::Expr y)
{
    return {ad::check_range(x, 0.0, 1.0, "prediction"), ad::check_range(y, 0.0, 1.0, "label")};
}

ad::Expr one_minus_ratio(ad::Expr num, ad::Expr den)
{
    return 1.0 - ad::safe_div(num, den, 1.0);
}

}  // namespace

ad::Expr sjl(ad::Expr x, ad::Expr y, Norm norm)
{
    auto [xc, yc] = checked(x, y);
    ad::Expr inter = ad::dot(xc, yc);
    ad::Expr nx = norm == Norm::l1 ? ad::sum(xc) : ad::dot(xc, xc);
    ad::Expr ny = norm == Norm::l1 ? ad::sum(yc) : ad::dot(yc, yc);
    return one_minus_ratio(inter, nx + ny - inter);
}

ad::Expr jml(ad::Expr x, ad::Expr y, Family kind, Norm norm)
{
    if (kind != Family::jml1 && kind != Family::jml2) {
        throw std::invalid_argument("jml: kind must be jml1 or jml2");
    }
    auto [xc, yc] = checked(x, y);
    ad::Expr d = xc - yc;
    ad::Expr diff = norm == Norm::l1 ? ad::sum(ad::abs(d)) : ad::dot(d, d);
    if (kind == Family::jml1) {
        ad::Expr nx = norm == Norm::l1 ? ad::sum(xc) : ad::dot(xc, xc);
        ad::Expr ny = norm == Norm::l1 ? ad::sum(yc) : ad::dot(yc, yc);
        return one_minus_ratio(nx + ny - diff, nx + ny + diff);
    }
    ad::Expr inter = ad::dot(xc, yc);
    return one_minus_ratio(inter, inter + diff);
}

ad::Expr tversky(ad::Expr x, ad::Expr y, double alpha, double beta)
{
    if (alpha < 0.0 || beta < 0.0) {
        throw std::invalid_argument("tversky: alpha and beta must be non-negative");
    }
    auto [xc, yc] = checked(x, y);
    ad::Expr d = xc - yc;
    ad::Expr tp = 0.5 * (ad::sum(xc) + ad::sum(yc) - ad::sum(ad::abs(d)));
    ad::Expr fp = ad::sum(ad::relu(d));
    ad::Expr fn = ad::sum(ad::relu(-d));
    return one_minus_ratio(tp, tp + alpha * fp + beta * fn);
}

ad::Expr lovasz_softmax(ad::Expr x, ad::Expr y)
{
    auto [xc, yc] = checked(x, y);
    // Mispredictions: 1 - x where y = 1, x where y = 0.
    ad::Expr errors = xc + yc - 2.0 * (xc * yc);
    return ad::lovasz(errors, ad::stop_gradient(yc));
}

ad::Expr cross_entropy(ad::Expr probs, ad::Expr labels, std::size_t pixels)
{
    if (pixels == 0) {
        throw std::invalid_argument("cross_entropy: no scored pixels");
    }
    ad::Expr p = ad::check_simplex(probs, 1e-6, false, "prediction");
    ad::Expr l = ad::check_simplex(labels, 1e-6, true, "label");
    ad::Expr logp = ad::log(ad::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp));
    return -(ad::sum(l * logp) / static_cast<double>(pixels));
}

ad::Expr build(const LossVariant& variant, ad::Expr x, ad::Expr y)
{
    switch (variant.family) {
    case Family::sjl: return sjl(x, y, variant.norm);
    case Family::jml1:
    case Family::jml2: return jml(x, y, variant.family, variant.norm);
    case Family::lovasz_softmax: return lovasz_softmax(x, y);
    case Family::tversky: return tversky(x, y, variant.alpha, variant.beta);
    case Family::iou_hard:
        throw std::invalid_argument("the hard IoU loss is not differentiable; use lovasz for training");
    case Family::cross_entropy: break;
    }
    throw std::invalid_argument("build: cross entropy is not a per-class pair loss");
}

// --- class selection and aggregation -----------------------------------------

bool is_hard(const Tensor& labels)
{
    return binary(labels.values());
}

ActiveClassPolicy resolve_policy(const LossConfig& config, bool hard_labels)
{
    if (config.active) {
        return *config.active;
    }
    return ActiveClassPolicy{hard_labels ? ActiveMode::present : ActiveMode::all, 0.1};
}

namespace {

std::vector<std::size_t> present_classes(const Tensor& labels, std::size_t classes)
{
    const std::size_t columns = labels.size() / classes;
    std::vector<std::uint8_t> seen(classes, 0);
    for (std::size_t j = 0; j < columns; ++j) {
        std::size_t best = 0;
        double best_value = labels[j];
        double mass = labels[j];
        for (std::size_t c = 1; c < classes; ++c) {
            const double v = labels[c * columns + j];
            mass += v;
            if (v > best_value) {
                best_value = v;
                best = c;
            }
        }
        if (mass > 0.0) {
            seen[best] = 1;
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < classes; ++c) {
        if (seen[c]) {
            out.push_back(c);
        }
    }
    return out;
}

std::vector<double> class_maxima(const Tensor& t, std::size_t classes, const Tensor& labels)
{
    const std::size_t columns = t.size() / classes;
    std::vector<double> peak(classes, 0.0);
    for (std::size_t j = 0; j < columns; ++j) {
        double mass = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            mass += labels[c * columns + j];
        }
        if (mass == 0.0) {
            continue;
        }
        for (std::size_t c = 0; c < classes; ++c) {
            peak[c] = std::max(peak[c], t[c * columns + j]);
        }
    }
    return peak;
}

}  // namespace

std::vector<std::size_t> select_active_classes(const Tensor& labels, const Tensor& student_probs,
                                               const ActiveClassPolicy& policy)
{
    if (labels.rank() == 0 || student_probs.rank() == 0 || labels.shape()[0] != student_probs.shape()[0] ||
        labels.size() != student_probs.size()) {
        throw std::invalid_argument("select_active_classes: labels " + jml::to_string(labels.shape()) +
                                    " and predictions " + jml::to_string(student_probs.shape()) + " disagree");
    }
    const std::size_t classes = labels.shape()[0];
    std::vector<std::size_t> out;
    switch (policy.mode) {
    case ActiveMode::all:
        out.resize(classes);
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    case ActiveMode::present:
        return present_classes(labels, classes);
    case ActiveMode::label:
    case ActiveMode::prob:
    case ActiveMode::both: {
        const auto label_peak = class_maxima(labels, classes, labels);
        const auto prob_peak = class_maxima(student_probs, classes, labels);
        for (std::size_t c = 0; c < classes; ++c) {
            const bool by_label = label_peak[c] >= policy.threshold;
            const bool by_prob = prob_peak[c] >= policy.threshold;
            const bool keep = policy.mode == ActiveMode::label  ? by_label
                              : policy.mode == ActiveMode::prob ? by_prob
                                                                : by_label && by_prob;
            if (keep) {
                out.push_back(c);
            }
        }
        break;
    }
    }
    if (out.empty()) {
        return present_classes(labels, classes);
    }
    return out;
}

ad::Expr aggregate_classes(const PairLoss& loss, ad::Expr probs, ad::Expr labels, const ClassLayout& layout,
                           std::span<const std::size_t> active, Scope scope)
{
    if (active.empty()) {
        throw std::invalid_argument("aggregate_classes: no active classes");
    }
    for (std::size_t c : active) {
        if (c >= layout.classes) {
            throw std::out_of_range("aggregate_classes: class " + std::to_string(c) + " out of range for " +
                                    std::to_string(layout.classes) + " classes");
        }
    }
    const Shape cube{layout.classes, layout.images, layout.pixels};
    ad::Expr x = ad::reshape(probs, cube);
    ad::Expr y = ad::reshape(labels, cube);

    if (scope == Scope::class_agnostic) {
        std::vector<std::size_t> chosen(active.begin(), active.end());
        return loss(ad::flatten(ad::take(x, 0, chosen)), ad::flatten(ad::take(y, 0, chosen)));
    }

    std::vector<ad::Expr> terms;
    for (std::size_t c : active) {
        ad::Expr xc = ad::take(x, 0, {c});
        ad::Expr yc = ad::take(y, 0, {c});
        if (scope == Scope::per_batch) {
            terms.push_back(loss(ad::flatten(xc), ad::flatten(yc)));
            continue;
        }
        for (std::size_t b = 0; b < layout.images; ++b) {
            terms.push_back(loss(ad::flatten(ad::take(xc, 1, {b})), ad::flatten(ad::take(yc, 1, {b}))));
        }
    }
    ad::Expr total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) {
        total = total + terms[i];
    }
    return total * (1.0 / static_cast<double>(terms.size()));
}

}  // namespace jml::losses
