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

#include <gtest/gtest.h>

#include <random>

#include "jml/compositions.hpp"

namespace {

namespace ad = jml::ad;
namespace cp = jml::compose;
namespace ls = jml::losses;
using jml::Shape;
using jml::Tensor;

const cp::BatchLayout kLayout{3, 2, 2, 2};

Tensor random_simplex(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Tensor t(kLayout.shape());
    const std::size_t n = t.size() / 3;
    for (std::size_t j = 0; j < n; ++j) {
        double total = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            total += t[c * n + j] = u(rng);
        }
        for (std::size_t c = 0; c < 3; ++c) {
            t[c * n + j] /= total;
        }
    }
    return t;
}

// Hard labels for 8 pixels; `ignored` pixels get an all-zero column.
cp::Supervision hard_labels(const std::vector<int>& cls)
{
    cp::Supervision s;
    s.labels = Tensor(kLayout.shape());
    s.valid.assign(cls.size(), 0);
    for (std::size_t j = 0; j < cls.size(); ++j) {
        if (cls[j] >= 0) {
            s.labels[static_cast<std::size_t>(cls[j]) * cls.size() + j] = 1.0;
            s.valid[j] = 1;
        }
    }
    return s;
}

std::vector<double> class_slice(const Tensor& t, std::size_t c, const std::vector<std::uint8_t>& valid)
{
    const std::size_t n = t.size() / 3;
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) {
        v[j] = valid[j] ? t[c * n + j] : 0.0;
    }
    return v;
}

TEST(Compositions, LabelSmoothingObjectiveMatchesManualSum)
{
    const Tensor probs = random_simplex(1);
    const auto sup = hard_labels({0, 0, 1, 2, -1, 1, 0, 0});
    ad::Graph g;
    auto student = g.input("s");
    ls::LossConfig config;
    cp::CompositionWeights w;
    auto obj = cp::ls_objective(g, student, probs, sup, kLayout, w, config);
    ASSERT_EQ(obj.terms.size(), 2u);
    ad::Evaluator ev(g, {{"s", probs}});

    const double ce = ls::cross_entropy(probs.values(), sup.labels.values(), 3);
    double jml = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        jml += ls::jml(class_slice(probs, c, sup.valid), class_slice(sup.labels, c, sup.valid), ls::Family::jml1,
                       ls::Norm::l1);
    }
    jml /= 3.0;
    EXPECT_NEAR(ev.value(obj.terms[0].value).item(), ce, 1e-13);
    EXPECT_NEAR(ev.value(obj.terms[1].value).item(), jml, 1e-13);
    EXPECT_NEAR(ev.value(obj.total).item(), 0.25 * ce + 0.75 * jml, 1e-13);
    EXPECT_EQ(obj.terms[1].active_classes, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Compositions, ZeroWeightsDropTerms)
{
    const Tensor probs = random_simplex(2);
    const auto sup = hard_labels({0, 1, 1, 0, 0, 1, 0, 0});
    ad::Graph g;
    cp::CompositionWeights w;
    w.lambda_jml = 0.0;
    auto obj = cp::ls_objective(g, g.input("s"), probs, sup, kLayout, w, {});
    ASSERT_EQ(obj.terms.size(), 1u);
    EXPECT_EQ(obj.terms[0].name, "ce");
    // class 2 is absent from the labels: PRESENT leaves it out
    ad::Graph h;
    auto full = cp::ls_objective(h, h.input("s"), probs, sup, kLayout, {}, {});
    EXPECT_EQ(full.terms[1].active_classes, (std::vector<std::size_t>{0, 1}));
    w.lambda_ce = 0.0;
    EXPECT_THROW(w.validate(), std::invalid_argument);
    w.lambda_ce = -1.0;
    EXPECT_THROW(w.validate(), std::invalid_argument);
}

TEST(Compositions, DistillationStopsTeacherGradient)
{
    const Tensor probs = random_simplex(3);
    const Tensor teacher = random_simplex(4);
    const auto sup = hard_labels({0, 2, 1, 2, 0, 1, -1, 0});
    ad::Graph g;
    auto s = g.input("s");
    auto t = g.input("t");
    auto obj = cp::kd_objective(g, s, probs, t, teacher, sup, kLayout, {}, {});
    ASSERT_EQ(obj.terms.size(), 4u);
    ad::Evaluator ev(g, {{"s", probs}, {"t", teacher}});
    auto grads = ev.gradients(obj.total, {"s", "t"});
    for (double v : grads.at("t").values()) {
        EXPECT_EQ(v, 0.0);
    }
    double norm = 0.0;
    for (double v : grads.at("s").values()) {
        norm += v * v;
    }
    EXPECT_GT(norm, 0.0);

    double total = 0.0;
    for (const auto& term : obj.terms) {
        total += term.weight * ev.value(term.value).item();
    }
    EXPECT_NEAR(ev.value(obj.total).item(), total, 1e-13);
    EXPECT_DOUBLE_EQ(obj.terms[0].weight, 0.125);
    EXPECT_DOUBLE_EQ(obj.terms[3].weight, 0.375);

    Tensor wrong(Shape{3, 1, 2, 2});
    ad::Graph h;
    EXPECT_THROW(cp::kd_objective(h, h.input("s"), probs, h.input("t"), wrong, sup, kLayout, {}, {}),
                 std::invalid_argument);
}

TEST(Compositions, DistillationTeacherTermUsesLabelMode)
{
    const Tensor probs = random_simplex(5);
    Tensor teacher(kLayout.shape());
    // the teacher never puts more than 0.05 on class 2
    const std::size_t n = teacher.size() / 3;
    for (std::size_t j = 0; j < n; ++j) {
        teacher[j] = 0.6;
        teacher[n + j] = 0.35;
        teacher[2 * n + j] = 0.05;
    }
    const auto sup = hard_labels({0, 2, 1, 2, 0, 1, 0, 0});
    ad::Graph g;
    auto obj = cp::kd_objective(g, g.input("s"), probs, g.input("t"), teacher, sup, kLayout, {}, {});
    EXPECT_EQ(obj.terms[3].active_classes, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(obj.terms[2].active_classes, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Compositions, SemiSupervisedObjective)
{
    const Tensor sup_probs = random_simplex(6);
    const Tensor unsup_probs = random_simplex(7);
    const Tensor teacher = random_simplex(8);
    const auto sup = hard_labels({0, 1, 1, 2, 0, 1, 0, -1});
    ad::Graph g;
    cp::SslBatch a{g.input("a"), sup_probs, kLayout};
    cp::SslBatch b{g.input("b"), unsup_probs, kLayout};
    auto t = g.input("t");
    auto obj = cp::ssl_objective(g, a, sup, b, t, teacher, {}, {});
    ASSERT_EQ(obj.terms.size(), 4u);
    // soft teacher targets: every class is active
    EXPECT_EQ(obj.terms[3].active_classes, (std::vector<std::size_t>{0, 1, 2}));
    ad::Evaluator ev(g, {{"a", sup_probs}, {"b", unsup_probs}, {"t", teacher}});
    const double ce_unsup = ls::cross_entropy(unsup_probs.values(), teacher.values(), 3);
    EXPECT_NEAR(ev.value(obj.terms[1].value).item(), ce_unsup, 1e-13);
    auto grads = ev.gradients(obj.total, {"t"});
    for (double v : grads.at("t").values()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Compositions, EmaUpdate)
{
    std::vector<double> teacher{1.0, 2.0};
    const std::vector<double> student{3.0, 0.0};
    cp::ema_update(teacher, student, 0.75);
    EXPECT_DOUBLE_EQ(teacher[0], 1.5);
    EXPECT_DOUBLE_EQ(teacher[1], 1.5);
    EXPECT_THROW(cp::ema_update(teacher, student, 1.0), std::invalid_argument);
    std::vector<Tensor> tt{Tensor::vector({1.0})};
    std::vector<Tensor> ss{Tensor::vector({1.0, 2.0})};
    EXPECT_THROW(cp::ema_update(tt, ss, 0.5), std::invalid_argument);
}

}  // namespace
