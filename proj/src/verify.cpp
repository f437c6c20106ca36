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

#include "jml/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "jml/theory.hpp"

namespace jml::harness {

using nlohmann::json;

bool VerifyReport::all_pass() const
{
    for (const auto& c : checks) {
        if (c.at("verdict") != "pass") {
            return false;
        }
    }
    return true;
}

namespace {

void add(VerifyReport& r, const std::string& name, bool pass, double magnitude, json worst = nullptr)
{
    r.checks.push_back({{"name", name}, {"verdict", pass ? "pass" : "fail"}, {"magnitude", magnitude}, {"worst", worst}});
}

json triple_json(const std::optional<theory::Triple>& t)
{
    if (!t) {
        return nullptr;
    }
    return {{"a", t->a}, {"b", t->b}, {"c", t->c}};
}

json sample_json(const theory::SampledCheck& s)
{
    json j{{"x", s.x}, {"y", s.y}};
    if (!s.z.empty()) {
        j["z"] = s.z;
    }
    return j;
}

void closure_checks(VerifyReport& r, const VerifyOptions& o)
{
    std::mt19937_64 rng(o.seed ^ 0xc105e7ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double vertex_dev = 0.0;
    json vertex_worst = nullptr;
    for (std::size_t p = 1; p <= 6; ++p) {
        theory::SetFunction f(std::size_t{1} << p);
        for (auto& v : f) {
            v = unit(rng);
        }
        for (std::size_t v = 0; v < f.size(); ++v) {
            std::vector<double> point(p);
            for (std::size_t j = 0; j < p; ++j) {
                point[j] = ((v >> j) & 1U) ? 1.0 : 0.0;
            }
            const double dev = std::fabs(theory::convex_closure(f, point) - f[v]);
            if (dev > vertex_dev) {
                vertex_dev = dev;
                vertex_worst = {{"p", p}, {"vertex", v}};
            }
        }
    }
    add(r, "convex_closure/vertex_exact", vertex_dev == 0.0, vertex_dev, vertex_worst);

    const double mid = 0.5;
    const double edge = theory::convex_closure({0.0, 1.0}, std::span(&mid, 1));
    add(r, "convex_closure/edge_midpoint", edge <= 0.5, edge);

    double worst_gap = 0.0;
    json convex_worst = nullptr;
    const std::size_t p = 3;
    theory::SetFunction f(std::size_t{1} << p);
    for (auto& v : f) {
        v = unit(rng);
    }
    for (std::size_t i = 0; i < o.closure_pairs; ++i) {
        std::vector<double> a(p), b(p), m(p);
        for (std::size_t j = 0; j < p; ++j) {
            a[j] = unit(rng);
            b[j] = unit(rng);
            m[j] = 0.5 * (a[j] + b[j]);
        }
        const double gap = theory::convex_closure(f, m) -
                           0.5 * (theory::convex_closure(f, a) + theory::convex_closure(f, b));
        if (gap > worst_gap) {
            worst_gap = gap;
            convex_worst = {{"a", a}, {"b", b}};
        }
    }
    add(r, "convex_closure/midpoint_convexity", worst_gap <= 1e-9, worst_gap, convex_worst);
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& o)
{
    VerifyReport r;
    for (const char* name : {"jml1", "jml2"}) {
        const auto loss = theory::loss_by_name(name);
        for (std::size_t p = 1; p <= 8; ++p) {
            const auto rep = theory::check_metric_axioms(loss, p, o.axiom_samples, o.seed + p, 1e-9);
            double worst = 0.0;
            json detail = json::object();
            for (const auto& c : rep.checks) {
                worst = std::max(worst, c.magnitude);
                detail[std::string(theory::to_string(c.axiom))] = {
                    {"pass", c.pass}, {"magnitude", c.magnitude}, {"sample", triple_json(c.worst)}};
            }
            add(r, std::string("metric_axioms/") + name + "/p=" + std::to_string(p), rep.pass(), worst, detail);
        }
    }

    {
        const theory::Triple half{{0.5}, {0.5}, {0.5}};
        const auto rep = theory::check_metric_axioms(theory::loss_by_name("sjl-l1"), 1, 0, o.seed, 1e-9,
                                                     std::span(&half, 1));
        const auto& c = rep[theory::Axiom::reflexivity];
        add(r, "counterexample/sjl-l1_reflexivity", !c.pass && std::fabs(c.magnitude - 2.0 / 3.0) <= 1e-12,
            c.magnitude, triple_json(c.worst));
    }
    {
        const theory::Triple t{{0.8}, {0.4}, {0.2}};
        const double v = theory::violation(theory::loss_by_name("sjl-l2"), theory::Axiom::triangle, t);
        add(r, "counterexample/sjl-l2_triangle", v > 0.02, v, {{"a", t.a}, {"b", t.b}, {"c", t.c}});
    }

    {
        const auto eq = theory::verify_hard_label_equivalence(6, o.pair_samples, o.seed);
        add(r, "equivalence/soft_x_hard_y", eq.soft_x_hard_y.pass, eq.soft_x_hard_y.magnitude,
            sample_json(eq.soft_x_hard_y));
        add(r, "equivalence/hard_x_soft_y", eq.hard_x_soft_y.pass, eq.hard_x_soft_y.magnitude,
            sample_json(eq.hard_x_soft_y));
        add(r, "equivalence/squared_l2_soft", eq.squared_l2.pass, eq.squared_l2.magnitude, sample_json(eq.squared_l2));
        add(r, "equivalence/soft_witness_distinct", eq.witness_gap > 0.04, eq.witness_gap,
            {{"x", 0.8}, {"y", 0.5}, {"jml1", eq.witness[0]}, {"jml2", eq.witness[1]}, {"sjl-l1", eq.witness[2]}});
    }

    {
        const auto ord = theory::check_ordering(theory::loss_by_name("jml1"), theory::loss_by_name("jml2"), 8,
                                                o.ordering_samples, o.seed, 1e-12);
        add(r, "ordering/jml1_le_jml2", ord.pass, ord.magnitude, sample_json(ord));
    }

    {
        const auto nc = theory::verify_nonconcavity_counterexample();
        for (const auto* probe : {&nc.jml1, &nc.jml2}) {
            add(r, "nonconcavity/" + probe->name, probe->violated, probe->mean_of_values - probe->value_at_mean,
                {{"mean_of_values", probe->mean_of_values}, {"value_at_mean", probe->value_at_mean}});
        }
        add(r, "nonconcavity/control_" + nc.control.name, !nc.control.violated,
            nc.control.mean_of_values - nc.control.value_at_mean);
    }

    {
        const auto kd = theory::check_kd_triangle(theory::loss_by_name("jml1"), 8, o.pair_samples, o.seed, 1e-12);
        add(r, "kd_triangle/jml1", kd.pass, kd.magnitude, sample_json(kd));
    }

    for (const auto& g : theory::check_gradients(o.gradient_points, o.seed)) {
        add(r, "gradients/" + g.name, g.pass, g.max_relative_error, {{"points", g.points}});
    }

    {
        const auto lo = theory::verify_lovasz_oracle(6);
        add(r, "lovasz/exhaustive_binary", lo.max_deviation == 0.0, lo.max_deviation,
            {{"pairs", lo.pairs}, {"x", lo.worst_x}, {"y", lo.worst_y}});
        add(r, "lovasz/worked_example", std::fabs(lo.worked_example - 0.4) <= 1e-12, lo.worked_example);
    }

    {
        const auto s = theory::check_gradient_sign(o.sign_samples, o.seed);
        json worst = nullptr;
        if (!s.pass()) {
            worst = {{"a", s.worst_a}, {"b", s.worst_b}, {"y", s.worst_y}};
        }
        add(r, "sjl_gradient_sign/agreement", s.pass(),
            s.checked == 0 ? 0.0 : static_cast<double>(s.checked - s.agreed) / static_cast<double>(s.checked),
            worst.is_null() ? json{{"checked", s.checked}, {"skipped", s.skipped}} : worst);
    }

    closure_checks(r, o);
    return r;
}

}  // namespace jml::harness
