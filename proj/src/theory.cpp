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

#include "jml/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "jml/autodiff.hpp"
#include "jml/compositions.hpp"
#include "jml/losses.hpp"
#include "jml/simplex.hpp"

namespace jml::theory {

namespace {

using losses::Family;
using losses::Norm;

std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Generator for sample `index` of a check seeded with `seed`.
std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t index)
{
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index)));
}

double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t p)
{
    std::vector<double> v(p);
    for (auto& e : v) {
        e = uniform(rng);
    }
    return v;
}

std::vector<double> binary_vector(std::mt19937_64& rng, std::size_t p)
{
    std::vector<double> v(p);
    for (auto& e : v) {
        e = (rng() & 1U) ? 1.0 : 0.0;
    }
    return v;
}

double clip01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<double> near_vertex(std::mt19937_64& rng, std::size_t p)
{
    std::vector<double> v(p);
    for (auto& e : v) {
        const double offset = (rng() % 4 == 0) ? 0.0 : std::pow(10.0, -uniform(rng, 1.0, 9.0)) * uniform(rng);
        e = (rng() & 1U) ? 1.0 - offset : offset;
    }
    return v;
}

std::vector<double> perturbed(std::mt19937_64& rng, const std::vector<double>& base)
{
    const double scale = std::pow(10.0, -uniform(rng, 1.0, 8.0));
    std::vector<double> v(base);
    for (auto& e : v) {
        e = clip01(e + scale * uniform(rng, -1.0, 1.0));
    }
    return v;
}

}  // namespace

LossFn loss_by_name(std::string_view name)
{
    auto jml = [](Family kind, Norm norm) {
        return [kind, norm](std::span<const double> x, std::span<const double> y) {
            return losses::jml(x, y, kind, norm);
        };
    };
    auto sjl = [](Norm norm) {
        return [norm](std::span<const double> x, std::span<const double> y) { return losses::sjl(x, y, norm); };
    };
    if (name == "jml1") return jml(Family::jml1, Norm::l1);
    if (name == "jml2") return jml(Family::jml2, Norm::l1);
    if (name == "jml1-l2") return jml(Family::jml1, Norm::squared_l2);
    if (name == "jml2-l2") return jml(Family::jml2, Norm::squared_l2);
    if (name == "sjl-l1") return sjl(Norm::l1);
    if (name == "sjl-l2") return sjl(Norm::squared_l2);
    std::string valid;
    for (const auto& n : loss_names()) {
        valid += (valid.empty() ? "" : ", ") + n;
    }
    throw std::invalid_argument("unknown loss '" + std::string(name) + "'; valid names: " + valid);
}

std::vector<std::string> loss_names() { return {"jml1", "jml2", "jml1-l2", "jml2-l2", "sjl-l1", "sjl-l2"}; }

std::string_view to_string(Axiom a)
{
    switch (a) {
    case Axiom::reflexivity: return "reflexivity";
    case Axiom::positivity: return "positivity";
    case Axiom::symmetry: return "symmetry";
    case Axiom::triangle: return "triangle";
    }
    return "?";
}

double violation(const LossFn& loss, Axiom axiom, const Triple& t)
{
    switch (axiom) {
    case Axiom::reflexivity:
        return loss(t.a, t.a);
    case Axiom::positivity: {
        const double f = loss(t.a, t.b);
        double gap = 0.0;
        for (std::size_t i = 0; i < t.a.size(); ++i) {
            gap = std::max(gap, std::fabs(t.a[i] - t.b[i]));
        }
        if (gap > 0.0 && f <= 0.0) {
            return std::max(gap, -f);
        }
        return -f;
    }
    case Axiom::symmetry:
        return std::fabs(loss(t.a, t.b) - loss(t.b, t.a));
    case Axiom::triangle:
        return loss(t.a, t.c) - loss(t.a, t.b) - loss(t.b, t.c);
    }
    return 0.0;
}

bool AxiomReport::pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.pass; });
}

Triple draw_triple(std::size_t p, std::uint64_t seed, std::size_t index)
{
    auto rng = sample_rng(seed, index);
    Triple t;
    switch (index % 4) {
    case 0:
        t.a = uniform_vector(rng, p);
        t.b = uniform_vector(rng, p);
        t.c = uniform_vector(rng, p);
        break;
    case 1:
        t.a = near_vertex(rng, p);
        t.b = near_vertex(rng, p);
        t.c = (rng() & 1U) ? near_vertex(rng, p) : uniform_vector(rng, p);
        break;
    case 2:
        t.a = uniform_vector(rng, p);
        t.b = perturbed(rng, t.a);
        t.c = perturbed(rng, t.a);
        break;
    default:
        t.a = (rng() & 1U) ? uniform_vector(rng, p) : near_vertex(rng, p);
        t.b = t.a;
        t.c = (rng() & 1U) ? t.a : uniform_vector(rng, p);
        break;
    }
    return t;
}

AxiomReport check_metric_axioms(const LossFn& loss, std::size_t p, std::size_t n, std::uint64_t seed,
                                double tolerance, std::span<const Triple> extra, Exec exec)
{
    if (p == 0) {
        throw std::invalid_argument("check_metric_axioms: dimension must be positive");
    }
    using Checks = std::array<AxiomCheck, 4>;
    Checks identity;
    for (std::size_t k = 0; k < 4; ++k) {
        identity[k].axiom = static_cast<Axiom>(k);
    }
    auto consider = [&loss](AxiomCheck& check, Triple candidate) {
        const double v = violation(loss, check.axiom, candidate);
        if (v > check.magnitude) {
            check.magnitude = v;
            check.worst = std::move(candidate);
        }
    };
    auto block = [&](std::size_t begin, std::size_t end) {
        Checks local = identity;
        for (std::size_t i = begin; i < end; ++i) {
            const Triple t = i < n ? draw_triple(p, seed, i) : extra[i - n];
            auto& refl = local[0];
            auto& pos = local[1];
            auto& sym = local[2];
            auto& tri = local[3];
            for (const auto* v : {&t.a, &t.b, &t.c}) {
                consider(refl, Triple{*v, *v, *v});
            }
            for (const auto& pair : {Triple{t.a, t.b, t.c}, Triple{t.b, t.c, t.a}, Triple{t.a, t.c, t.b}}) {
                consider(pos, pair);
                consider(pos, Triple{pair.b, pair.a, pair.c});
                consider(sym, pair);
            }
            consider(tri, Triple{t.a, t.b, t.c});
            consider(tri, Triple{t.b, t.a, t.c});
            consider(tri, Triple{t.a, t.c, t.b});
        }
        return local;
    };
    auto merge = [](Checks& acc, const Checks& part) {
        for (std::size_t k = 0; k < 4; ++k) {
            if (part[k].magnitude > acc[k].magnitude) {
                acc[k].magnitude = part[k].magnitude;
                acc[k].worst = part[k].worst;
            }
        }
    };
    AxiomReport report;
    report.dimension = p;
    report.samples = n + extra.size();
    report.tolerance = tolerance;
    report.checks = blocked_reduce(n + extra.size(), exec, identity, block, merge);
    for (auto& check : report.checks) {
        check.pass = check.magnitude <= tolerance;
    }
    return report;
}

namespace {

// Runs `sample(i, rng) -> (deviation, x, y, z)` for i in [0, n) and keeps the
// largest deviation, first index on ties.
template <class SampleFn>
SampledCheck sampled_max(std::size_t n, std::uint64_t seed, double tolerance, Exec exec, SampleFn&& sample)
{
    auto block = [&](std::size_t begin, std::size_t end) {
        SampledCheck local;
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = sample_rng(seed, i);
            SampledCheck one = sample(i, rng);
            if (one.magnitude > local.magnitude || local.x.empty()) {
                local = std::move(one);
            }
        }
        return local;
    };
    auto merge = [](SampledCheck& acc, SampledCheck part) {
        if (part.magnitude > acc.magnitude || acc.x.empty()) {
            acc = std::move(part);
        }
    };
    SampledCheck result = blocked_reduce(n, exec, SampledCheck{}, block, merge);
    result.pass = result.magnitude <= tolerance;
    return result;
}

double three_way_deviation(double p, double q, double r)
{
    return std::max({std::fabs(p - q), std::fabs(p - r), std::fabs(q - r)});
}

double l1_three_way(std::span<const double> x, std::span<const double> y)
{
    return three_way_deviation(losses::jml(x, y, Family::jml1, Norm::l1), losses::jml(x, y, Family::jml2, Norm::l1),
                               losses::sjl(x, y, Norm::l1));
}

}  // namespace

bool EquivalenceReport::pass() const
{
    return soft_x_hard_y.pass && hard_x_soft_y.pass && squared_l2.pass && witness_gap > 0.04;
}

EquivalenceReport verify_hard_label_equivalence(std::size_t p, std::size_t n, std::uint64_t seed, double tolerance,
                                                Exec exec)
{
    if (p == 0) {
        throw std::invalid_argument("verify_hard_label_equivalence: dimension must be positive");
    }
    EquivalenceReport report;
    report.tolerance = tolerance;
    report.soft_x_hard_y = sampled_max(n, seed, tolerance, exec, [p](std::size_t, std::mt19937_64& rng) {
        SampledCheck s;
        s.x = uniform_vector(rng, p);
        s.y = binary_vector(rng, p);
        s.magnitude = l1_three_way(s.x, s.y);
        return s;
    });
    report.hard_x_soft_y = sampled_max(n, seed + 1, tolerance, exec, [p](std::size_t, std::mt19937_64& rng) {
        SampledCheck s;
        s.x = binary_vector(rng, p);
        s.y = uniform_vector(rng, p);
        s.magnitude = l1_three_way(s.x, s.y);
        return s;
    });
    report.squared_l2 = sampled_max(n, seed + 2, tolerance, exec, [p](std::size_t, std::mt19937_64& rng) {
        SampledCheck s;
        s.x = uniform_vector(rng, p);
        s.y = uniform_vector(rng, p);
        s.magnitude = three_way_deviation(losses::jml(s.x, s.y, Family::jml1, Norm::squared_l2),
                                          losses::jml(s.x, s.y, Family::jml2, Norm::squared_l2),
                                          losses::sjl(s.x, s.y, Norm::squared_l2));
        return s;
    });
    const std::vector<double> x{0.8};
    const std::vector<double> y{0.5};
    report.witness = {losses::jml(x, y, Family::jml1, Norm::l1), losses::jml(x, y, Family::jml2, Norm::l1),
                      losses::sjl(x, y, Norm::l1)};
    const auto& w = report.witness;
    report.witness_gap = std::min({std::fabs(w[0] - w[1]), std::fabs(w[0] - w[2]), std::fabs(w[1] - w[2])});
    return report;
}

SampledCheck check_ordering(const LossFn& f, const LossFn& g, std::size_t max_p, std::size_t n, std::uint64_t seed,
                            double tolerance, Exec exec)
{
    if (max_p == 0) {
        throw std::invalid_argument("check_ordering: dimension must be positive");
    }
    return sampled_max(n, seed, tolerance, exec, [&](std::size_t i, std::mt19937_64& rng) {
        const std::size_t p = i % max_p + 1;
        SampledCheck s;
        s.x = (i % 3 == 1) ? near_vertex(rng, p) : uniform_vector(rng, p);
        s.y = uniform_vector(rng, p);
        s.magnitude = std::max(0.0, f(s.x, s.y) - g(s.x, s.y));
        return s;
    });
}

SampledCheck check_kd_triangle(const LossFn& f, std::size_t max_p, std::size_t n, std::uint64_t seed,
                               double tolerance, Exec exec)
{
    if (max_p == 0) {
        throw std::invalid_argument("check_kd_triangle: dimension must be positive");
    }
    return sampled_max(n, seed, tolerance, exec, [&](std::size_t i, std::mt19937_64& rng) {
        const std::size_t p = i % max_p + 1;
        SampledCheck s;
        s.x = uniform_vector(rng, p);                                        // student
        s.y = uniform_vector(rng, p);                                        // teacher
        s.z = (i % 2 == 0) ? binary_vector(rng, p) : uniform_vector(rng, p); // labels
        s.magnitude = std::max(0.0, f(s.x, s.z) - f(s.x, s.y) - f(s.y, s.z));
        return s;
    });
}

GradientSign sjl_gradient_sign(double a, double b, double y)
{
    if (!(a >= 0.0 && b >= 0.0)) {
        throw std::invalid_argument("sjl_gradient_sign: a and b must be non-negative");
    }
    const double s = a + b;
    GradientSign out;
    out.r2 = (-s + std::sqrt(s * s + 4.0 * b)) / 2.0;
    out.nonpositive = y >= out.r2;
    return out;
}

OffPixels build_off_pixels(double a, double b)
{
    if (!(b >= 0.0) || !(a >= std::ceil(b))) {
        throw std::invalid_argument("build_off_pixels: need b >= 0 and a >= ceil(b)");
    }
    OffPixels off;
    const double whole = std::floor(b);
    const double frac = b - whole;
    for (double k = 0; k < whole; k += 1.0) {
        off.x.push_back(1.0);
        off.y.push_back(1.0);
    }
    if (frac > 0.0) {
        off.x.push_back(1.0);
        off.y.push_back(frac);
    }
    double rest = a - std::ceil(b);
    while (rest >= 1.0) {
        off.x.push_back(1.0);
        off.y.push_back(0.0);
        rest -= 1.0;
    }
    if (rest > 0.0) {
        off.x.push_back(rest);
        off.y.push_back(0.0);
    }
    return off;
}

SignAgreement check_gradient_sign(std::size_t n, std::uint64_t seed, double margin, Exec exec)
{
    struct Outcome {
        SignAgreement tally;
        bool has_failure = false;
    };
    auto block = [&](std::size_t begin, std::size_t end) {
        Outcome local;
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = sample_rng(seed, i);
            const double b = (i % 10 == 0) ? 0.0 : uniform(rng, 0.0, 3.0);
            const double a = std::ceil(b) + uniform(rng, 0.0, 3.0);
            const double y = (i % 7 == 0) ? 1.0 : uniform(rng);
            const double xi = uniform(rng, 0.05, 0.95);
            const GradientSign predicted = sjl_gradient_sign(a, b, y);
            if (std::fabs(y - predicted.r2) < margin) {
                ++local.tally.skipped;
                continue;
            }
            const OffPixels off = build_off_pixels(a, b);
            std::vector<double> xv{xi};
            std::vector<double> yv{y};
            xv.insert(xv.end(), off.x.begin(), off.x.end());
            yv.insert(yv.end(), off.y.begin(), off.y.end());
            const double h = 1e-6;
            xv[0] = xi + h;
            const double plus = losses::sjl(xv, yv, Norm::l1);
            xv[0] = xi - h;
            const double minus = losses::sjl(xv, yv, Norm::l1);
            const double slope = (plus - minus) / (2.0 * h);
            ++local.tally.checked;
            if ((slope <= 0.0) == predicted.nonpositive) {
                ++local.tally.agreed;
            } else if (!local.has_failure) {
                local.has_failure = true;
                local.tally.worst_a = a;
                local.tally.worst_b = b;
                local.tally.worst_y = y;
            }
        }
        return local;
    };
    auto merge = [](Outcome& acc, const Outcome& part) {
        acc.tally.checked += part.tally.checked;
        acc.tally.skipped += part.tally.skipped;
        acc.tally.agreed += part.tally.agreed;
        if (!acc.has_failure && part.has_failure) {
            acc.has_failure = true;
            acc.tally.worst_a = part.tally.worst_a;
            acc.tally.worst_b = part.tally.worst_b;
            acc.tally.worst_y = part.tally.worst_y;
        }
    };
    return blocked_reduce(n, exec, Outcome{}, block, merge).tally;
}

double convex_closure(const SetFunction& f, std::span<const double> point)
{
    const std::size_t p = point.size();
    if (p == 0 || p > 8) {
        throw std::invalid_argument("convex_closure: dimension must lie in [1, 8]");
    }
    const std::size_t vertices = std::size_t{1} << p;
    if (f.size() != vertices) {
        throw std::invalid_argument("convex_closure: set function needs 2^p values");
    }
    for (double v : point) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::domain_error("convex_closure: point lies outside the unit cube");
        }
    }
    const std::size_t rows = p + 1;
    std::vector<double> a(rows * vertices, 0.0);
    std::vector<double> b(rows);
    b[0] = 1.0;
    for (std::size_t v = 0; v < vertices; ++v) {
        a[v] = 1.0;
        for (std::size_t j = 0; j < p; ++j) {
            a[(j + 1) * vertices + v] = ((v >> j) & 1U) ? 1.0 : 0.0;
        }
    }
    std::copy(point.begin(), point.end(), b.begin() + 1);
    const LpResult lp = solve_lp(a, rows, vertices, b, f);
    if (lp.status != LpStatus::optimal) {
        throw std::domain_error("convex_closure: linear program has no optimum");
    }
    return lp.value;
}

NonConcavityReport verify_nonconcavity_counterexample()
{
    const std::vector<double> y{0.5, 0.5};
    const std::vector<double> x1{0.4087, 0.7855};
    const std::vector<double> x2{0.6285, 0.7551};
    const std::vector<double> mid{(x1[0] + x2[0]) / 2.0, (x1[1] + x2[1]) / 2.0};
    auto probe = [&](std::string name, const std::function<double(std::span<const double>)>& f) {
        JensenProbe out;
        out.name = std::move(name);
        out.mean_of_values = 0.5 * f(x1) + 0.5 * f(x2);
        out.value_at_mean = f(mid);
        out.violated = out.mean_of_values > out.value_at_mean;
        return out;
    };
    NonConcavityReport report;
    report.jml1 = probe("jml1", [&](std::span<const double> x) { return losses::jml(x, y, Family::jml1, Norm::l1); });
    report.jml2 = probe("jml2", [&](std::span<const double> x) { return losses::jml(x, y, Family::jml2, Norm::l1); });
    report.control = probe("concave_quadratic", [&](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            s += (x[i] - y[i]) * (x[i] - y[i]);
        }
        return 1.0 - s;
    });
    return report;
}

bool LovaszOracleReport::pass() const { return max_deviation == 0.0 && std::fabs(worked_example - 0.4) <= 1e-12; }

LovaszOracleReport verify_lovasz_oracle(std::size_t max_p)
{
    LovaszOracleReport report;
    for (std::size_t p = 1; p <= max_p; ++p) {
        const std::size_t count = std::size_t{1} << p;
        std::vector<double> x(p);
        std::vector<double> y(p);
        for (std::size_t mx = 0; mx < count; ++mx) {
            for (std::size_t my = 0; my < count; ++my) {
                for (std::size_t j = 0; j < p; ++j) {
                    x[j] = ((mx >> j) & 1U) ? 1.0 : 0.0;
                    y[j] = ((my >> j) & 1U) ? 1.0 : 0.0;
                }
                const double dev = std::fabs(losses::lovasz_softmax(x, y) - losses::iou_loss_hard(x, y));
                ++report.pairs;
                if (dev > report.max_deviation || report.worst_x.empty()) {
                    report.max_deviation = std::max(report.max_deviation, dev);
                    report.worst_x = x;
                    report.worst_y = y;
                }
            }
        }
    }
    const std::vector<double> x{0.6, 0.4};
    const std::vector<double> y{1.0, 0.0};
    report.worked_example = losses::lovasz_softmax(x, y);
    return report;
}

namespace {

// Point in [lo, hi]^p whose coordinates stay at least `gap` away from the
// matching coordinates of `avoid`, keeping central differences off kinks.
std::vector<double> interior_point(std::mt19937_64& rng, std::size_t p, const std::vector<double>* avoid)
{
    std::vector<double> v(p);
    for (std::size_t i = 0; i < p; ++i) {
        do {
            v[i] = uniform(rng, 0.02, 0.98);
        } while (avoid != nullptr && std::fabs(v[i] - (*avoid)[i]) < 1e-3);
    }
    return v;
}

Tensor random_logits(std::mt19937_64& rng, const Shape& shape)
{
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = uniform(rng, -2.0, 2.0);
    }
    return t;
}

Tensor softmax_columns(const Tensor& logits)
{
    Tensor out = logits;
    const std::size_t c = logits.shape()[0];
    const std::size_t n = logits.size() / c;
    for (std::size_t j = 0; j < n; ++j) {
        double top = logits[j];
        for (std::size_t k = 1; k < c; ++k) {
            top = std::max(top, logits[k * n + j]);
        }
        double z = 0.0;
        for (std::size_t k = 0; k < c; ++k) {
            z += std::exp(logits[k * n + j] - top);
        }
        for (std::size_t k = 0; k < c; ++k) {
            out[k * n + j] = std::exp(logits[k * n + j] - top) / z;
        }
    }
    return out;
}

// Hard labels for a C x B x H x W layout with one ignored pixel.
compose::Supervision random_supervision(std::mt19937_64& rng, const compose::BatchLayout& layout, bool smooth)
{
    const std::size_t n = layout.images * layout.pixels_per_image();
    compose::Supervision s{Tensor(layout.shape()), std::vector<std::uint8_t>(n, 1)};
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t cls = rng() % layout.classes;
        for (std::size_t c = 0; c < layout.classes; ++c) {
            const double hard = c == cls ? 1.0 : 0.0;
            s.labels[c * n + j] = smooth ? 0.7 * hard + 0.3 / static_cast<double>(layout.classes) : hard;
        }
    }
    const std::size_t ignored = rng() % n;
    s.valid[ignored] = 0;
    for (std::size_t c = 0; c < layout.classes; ++c) {
        s.labels[c * n + ignored] = 0.0;
    }
    return s;
}

// Student probabilities within 1e-3 of a label level (0, 1, the smoothed
// values) or of the teacher put |x - y| terms on a kink inside the stencil.
bool clear_of_kinks(const Tensor& probs, const Tensor& teacher)
{
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double v = probs[i];
        for (double level : {0.0, 0.1, 0.8, 1.0, teacher[i]}) {
            if (std::fabs(v - level) < 1e-3) {
                return false;
            }
        }
    }
    return true;
}

double fd_error(ad::Graph& graph, const ad::Bindings& bindings)
{
    return ad::finite_difference_check(graph, bindings, "x", 1e-4).max_relative_error;
}

}  // namespace

std::vector<GradientCase> check_gradients(std::size_t points, std::uint64_t seed, double tolerance)
{
    struct PairCase {
        std::string name;
        losses::LossVariant variant;
    };
    std::vector<PairCase> pair_cases{
        {"sjl-l1", {Family::sjl, Norm::l1}},
        {"sjl-l2", {Family::sjl, Norm::squared_l2}},
        {"jml1-l1", {Family::jml1, Norm::l1}},
        {"jml1-l2", {Family::jml1, Norm::squared_l2}},
        {"jml2-l1", {Family::jml2, Norm::l1}},
        {"jml2-l2", {Family::jml2, Norm::squared_l2}},
        {"tversky", {Family::tversky, Norm::l1, 0.7, 0.3}},
    };
    std::vector<GradientCase> out;
    std::uint64_t case_seed = seed;
    for (const auto& pc : pair_cases) {
        GradientCase gc{pc.name, points, 0.0, false};
        for (std::size_t i = 0; i < points; ++i) {
            auto rng = sample_rng(case_seed, i);
            const std::size_t p = i % 8 + 1;
            const std::vector<double> y = interior_point(rng, p, nullptr);
            const std::vector<double> x = interior_point(rng, p, &y);
            ad::Graph g;
            losses::build(pc.variant, g.input("x"), g.constant(Tensor::vector(y)));
            gc.max_relative_error = std::max(gc.max_relative_error, fd_error(g, {{"x", Tensor::vector(x)}}));
        }
        gc.pass = gc.max_relative_error < tolerance;
        out.push_back(gc);
        ++case_seed;
    }

    // Cross entropy on softmax outputs against soft labels.
    {
        GradientCase gc{"ce", points, 0.0, false};
        for (std::size_t i = 0; i < points; ++i) {
            auto rng = sample_rng(case_seed, i);
            const std::size_t classes = i % 3 + 2;
            const std::size_t pixels = i % 5 + 1;
            const Tensor logits = random_logits(rng, {classes, pixels});
            const Tensor labels = softmax_columns(random_logits(rng, {classes, pixels}));
            ad::Graph g;
            losses::cross_entropy(ad::softmax(g.input("x"), 0), g.constant(labels), pixels);
            gc.max_relative_error = std::max(gc.max_relative_error, fd_error(g, {{"x", logits}}));
        }
        gc.pass = gc.max_relative_error < tolerance;
        out.push_back(gc);
        ++case_seed;
    }

    // Composed objectives: softmax over logits of a C x B x H x W batch.
    const compose::BatchLayout layout{3, 2, 2, 2};
    const compose::CompositionWeights weights;
    const losses::LossConfig config;
    for (const std::string name : {"ls_objective", "kd_objective", "ssl_objective"}) {
        GradientCase gc{name, points, 0.0, false};
        for (std::size_t i = 0; i < points; ++i) {
            auto rng = sample_rng(case_seed, i);
            const auto labels = random_supervision(rng, layout, name == "ls_objective");
            const Tensor teacher = softmax_columns(random_logits(rng, layout.shape()));
            Tensor logits;
            Tensor probs;
            do {
                logits = random_logits(rng, layout.shape());
                probs = softmax_columns(logits);
            } while (!clear_of_kinks(probs, teacher));
            ad::Graph g;
            ad::Expr student = ad::softmax(g.input("x"), 0);
            if (name == "ls_objective") {
                compose::ls_objective(g, student, probs, labels, layout, weights, config);
            } else if (name == "kd_objective") {
                compose::kd_objective(g, student, probs, g.constant(teacher), teacher, labels, layout, weights,
                                      config);
            } else {
                // Both branches read the same logits so one input covers them.
                const compose::SslBatch sup{student, probs, layout};
                const compose::SslBatch unsup{ad::pow(student, 1.0), probs, layout};
                compose::ssl_objective(g, sup, labels, unsup, g.constant(teacher), teacher, weights, config);
            }
            const double err = fd_error(g, {{"x", logits}});
            gc.max_relative_error = std::max(gc.max_relative_error, err);
        }
        gc.pass = gc.max_relative_error < tolerance;
        out.push_back(gc);
        ++case_seed;
    }
    return out;
}

}  // namespace jml::theory
