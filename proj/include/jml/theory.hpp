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

#ifndef JML_THEORY_HPP
#define JML_THEORY_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jml/parallel.hpp"

// Numerical checks of the analytical properties of the Jaccard-type losses.
// Every check is a pure function of its arguments and seed; sample i draws
// from its own generator seeded by (seed, i), so the parallel and serial
// paths see identical samples.
namespace jml::theory {

using LossFn = std::function<double(std::span<const double>, std::span<const double>)>;

/// Looks up a loss by name: jml1, jml2, sjl-l1, sjl-l2, jml1-l2, jml2-l2.
LossFn loss_by_name(std::string_view name);
std::vector<std::string> loss_names();

enum class Axiom { reflexivity, positivity, symmetry, triangle };
std::string_view to_string(Axiom a);

/// A point triple. Reflexivity uses a only, positivity and symmetry use
/// (a, b), the triangle inequality uses all three with b in the middle.
struct Triple {
    std::vector<double> a, b, c;
};

/// Violation of one axiom at one triple; positive means violated.
///   reflexivity:  f(a, a)
///   positivity:   -f(a, b), or max|a - b| when a != b but f(a, b) <= 0
///   symmetry:     |f(a, b) - f(b, a)|
///   triangle:     f(a, c) - f(a, b) - f(b, c)
double violation(const LossFn& loss, Axiom axiom, const Triple& t);

struct AxiomCheck {
    Axiom axiom = Axiom::reflexivity;
    bool pass = true;
    double magnitude = 0.0;        // largest violation seen, clipped below at 0
    std::optional<Triple> worst;   // triple attaining it, if any violation > 0
};

struct AxiomReport {
    std::size_t dimension = 0;
    std::size_t samples = 0;
    double tolerance = 0.0;
    std::array<AxiomCheck, 4> checks;

    bool pass() const;
    const AxiomCheck& operator[](Axiom a) const { return checks[static_cast<std::size_t>(a)]; }
};

/// Draws n triples in [0,1]^p (uniform, near-vertex, near-diagonal and
/// coincident, cycling by sample index), appends `extra`, and checks each
/// axiom, with the triangle inequality tried for every choice of middle point.
AxiomReport check_metric_axioms(const LossFn& loss, std::size_t p, std::size_t n, std::uint64_t seed,
                                double tolerance, std::span<const Triple> extra = {}, Exec exec = Exec::parallel);

/// Draws sample i of the axiom check; exposed for tests.
Triple draw_triple(std::size_t p, std::uint64_t seed, std::size_t index);

/// Result of a sampled inequality or identity check.
struct SampledCheck {
    bool pass = true;
    double magnitude = 0.0;  // worst deviation / violation
    std::vector<double> x, y, z;  // worst sample (z only for triples)
};

struct EquivalenceReport {
    SampledCheck soft_x_hard_y;   // max over |JML1-JML2|, |JML1-SJL|, |JML2-SJL|
    SampledCheck hard_x_soft_y;
    SampledCheck squared_l2;      // three-way equality on soft pairs
    std::array<double, 3> witness{};  // JML1, JML2, SJL-L1 at x = 0.8, y = 0.5
    double witness_gap = 0.0;         // smallest pairwise difference
    double tolerance = 0.0;

    bool pass() const;
};

/// Equality of JML1, JML2 and SJL-L1 when either argument is binary, and of
/// their squared-L2 forms everywhere.
EquivalenceReport verify_hard_label_equivalence(std::size_t p, std::size_t n, std::uint64_t seed,
                                                double tolerance = 1e-12, Exec exec = Exec::parallel);

/// f(x, y) <= g(x, y) + tol over n soft pairs per dimension in [1, max_p].
SampledCheck check_ordering(const LossFn& f, const LossFn& g, std::size_t max_p, std::size_t n, std::uint64_t seed,
                            double tolerance, Exec exec = Exec::parallel);

/// f(s, l) <= f(s, t) + f(t, l) + tol with soft s, t and labels l that are
/// binary on even samples and soft on odd ones; p cycles through [1, max_p].
SampledCheck check_kd_triangle(const LossFn& f, std::size_t max_p, std::size_t n, std::uint64_t seed,
                               double tolerance, Exec exec = Exec::parallel);

// --- sign of the SJL-L1 derivative ------------------------------------------

struct GradientSign {
    double r2 = 0.0;
    bool nonpositive = true;  // predicted sign of dSJL/dx_i
};

/// a = off-pixel sum of x + y - xy, b = off-pixel sum of xy.
GradientSign sjl_gradient_sign(double a, double b, double y);

/// Off-pixel (x, y) pairs whose sums realize a and b. Needs a >= ceil(b).
struct OffPixels {
    std::vector<double> x, y;
};
OffPixels build_off_pixels(double a, double b);

struct SignAgreement {
    std::size_t checked = 0;
    std::size_t skipped = 0;  // |y - r2| below the margin
    std::size_t agreed = 0;
    double worst_a = 0.0, worst_b = 0.0, worst_y = 0.0;  // a disagreeing configuration
    bool pass() const { return agreed == checked; }
};

/// Compares the predicted sign against a central difference of SJL-L1 on a
/// vector [x_i, off pixels...] for n random (a, b, y_i, x_i).
SignAgreement check_gradient_sign(std::size_t n, std::uint64_t seed, double margin = 1e-3,
                                  Exec exec = Exec::parallel);

// --- convex closure ----------------------------------------------------------

/// Set function over {0,1}^p, indexed by bitmask (bit j = coordinate j).
using SetFunction = std::vector<double>;

/// min sum_v alpha_v f(v) s.t. sum alpha = 1, sum alpha_v v = point,
/// alpha >= 0, over all 2^p vertices. p <= 8; points outside [0,1]^p throw.
double convex_closure(const SetFunction& f, std::span<const double> point);

// --- Jensen counterexample ---------------------------------------------------

struct JensenProbe {
    std::string name;
    double mean_of_values = 0.0;  // (f(x) + f(x')) / 2
    double value_at_mean = 0.0;   // f((x + x') / 2)
    bool violated = false;        // mean_of_values > value_at_mean
};

struct NonConcavityReport {
    JensenProbe jml1, jml2;
    JensenProbe control;  // a concave quadratic at the same points

    bool pass() const { return jml1.violated && jml2.violated && !control.violated; }
};

NonConcavityReport verify_nonconcavity_counterexample();

// --- Lovasz oracle -----------------------------------------------------------

struct LovaszOracleReport {
    std::size_t pairs = 0;
    double max_deviation = 0.0;
    std::vector<double> worst_x, worst_y;
    double worked_example = 0.0;  // x = [0.6, 0.4], y = [1, 0]

    bool pass() const;
};

/// Lovasz-Softmax against the hard IoU loss on every binary pair for
/// p in [1, max_p].
LovaszOracleReport verify_lovasz_oracle(std::size_t max_p);

// --- gradients ---------------------------------------------------------------

struct GradientCase {
    std::string name;
    std::size_t points = 0;
    double max_relative_error = 0.0;
    bool pass = false;
};

/// Finite-difference checks of every differentiable loss and of the composed
/// training objectives at `points` random interior points each.
std::vector<GradientCase> check_gradients(std::size_t points, std::uint64_t seed, double tolerance = 1e-4);

}  // namespace jml::theory

#endif  // JML_THEORY_HPP
