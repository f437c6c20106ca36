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

#ifndef JML_LOSSES_HPP
#define JML_LOSSES_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jml/autodiff.hpp"
#include "jml/tensor.hpp"

// IoU surrogate losses over a prediction vector x and a label vector y, both
// in [0,1]^p. Each loss exists twice: as a plain numeric evaluator and as a
// differentiable graph builder. The two are written independently and tested
// against each other.
//
// Ratio-form losses return 0 when their denominator vanishes (x = y = 0).
namespace jml::losses {

enum class Family { iou_hard, sjl, jml1, jml2, lovasz_softmax, tversky, cross_entropy };
enum class Norm { l1, squared_l2 };

struct LossVariant {
    Family family = Family::jml1;
    Norm norm = Norm::l1;
    double alpha = 1.0;  // Tversky false-positive weight
    double beta = 1.0;   // Tversky false-negative weight
};

enum class ActiveMode { all, present, prob, label, both };

struct ActiveClassPolicy {
    ActiveMode mode = ActiveMode::present;
    double threshold = 0.1;
};

enum class Scope { per_batch, per_image, class_agnostic };

/// Hyper-parameters of the IoU term of a training objective.
struct LossConfig {
    LossVariant variant;
    /// Unset selects PRESENT for hard labels and ALL for soft labels.
    std::optional<ActiveClassPolicy> active;
    /// Policy for the student-vs-teacher IoU term in distillation.
    ActiveClassPolicy teacher_active{ActiveMode::label, 0.1};
    Scope scope = Scope::per_batch;
    double smoothing_epsilon = 0.5;
    std::size_t boundary_kernel = 3;
};

std::string_view to_string(Family f);
std::string_view to_string(Norm n);
std::string_view to_string(ActiveMode m);
std::string_view to_string(Scope s);
Family parse_family(std::string_view name);
Norm parse_norm(std::string_view name);
ActiveMode parse_active_mode(std::string_view name);
Scope parse_scope(std::string_view name);

// --- numeric evaluators -----------------------------------------------------

/// |x xor y| / |x or y| for binary masks; 0 when both are empty.
double iou_loss_hard(std::span<const double> x, std::span<const double> y);
double sjl(std::span<const double> x, std::span<const double> y, Norm norm);
/// kind must be Family::jml1 or Family::jml2.
double jml(std::span<const double> x, std::span<const double> y, Family kind, Norm norm);
double tversky(std::span<const double> x, std::span<const double> y, double alpha, double beta);
/// y must be binary.
double lovasz_softmax(std::span<const double> x, std::span<const double> y);
/// Mean over pixels of -sum_c y_c log(clamp(x_c)), class-major (C x P)
/// layout. Label columns that are all zero mark ignored pixels.
double cross_entropy(std::span<const double> probs, std::span<const double> labels, std::size_t classes);
/// Dispatches on variant.family for the per-class losses.
double evaluate(const LossVariant& variant, std::span<const double> x, std::span<const double> y);

inline constexpr double kProbabilityClamp = 1e-7;

// --- graph builders ---------------------------------------------------------

ad::Expr sjl(ad::Expr x, ad::Expr y, Norm norm);
ad::Expr jml(ad::Expr x, ad::Expr y, Family kind, Norm norm);
ad::Expr tversky(ad::Expr x, ad::Expr y, double alpha, double beta);
ad::Expr lovasz_softmax(ad::Expr x, ad::Expr y);
/// probs and labels are C x ... with the class axis first. The sum is divided
/// by `pixels`, the number of scored (non-ignored) pixels.
ad::Expr cross_entropy(ad::Expr probs, ad::Expr labels, std::size_t pixels);
ad::Expr build(const LossVariant& variant, ad::Expr x, ad::Expr y);

// --- class selection and aggregation -----------------------------------------

/// True when every entry is exactly 0 or 1.
bool is_hard(const Tensor& labels);

/// Effective policy for a label tensor: the configured one, or the default
/// by label kind.
ActiveClassPolicy resolve_policy(const LossConfig& config, bool hard_labels);

/// Classes contributing to a class-averaged loss. labels and student_probs are
/// C x ... with the class axis first. All-zero label columns are ignored
/// pixels. A non-ALL selection that comes out empty falls back to PRESENT.
std::vector<std::size_t> select_active_classes(const Tensor& labels, const Tensor& student_probs,
                                               const ActiveClassPolicy& policy);

/// How a C x B x P prediction tensor is laid out.
struct ClassLayout {
    std::size_t classes = 0;
    std::size_t images = 1;
    std::size_t pixels = 0;  // per image
};

using PairLoss = std::function<ad::Expr(ad::Expr, ad::Expr)>;

/// Averages `loss` over the active classes according to `scope`:
/// per-batch pools all images for each class, per-image averages the
/// per-(class, image) values, class-agnostic concatenates every active
/// class into one pair of vectors.
ad::Expr aggregate_classes(const PairLoss& loss, ad::Expr probs, ad::Expr labels, const ClassLayout& layout,
                           std::span<const std::size_t> active, Scope scope);

}  // namespace jml::losses

#endif  // JML_LOSSES_HPP
