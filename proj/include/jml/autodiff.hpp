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

#ifndef JML_AUTODIFF_HPP
#define JML_AUTODIFF_HPP

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jml/parallel.hpp"
#include "jml/tensor.hpp"

// Reverse-mode differentiation over dense tensors.
//
// A Graph is an append-only list of nodes; operands always precede the node
// that uses them, so node order is a topological order. Expressions are built
// with the free functions and operators below and evaluated against a set of
// named input bindings. Shapes are only known at evaluation time.
//
// Non-differentiable points use fixed subgradients: abs'(0) = 0, relu'(0) = 0,
// and max ties route the gradient to the lowest index.
namespace jml::ad {

enum class Op {
    constant,
    input,
    add,
    sub,
    mul,
    div,
    safe_div,
    neg,
    abs,
    relu,
    exp,
    log,
    pow,
    clamp,
    sum,
    dot,
    max_reduce,
    softmax,
    max_pool2d,
    matmul,
    bias_add,
    take,
    reshape,
    stop_gradient,
    check_range,
    check_simplex,
    lovasz,
};

std::string_view op_name(Op op);

struct Node {
    Op op = Op::constant;
    std::vector<std::size_t> operands;
    std::string label;  // input name, or the quantity a check node validates
    Tensor value;       // constant payload
    double a = 0.0;     // pow exponent, clamp/range lower bound, safe_div fallback, simplex tolerance
    double b = 0.0;     // clamp/range upper bound, simplex: nonzero allows all-zero columns
    std::size_t axis = 0;  // softmax/take axis, pooling kernel size
    std::vector<std::size_t> indices;  // take
    Shape shape;                       // reshape target
};

/// Raised for malformed graphs and for shape or value errors found while
/// evaluating a node. The message names the node index and operation.
class GraphError : public std::runtime_error {
public:
    GraphError(std::size_t node, Op op, const std::string& what);
    std::size_t node() const { return node_; }
    Op op() const { return op_; }

private:
    std::size_t node_;
    Op op_;
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Expr {
public:
    Expr() = default;

    Graph& graph() const;
    std::size_t index() const { return index_; }
    bool valid() const { return graph_ != nullptr; }

private:
    friend class Graph;
    Expr(Graph* graph, std::size_t index) : graph_(graph), index_(index) {}

    Graph* graph_ = nullptr;
    std::size_t index_ = 0;
};

class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    /// Named input. Requesting the same name twice returns the same node.
    Expr input(const std::string& name);
    Expr constant(Tensor value);
    Expr scalar(double value);

    /// Appends a node after checking that its operands already exist.
    Expr append(Node node);

    const Node& node(std::size_t index) const { return nodes_.at(index); }
    std::size_t size() const { return nodes_.size(); }
    Expr at(std::size_t index);

    /// Root used by evaluate()/gradient(); defaults to the last node.
    void set_root(Expr root);
    Expr root();

    std::optional<std::size_t> find_input(const std::string& name) const;
    std::vector<std::string> input_names() const;

private:
    std::deque<Node> nodes_;  // stable addresses while the graph grows
    std::map<std::string, std::size_t> inputs_;
    std::optional<std::size_t> root_;
};

Expr operator+(Expr x, Expr y);
Expr operator-(Expr x, Expr y);
Expr operator*(Expr x, Expr y);
Expr operator/(Expr x, Expr y);
Expr operator+(Expr x, double y);
Expr operator+(double x, Expr y);
Expr operator-(Expr x, double y);
Expr operator-(double x, Expr y);
Expr operator*(Expr x, double y);
Expr operator*(double x, Expr y);
Expr operator/(Expr x, double y);
Expr operator-(Expr x);

/// num / den elementwise, yielding `fallback` (with zero gradient) wherever den == 0.
Expr safe_div(Expr num, Expr den, double fallback);
Expr abs(Expr x);
Expr relu(Expr x);
Expr exp(Expr x);
Expr log(Expr x);
Expr pow(Expr x, double exponent);
Expr clamp(Expr x, double lo, double hi);
Expr sum(Expr x);
Expr dot(Expr x, Expr y);
/// Maximum over all elements.
Expr max(Expr x);
Expr softmax(Expr x, std::size_t axis);
/// Stride-1 k x k max pooling over the trailing two axes, replicate padding.
Expr max_pool2d(Expr x, std::size_t k);
Expr matmul(Expr a, Expr b);
/// m (rows x cols) plus bias (rows) broadcast along columns.
Expr bias_add(Expr m, Expr bias);
/// Gathers `indices` along `axis`; repeated indices accumulate gradient.
Expr take(Expr x, std::size_t axis, std::vector<std::size_t> indices);
Expr reshape(Expr x, Shape shape);
Expr flatten(Expr x);
/// Identity in the forward pass; blocks all gradient flow.
Expr stop_gradient(Expr x);
/// Identity that fails evaluation when any value lies outside [lo, hi].
Expr check_range(Expr x, double lo, double hi, std::string what);
/// Identity that fails evaluation unless every column along axis 0 is a
/// probability distribution (sum 1 within tolerance, entries >= 0).
Expr check_simplex(Expr x, double tolerance, bool allow_empty_columns, std::string what);
/// Lovasz extension of the IoU loss: errors m in [0,1]^p and binary labels y.
/// The per-position weights are held constant under differentiation.
Expr lovasz(Expr errors, Expr labels);

using Bindings = std::map<std::string, Tensor>;

/// Evaluates nodes of a graph on demand and memoizes their values. The graph
/// may grow after construction; new nodes are evaluated when requested.
class Evaluator {
public:
    Evaluator(const Graph& graph, Bindings bindings, Exec exec = Exec::parallel);

    const Tensor& value(Expr e);
    const Tensor& value(std::size_t node);

    /// d(root)/d(input) for a scalar root. Inputs not on a path to the root
    /// get a zero gradient.
    Tensor gradient(Expr root, const std::string& wrt);
    std::map<std::string, Tensor> gradients(Expr root, const std::vector<std::string>& wrt);

    const Bindings& bindings() const { return bindings_; }

private:
    void ensure(std::size_t node);
    void compute(std::size_t node);

    const Graph& graph_;
    Bindings bindings_;
    Exec exec_;
    std::deque<std::optional<Tensor>> values_;  // deque: view_ points into it
    // Where each computed value lives: values_, a graph constant, or a binding.
    std::vector<const Tensor*> view_;
    std::vector<std::vector<std::size_t>> aux_;
};

/// Value of the graph's root for the given bindings.
Tensor evaluate(Graph& graph, const Bindings& bindings);
/// Gradient of the graph's (scalar) root with respect to a bound input.
Tensor gradient(Graph& graph, const Bindings& bindings, const std::string& wrt);

struct FiniteDifferenceReport {
    std::vector<double> analytic;
    std::vector<double> numeric;
    std::vector<double> relative_error;
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
};

/// Compares the reverse-mode gradient against the fourth-order central
/// difference (8(f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h per coordinate.
/// Relative error uses the denominator max(|analytic|, |numeric|, 1e-8).
FiniteDifferenceReport finite_difference_check(Graph& graph, const Bindings& bindings, const std::string& wrt,
                                               double step);

}  // namespace jml::ad

#endif  // JML_AUTODIFF_HPP
