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

#include "jml/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jml/kernels.hpp"

namespace jml::ad {

std::string_view op_name(Op op)
{
    switch (op) {
    case Op::constant: return "constant";
    case Op::input: return "input";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::div: return "div";
    case Op::safe_div: return "safe_div";
    case Op::neg: return "neg";
    case Op::abs: return "abs";
    case Op::relu: return "relu";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::pow: return "pow";
    case Op::clamp: return "clamp";
    case Op::sum: return "sum";
    case Op::dot: return "dot";
    case Op::max_reduce: return "max";
    case Op::softmax: return "softmax";
    case Op::max_pool2d: return "max_pool2d";
    case Op::matmul: return "matmul";
    case Op::bias_add: return "bias_add";
    case Op::take: return "take";
    case Op::reshape: return "reshape";
    case Op::stop_gradient: return "stop_gradient";
    case Op::check_range: return "check_range";
    case Op::check_simplex: return "check_simplex";
    case Op::lovasz: return "lovasz";
    }
    return "unknown";
}

GraphError::GraphError(std::size_t node, Op op, const std::string& what)
    : std::runtime_error("node " + std::to_string(node) + " (" + std::string(op_name(op)) + "): " + what),
      node_(node),
      op_(op)
{
}

Graph& Expr::graph() const
{
    if (graph_ == nullptr) {
        throw std::logic_error("use of an empty expression");
    }
    return *graph_;
}

Expr Graph::input(const std::string& name)
{
    if (auto it = inputs_.find(name); it != inputs_.end()) {
        return Expr(this, it->second);
    }
    Node node;
    node.op = Op::input;
    node.label = name;
    Expr e = append(std::move(node));
    inputs_.emplace(name, e.index());
    return e;
}

Expr Graph::constant(Tensor value)
{
    Node node;
    node.op = Op::constant;
    node.value = std::move(value);
    return append(std::move(node));
}

Expr Graph::scalar(double value)
{
    return constant(Tensor::scalar(value));
}

Expr Graph::append(Node node)
{
    const std::size_t index = nodes_.size();
    for (std::size_t operand : node.operands) {
        if (operand >= index) {
            throw GraphError(index, node.op, "operand " + std::to_string(operand) + " does not precede the node");
        }
    }
    nodes_.push_back(std::move(node));
    return Expr(this, index);
}

Expr Graph::at(std::size_t index)
{
    if (index >= nodes_.size()) {
        throw std::out_of_range("graph node index out of range");
    }
    return Expr(this, index);
}

void Graph::set_root(Expr root)
{
    if (&root.graph() != this) {
        throw std::invalid_argument("root belongs to another graph");
    }
    root_ = root.index();
}

Expr Graph::root()
{
    if (nodes_.empty()) {
        throw std::logic_error("empty graph has no root");
    }
    return Expr(this, root_.value_or(nodes_.size() - 1));
}

std::optional<std::size_t> Graph::find_input(const std::string& name) const
{
    if (auto it = inputs_.find(name); it != inputs_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::vector<std::string> Graph::input_names() const
{
    std::vector<std::string> names;
    names.reserve(inputs_.size());
    for (const auto& [name, index] : inputs_) {
        names.push_back(name);
    }
    return names;
}

namespace {

Graph& common_graph(Expr x, Expr y)
{
    Graph& g = x.graph();
    if (&y.graph() != &g) {
        throw std::invalid_argument("operands belong to different graphs");
    }
    return g;
}

Expr unary(Op op, Expr x)
{
    Node node;
    node.op = op;
    node.operands = {x.index()};
    return x.graph().append(std::move(node));
}

Expr binary(Op op, Expr x, Expr y)
{
    Graph& g = common_graph(x, y);
    Node node;
    node.op = op;
    node.operands = {x.index(), y.index()};
    return g.append(std::move(node));
}

}  // namespace

Expr operator+(Expr x, Expr y) { return binary(Op::add, x, y); }
Expr operator-(Expr x, Expr y) { return binary(Op::sub, x, y); }
Expr operator*(Expr x, Expr y) { return binary(Op::mul, x, y); }
Expr operator/(Expr x, Expr y) { return binary(Op::div, x, y); }
Expr operator+(Expr x, double y) { return x + x.graph().scalar(y); }
Expr operator+(double x, Expr y) { return y.graph().scalar(x) + y; }
Expr operator-(Expr x, double y) { return x - x.graph().scalar(y); }
Expr operator-(double x, Expr y) { return y.graph().scalar(x) - y; }
Expr operator*(Expr x, double y) { return x * x.graph().scalar(y); }
Expr operator*(double x, Expr y) { return y.graph().scalar(x) * y; }
Expr operator/(Expr x, double y) { return x / x.graph().scalar(y); }
Expr operator-(Expr x) { return unary(Op::neg, x); }

Expr safe_div(Expr num, Expr den, double fallback)
{
    Graph& g = common_graph(num, den);
    Node node;
    node.op = Op::safe_div;
    node.operands = {num.index(), den.index()};
    node.a = fallback;
    return g.append(std::move(node));
}

Expr abs(Expr x) { return unary(Op::abs, x); }
Expr relu(Expr x) { return unary(Op::relu, x); }
Expr exp(Expr x) { return unary(Op::exp, x); }
Expr log(Expr x) { return unary(Op::log, x); }

Expr pow(Expr x, double exponent)
{
    Node node;
    node.op = Op::pow;
    node.operands = {x.index()};
    node.a = exponent;
    return x.graph().append(std::move(node));
}

Expr clamp(Expr x, double lo, double hi)
{
    if (!(lo <= hi)) {
        throw std::invalid_argument("clamp: lower bound exceeds upper bound");
    }
    Node node;
    node.op = Op::clamp;
    node.operands = {x.index()};
    node.a = lo;
    node.b = hi;
    return x.graph().append(std::move(node));
}

Expr sum(Expr x) { return unary(Op::sum, x); }
Expr dot(Expr x, Expr y) { return binary(Op::dot, x, y); }
Expr max(Expr x) { return unary(Op::max_reduce, x); }

Expr softmax(Expr x, std::size_t axis)
{
    Node node;
    node.op = Op::softmax;
    node.operands = {x.index()};
    node.axis = axis;
    return x.graph().append(std::move(node));
}

Expr max_pool2d(Expr x, std::size_t k)
{
    if (k == 0 || k % 2 == 0) {
        throw std::invalid_argument("max_pool2d: kernel size must be odd, got " + std::to_string(k));
    }
    Node node;
    node.op = Op::max_pool2d;
    node.operands = {x.index()};
    node.axis = k;
    return x.graph().append(std::move(node));
}

Expr matmul(Expr a, Expr b) { return binary(Op::matmul, a, b); }
Expr bias_add(Expr m, Expr bias) { return binary(Op::bias_add, m, bias); }

Expr take(Expr x, std::size_t axis, std::vector<std::size_t> indices)
{
    Node node;
    node.op = Op::take;
    node.operands = {x.index()};
    node.axis = axis;
    node.indices = std::move(indices);
    return x.graph().append(std::move(node));
}

Expr reshape(Expr x, Shape shape)
{
    Node node;
    node.op = Op::reshape;
    node.operands = {x.index()};
    node.shape = std::move(shape);
    return x.graph().append(std::move(node));
}

Expr flatten(Expr x)
{
    // Extent 0 in a reshape target means "all elements".
    return reshape(x, Shape{0});
}

Expr stop_gradient(Expr x) { return unary(Op::stop_gradient, x); }

Expr check_range(Expr x, double lo, double hi, std::string what)
{
    Node node;
    node.op = Op::check_range;
    node.operands = {x.index()};
    node.a = lo;
    node.b = hi;
    node.label = std::move(what);
    return x.graph().append(std::move(node));
}

Expr check_simplex(Expr x, double tolerance, bool allow_empty_columns, std::string what)
{
    Node node;
    node.op = Op::check_simplex;
    node.operands = {x.index()};
    node.a = tolerance;
    node.b = allow_empty_columns ? 1.0 : 0.0;
    node.label = std::move(what);
    return x.graph().append(std::move(node));
}

Expr lovasz(Expr errors, Expr labels) { return binary(Op::lovasz, errors, labels); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct AxisSplit {
    std::size_t outer = 1;
    std::size_t extent = 1;
    std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis)
{
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) {
        s.outer *= shape[i];
    }
    s.extent = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) {
        s.inner *= shape[i];
    }
    return s;
}

Shape broadcast_shape(std::size_t index, Op op, const Tensor& x, const Tensor& y)
{
    if (x.shape() == y.shape()) {
        return x.shape();
    }
    if (y.size() == 1) {
        return x.shape();
    }
    if (x.size() == 1) {
        return y.shape();
    }
    throw GraphError(index, op, "shape mismatch " + to_string(x.shape()) + " vs " + to_string(y.shape()));
}

// Sum of g over the elements that were broadcast from a single value.
double reduce_all(const Tensor& g, Exec exec) { return kernels::sum(g.values(), exec); }

void accumulate(std::optional<Tensor>& slot, const Tensor& contribution)
{
    if (!slot) {
        slot = contribution;
        return;
    }
    auto dst = slot->values();
    auto src = contribution.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
}

// Adds an elementwise gradient into an operand slot, reducing over broadcast.
void accumulate_broadcast(std::optional<Tensor>& slot, const Tensor& operand_value, Tensor grad, Exec exec)
{
    if (operand_value.size() == grad.size()) {
        accumulate(slot, grad.reshaped(operand_value.shape()));
        return;
    }
    Tensor reduced = Tensor::filled(operand_value.shape(), reduce_all(grad, exec));
    accumulate(slot, reduced);
}

}  // namespace

Evaluator::Evaluator(const Graph& graph, Bindings bindings, Exec exec)
    : graph_(graph), bindings_(std::move(bindings)), exec_(exec)
{
}

const Tensor& Evaluator::value(Expr e)
{
    if (&e.graph() != &graph_) {
        throw std::invalid_argument("expression belongs to another graph");
    }
    return value(e.index());
}

const Tensor& Evaluator::value(std::size_t node)
{
    ensure(node);
    return *view_[node];
}

void Evaluator::ensure(std::size_t target)
{
    if (target >= graph_.size()) {
        throw std::out_of_range("node index out of range");
    }
    if (values_.size() < graph_.size()) {
        values_.resize(graph_.size());
        view_.resize(graph_.size(), nullptr);
        aux_.resize(graph_.size());
    }
    if (view_[target]) {
        return;
    }
    // Mark the not-yet-computed ancestors, then compute them in index order.
    std::vector<std::uint8_t> needed(target + 1, 0);
    std::vector<std::size_t> stack{target};
    needed[target] = 1;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        for (std::size_t operand : graph_.node(i).operands) {
            if (!needed[operand] && !view_[operand]) {
                needed[operand] = 1;
                stack.push_back(operand);
            }
        }
    }
    for (std::size_t i = 0; i <= target; ++i) {
        if (needed[i]) {
            compute(i);
        }
    }
}

void Evaluator::compute(std::size_t index)
{
    const Node& node = graph_.node(index);
    auto operand = [&](std::size_t k) -> const Tensor& { return *view_[node.operands[k]]; };
    const Exec exec = exec_;

    auto elementwise = [&](auto&& fn) {
        const Tensor& x = operand(0);
        Tensor out(x.shape());
        auto src = x.values();
        auto dst = out.values();
        parallel_for(src.size(), exec, [&](std::size_t i) { dst[i] = fn(src[i]); });
        return out;
    };
    auto binary_elementwise = [&](auto&& fn) {
        const Tensor& x = operand(0);
        const Tensor& y = operand(1);
        Tensor out(broadcast_shape(index, node.op, x, y));
        auto xs = x.values();
        auto ys = y.values();
        const bool xb = x.size() == 1 && out.size() != 1;
        const bool yb = y.size() == 1 && out.size() != 1;
        auto dst = out.values();
        parallel_for(dst.size(), exec, [&](std::size_t i) { dst[i] = fn(xb ? xs[0] : xs[i], yb ? ys[0] : ys[i]); });
        return out;
    };

    Tensor result;
    switch (node.op) {
    case Op::constant:
        view_[index] = &node.value;
        return;
    case Op::input: {
        auto it = bindings_.find(node.label);
        if (it == bindings_.end()) {
            throw GraphError(index, node.op, "input '" + node.label + "' is not bound");
        }
        view_[index] = &it->second;
        return;
    }
    case Op::add: result = binary_elementwise([](double a, double b) { return a + b; }); break;
    case Op::sub: result = binary_elementwise([](double a, double b) { return a - b; }); break;
    case Op::mul: result = binary_elementwise([](double a, double b) { return a * b; }); break;
    case Op::div: result = binary_elementwise([](double a, double b) { return a / b; }); break;
    case Op::safe_div: {
        const double fallback = node.a;
        result = binary_elementwise([fallback](double a, double b) { return b == 0.0 ? fallback : a / b; });
        break;
    }
    case Op::neg: result = elementwise([](double v) { return -v; }); break;
    case Op::abs: result = elementwise([](double v) { return std::fabs(v); }); break;
    case Op::relu: result = elementwise([](double v) { return v > 0.0 ? v : 0.0; }); break;
    case Op::exp: result = elementwise([](double v) { return std::exp(v); }); break;
    case Op::log: result = elementwise([](double v) { return std::log(v); }); break;
    case Op::pow: {
        const double e = node.a;
        result = elementwise([e](double v) { return std::pow(v, e); });
        break;
    }
    case Op::clamp: {
        const double lo = node.a;
        const double hi = node.b;
        result = elementwise([lo, hi](double v) { return std::clamp(v, lo, hi); });
        break;
    }
    case Op::sum: result = Tensor::scalar(kernels::sum(operand(0).values(), exec)); break;
    case Op::dot: {
        const Tensor& x = operand(0);
        const Tensor& y = operand(1);
        if (x.size() != y.size()) {
            throw GraphError(index, node.op,
                             "shape mismatch " + to_string(x.shape()) + " vs " + to_string(y.shape()));
        }
        result = Tensor::scalar(kernels::dot(x.values(), y.values(), exec));
        break;
    }
    case Op::max_reduce: {
        const Tensor& x = operand(0);
        if (x.size() == 0) {
            throw GraphError(index, node.op, "max of an empty tensor");
        }
        auto v = x.values();
        const auto best = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
        aux_[index] = {best};
        result = Tensor::scalar(v[best]);
        break;
    }
    case Op::softmax: {
        const Tensor& x = operand(0);
        if (node.axis >= x.rank()) {
            throw GraphError(index, node.op,
                             "axis " + std::to_string(node.axis) + " out of range for " + to_string(x.shape()));
        }
        const AxisSplit s = split_axis(x.shape(), node.axis);
        Tensor out(x.shape());
        auto src = x.values();
        auto dst = out.values();
        parallel_for(s.outer * s.inner, exec, [&](std::size_t lane) {
            const std::size_t o = lane / s.inner;
            const std::size_t in = lane % s.inner;
            const std::size_t base = o * s.extent * s.inner + in;
            double peak = src[base];
            for (std::size_t c = 1; c < s.extent; ++c) {
                peak = std::max(peak, src[base + c * s.inner]);
            }
            double total = 0.0;
            for (std::size_t c = 0; c < s.extent; ++c) {
                const double e = std::exp(src[base + c * s.inner] - peak);
                dst[base + c * s.inner] = e;
                total += e;
            }
            for (std::size_t c = 0; c < s.extent; ++c) {
                dst[base + c * s.inner] /= total;
            }
        });
        result = std::move(out);
        break;
    }
    case Op::max_pool2d: {
        const Tensor& x = operand(0);
        if (x.rank() < 2) {
            throw GraphError(index, node.op, "needs rank >= 2, got " + to_string(x.shape()));
        }
        const std::size_t h = x.shape()[x.rank() - 2];
        const std::size_t w = x.shape()[x.rank() - 1];
        const std::size_t planes = h * w == 0 ? 0 : x.size() / (h * w);
        Tensor out(x.shape());
        aux_[index].assign(x.size(), 0);
        kernels::max_pool2d(x.values(), planes, h, w, node.axis, out.values(), aux_[index], exec);
        result = std::move(out);
        break;
    }
    case Op::matmul: {
        const Tensor& a = operand(0);
        const Tensor& b = operand(1);
        if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
            throw GraphError(index, node.op,
                             "incompatible shapes " + to_string(a.shape()) + " x " + to_string(b.shape()));
        }
        const std::size_t m = a.shape()[0];
        const std::size_t k = a.shape()[1];
        const std::size_t n = b.shape()[1];
        Tensor out(Shape{m, n});
        kernels::gemm(false, false, m, n, k, a.values(), b.values(), out.values(), exec);
        result = std::move(out);
        break;
    }
    case Op::bias_add: {
        const Tensor& m = operand(0);
        const Tensor& bias = operand(1);
        if (m.rank() != 2 || bias.size() != m.shape()[0]) {
            throw GraphError(index, node.op,
                             "bias " + to_string(bias.shape()) + " does not match rows of " + to_string(m.shape()));
        }
        const std::size_t cols = m.shape()[1];
        Tensor out(m.shape());
        auto src = m.values();
        auto dst = out.values();
        parallel_for(m.size(), exec, [&](std::size_t i) { dst[i] = src[i] + bias[i / cols]; });
        result = std::move(out);
        break;
    }
    case Op::take: {
        const Tensor& x = operand(0);
        if (node.axis >= x.rank()) {
            throw GraphError(index, node.op,
                             "axis " + std::to_string(node.axis) + " out of range for " + to_string(x.shape()));
        }
        const AxisSplit s = split_axis(x.shape(), node.axis);
        for (std::size_t i : node.indices) {
            if (i >= s.extent) {
                throw GraphError(index, node.op,
                                 "index " + std::to_string(i) + " out of range along axis " +
                                     std::to_string(node.axis) + " of " + to_string(x.shape()));
            }
        }
        Shape shape = x.shape();
        shape[node.axis] = node.indices.size();
        Tensor out(shape);
        auto src = x.values();
        auto dst = out.values();
        const std::size_t k = node.indices.size();
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t j = 0; j < k; ++j) {
                const double* from = src.data() + (o * s.extent + node.indices[j]) * s.inner;
                std::copy(from, from + s.inner, dst.data() + (o * k + j) * s.inner);
            }
        }
        result = std::move(out);
        break;
    }
    case Op::reshape: {
        const Tensor& x = operand(0);
        Shape target = node.shape;
        if (target.size() == 1 && target[0] == 0) {
            target[0] = x.size();
        }
        if (element_count(target) != x.size()) {
            throw GraphError(index, node.op, "cannot reshape " + to_string(x.shape()) + " to " + to_string(target));
        }
        result = x.reshaped(std::move(target));
        break;
    }
    case Op::stop_gradient: result = operand(0); break;
    case Op::check_range: {
        const Tensor& x = operand(0);
        auto v = x.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!(v[i] >= node.a && v[i] <= node.b)) {
                std::ostringstream os;
                os << node.label << " value " << v[i] << " at position " << i << " is outside [" << node.a << ", "
                   << node.b << "]";
                throw GraphError(index, node.op, os.str());
            }
        }
        result = x;
        break;
    }
    case Op::check_simplex: {
        const Tensor& x = operand(0);
        if (x.rank() == 0) {
            throw GraphError(index, node.op, node.label + " needs a class axis");
        }
        const std::size_t classes = x.shape()[0];
        const std::size_t columns = classes == 0 ? 0 : x.size() / classes;
        for (std::size_t j = 0; j < columns; ++j) {
            double total = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                const double v = x[c * columns + j];
                if (v < 0.0) {
                    throw GraphError(index, node.op, node.label + " has a negative entry in column " + std::to_string(j));
                }
                total += v;
            }
            const bool empty_ok = node.b != 0.0 && total == 0.0;
            if (!empty_ok && std::fabs(total - 1.0) > node.a) {
                std::ostringstream os;
                os << node.label << " column " << j << " sums to " << total << ", not 1";
                throw GraphError(index, node.op, os.str());
            }
        }
        result = x;
        break;
    }
    case Op::lovasz: {
        const Tensor& m = operand(0);
        const Tensor& y = operand(1);
        if (m.size() != y.size()) {
            throw GraphError(index, node.op,
                             "shape mismatch " + to_string(m.shape()) + " vs " + to_string(y.shape()));
        }
        std::size_t positives = 0;
        for (double v : y.values()) {
            if (v != 0.0 && v != 1.0) {
                throw GraphError(index, node.op, "Lovasz extension requires binary labels");
            }
            positives += v == 1.0 ? 1 : 0;
        }
        const std::size_t p = m.size();
        std::vector<std::size_t> order(p);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m[a] > m[b]; });
        // Value as sum_i (m_(i) - m_(i+1)) * loss(first i); this equals
        // sum_i m_(i) * (loss(first i) - loss(first i-1)) and reproduces the
        // set function exactly at binary points.
        double total = 0.0;
        std::size_t negatives_seen = 0;
        for (std::size_t i = 0; i < p; ++i) {
            negatives_seen += y[order[i]] == 0.0 ? 1 : 0;
            const double set_loss =
                static_cast<double>(i + 1) / static_cast<double>(positives + negatives_seen);
            const double next = i + 1 < p ? m[order[i + 1]] : 0.0;
            total += (m[order[i]] - next) * set_loss;
        }
        aux_[index] = std::move(order);
        aux_[index].push_back(positives);
        result = Tensor::scalar(total);
        break;
    }
    }
    values_[index] = std::move(result);
    view_[index] = &*values_[index];
}

Tensor Evaluator::gradient(Expr root, const std::string& wrt)
{
    return gradients(root, {wrt}).at(wrt);
}

std::map<std::string, Tensor> Evaluator::gradients(Expr root, const std::vector<std::string>& wrt)
{
    if (&root.graph() != &graph_) {
        throw std::invalid_argument("root belongs to another graph");
    }
    const std::size_t r = root.index();
    const Tensor& root_value = value(r);
    if (root_value.size() != 1) {
        throw GraphError(r, graph_.node(r).op, "gradient requires a scalar root, got shape " +
                                                   to_string(root_value.shape()));
    }
    std::map<std::string, std::size_t> targets;
    for (const auto& name : wrt) {
        auto idx = graph_.find_input(name);
        if (!idx) {
            throw std::invalid_argument("gradient: '" + name + "' is not an input of the graph");
        }
        if (!bindings_.count(name)) {
            throw std::invalid_argument("gradient: input '" + name + "' is not bound");
        }
        targets.emplace(name, *idx);
    }

    // Nodes with a path from a requested input; adjoints of all others are
    // never needed.
    std::vector<char> needs(r + 1, 0);
    for (const auto& [name, idx] : targets) {
        if (idx <= r) {
            needs[idx] = 1;
        }
    }
    for (std::size_t i = 0; i <= r; ++i) {
        const Node& node = graph_.node(i);
        if (node.op == Op::stop_gradient) {
            continue;
        }
        for (std::size_t operand : node.operands) {
            needs[i] = needs[i] || needs[operand];
        }
    }

    std::vector<std::optional<Tensor>> adj(r + 1);
    adj[r] = Tensor::filled(root_value.shape(), 1.0);
    const Exec exec = exec_;
    std::optional<Tensor> discard;

    for (std::size_t i = r + 1; i-- > 0;) {
        if (!adj[i] || !needs[i]) {
            continue;
        }
        const Node& node = graph_.node(i);
        const Tensor& g = *adj[i];
        auto in = [&](std::size_t k) -> const Tensor& { return *view_[node.operands[k]]; };
        auto wants = [&](std::size_t k) { return needs[node.operands[k]] != 0; };
        auto slot = [&](std::size_t k) -> std::optional<Tensor>& {
            if (!wants(k)) {
                discard.reset();
                return discard;
            }
            return adj[node.operands[k]];
        };
        auto map_grad = [&](const Tensor& like, auto&& fn) {
            Tensor out(like.shape());
            auto dst = out.values();
            parallel_for(dst.size(), exec, [&](std::size_t j) { dst[j] = fn(j); });
            return out;
        };
        const Tensor& out_value = *view_[i];

        switch (node.op) {
        case Op::constant:
        case Op::input:
        case Op::stop_gradient:
            break;
        case Op::add:
        case Op::sub: {
            const Tensor& x = in(0);
            const Tensor& y = in(1);
            accumulate_broadcast(slot(0), x, g, exec);
            const double sign = node.op == Op::add ? 1.0 : -1.0;
            accumulate_broadcast(slot(1), y, map_grad(g, [&](std::size_t j) { return sign * g[j]; }), exec);
            break;
        }
        case Op::mul:
        case Op::div:
        case Op::safe_div: {
            const Tensor& x = in(0);
            const Tensor& y = in(1);
            const bool xb = x.size() == 1 && g.size() != 1;
            const bool yb = y.size() == 1 && g.size() != 1;
            auto xv = [&](std::size_t j) { return xb ? x[0] : x[j]; };
            auto yv = [&](std::size_t j) { return yb ? y[0] : y[j]; };
            Tensor gx;
            Tensor gy;
            if (node.op == Op::mul) {
                gx = map_grad(g, [&](std::size_t j) { return g[j] * yv(j); });
                gy = map_grad(g, [&](std::size_t j) { return g[j] * xv(j); });
            } else {
                const bool safe = node.op == Op::safe_div;
                gx = map_grad(g, [&](std::size_t j) { return safe && yv(j) == 0.0 ? 0.0 : g[j] / yv(j); });
                gy = map_grad(g, [&](std::size_t j) {
                    return safe && yv(j) == 0.0 ? 0.0 : -g[j] * xv(j) / (yv(j) * yv(j));
                });
            }
            accumulate_broadcast(slot(0), x, std::move(gx), exec);
            accumulate_broadcast(slot(1), y, std::move(gy), exec);
            break;
        }
        case Op::neg:
            accumulate(slot(0), map_grad(g, [&](std::size_t j) { return -g[j]; }));
            break;
        case Op::abs: {
            const Tensor& x = in(0);
            accumulate(slot(0), map_grad(g, [&](std::size_t j) {
                           return x[j] > 0.0 ? g[j] : (x[j] < 0.0 ? -g[j] : 0.0);
                       }));
            break;
        }
        case Op::relu: {
            const Tensor& x = in(0);
            accumulate(slot(0), map_grad(g, [&](std::size_t j) { return x[j] > 0.0 ? g[j] : 0.0; }));
            break;
        }
        case Op::exp:
            accumulate(slot(0), map_grad(g, [&](std::size_t j) { return g[j] * out_value[j]; }));
            break;
        case Op::log: {
            const Tensor& x = in(0);
            accumulate(slot(0), map_grad(g, [&](std::size_t j) { return g[j] / x[j]; }));
            break;
        }
        case Op::pow: {
            const Tensor& x = in(0);
            const double e = node.a;
            accumulate(slot(0), map_grad(g, [&](std::size_t j) { return g[j] * e * std::pow(x[j], e - 1.0); }));
            break;
        }
        case Op::clamp: {
            const Tensor& x = in(0);
            const double lo = node.a;
            const double hi = node.b;
            accumulate(slot(0), map_grad(g, [&](std::size_t j) { return x[j] >= lo && x[j] <= hi ? g[j] : 0.0; }));
            break;
        }
        case Op::sum: {
            const Tensor& x = in(0);
            accumulate(slot(0), Tensor::filled(x.shape(), g[0]));
            break;
        }
        case Op::dot: {
            const Tensor& x = in(0);
            const Tensor& y = in(1);
            const double s = g[0];
            accumulate(slot(0), map_grad(x, [&](std::size_t j) { return s * y[j]; }));
            accumulate(slot(1), map_grad(y, [&](std::size_t j) { return s * x[j]; }));
            break;
        }
        case Op::max_reduce: {
            Tensor gx(in(0).shape());
            gx[aux_[i][0]] = g[0];
            accumulate(slot(0), gx);
            break;
        }
        case Op::softmax: {
            const AxisSplit s = split_axis(out_value.shape(), node.axis);
            Tensor gx(out_value.shape());
            auto dst = gx.values();
            parallel_for(s.outer * s.inner, exec, [&](std::size_t lane) {
                const std::size_t o = lane / s.inner;
                const std::size_t k = lane % s.inner;
                const std::size_t base = o * s.extent * s.inner + k;
                double inner = 0.0;
                for (std::size_t c = 0; c < s.extent; ++c) {
                    inner += g[base + c * s.inner] * out_value[base + c * s.inner];
                }
                for (std::size_t c = 0; c < s.extent; ++c) {
                    const std::size_t at = base + c * s.inner;
                    dst[at] = out_value[at] * (g[at] - inner);
                }
            });
            accumulate(slot(0), gx);
            break;
        }
        case Op::max_pool2d: {
            Tensor gx(in(0).shape());
            const auto& argmax = aux_[i];
            for (std::size_t j = 0; j < argmax.size(); ++j) {
                gx[argmax[j]] += g[j];
            }
            accumulate(slot(0), gx);
            break;
        }
        case Op::matmul: {
            const Tensor& a = in(0);
            const Tensor& b = in(1);
            const std::size_t m = a.shape()[0];
            const std::size_t k = a.shape()[1];
            const std::size_t n = b.shape()[1];
            if (wants(0)) {
                Tensor ga(a.shape());
                kernels::gemm(false, true, m, k, n, g.values(), b.values(), ga.values(), exec);
                accumulate(slot(0), ga);
            }
            if (wants(1)) {
                Tensor gb(b.shape());
                kernels::gemm(true, false, k, n, m, a.values(), g.values(), gb.values(), exec);
                accumulate(slot(1), gb);
            }
            break;
        }
        case Op::bias_add: {
            const Tensor& bias = in(1);
            const std::size_t rows = g.shape()[0];
            const std::size_t cols = g.shape()[1];
            Tensor gb(bias.shape());
            parallel_for(rows, exec, [&](std::size_t r0) {
                gb[r0] = kernels::sum(g.values().subspan(r0 * cols, cols), Exec::serial);
            });
            accumulate(slot(0), g);
            accumulate(slot(1), gb);
            break;
        }
        case Op::take: {
            const Tensor& x = in(0);
            const AxisSplit s = split_axis(x.shape(), node.axis);
            const std::size_t k = node.indices.size();
            Tensor gx(x.shape());
            for (std::size_t o = 0; o < s.outer; ++o) {
                for (std::size_t j = 0; j < k; ++j) {
                    const double* from = g.values().data() + (o * k + j) * s.inner;
                    double* to = gx.values().data() + (o * s.extent + node.indices[j]) * s.inner;
                    for (std::size_t t = 0; t < s.inner; ++t) {
                        to[t] += from[t];
                    }
                }
            }
            accumulate(slot(0), gx);
            break;
        }
        case Op::reshape:
        case Op::check_range:
        case Op::check_simplex:
            accumulate(slot(0), g.reshaped(in(0).shape()));
            break;
        case Op::lovasz: {
            const Tensor& m = in(0);
            const Tensor& y = in(1);
            const auto& aux = aux_[i];
            const std::size_t p = m.size();
            const std::size_t positives = aux[p];
            Tensor gm(m.shape());
            std::size_t negatives_seen = 0;
            double previous = 0.0;
            for (std::size_t t = 0; t < p; ++t) {
                negatives_seen += y[aux[t]] == 0.0 ? 1 : 0;
                const double set_loss =
                    static_cast<double>(t + 1) / static_cast<double>(positives + negatives_seen);
                gm[aux[t]] = g[0] * (set_loss - previous);
                previous = set_loss;
            }
            accumulate(slot(0), gm);
            break;
        }
        }
        if (i != r && graph_.node(i).op != Op::input) {
            adj[i].reset();
        }
    }

    std::map<std::string, Tensor> result;
    for (const auto& [name, idx] : targets) {
        const Tensor& bound = bindings_.at(name);
        if (idx <= r && adj[idx]) {
            result.emplace(name, adj[idx]->reshaped(bound.shape()));
        } else {
            result.emplace(name, Tensor(bound.shape()));
        }
    }
    return result;
}

Tensor evaluate(Graph& graph, const Bindings& bindings)
{
    Evaluator ev(graph, bindings);
    return ev.value(graph.root());
}

Tensor gradient(Graph& graph, const Bindings& bindings, const std::string& wrt)
{
    Evaluator ev(graph, bindings);
    return ev.gradient(graph.root(), wrt);
}

FiniteDifferenceReport finite_difference_check(Graph& graph, const Bindings& bindings, const std::string& wrt,
                                               double step)
{
    if (!(step > 0.0)) {
        throw std::invalid_argument("finite_difference_check: step must be positive");
    }
    FiniteDifferenceReport report;
    const Tensor analytic = gradient(graph, bindings, wrt);
    Bindings probe = bindings;
    Tensor& point = probe.at(wrt);
    report.analytic.assign(analytic.values().begin(), analytic.values().end());
    report.numeric.resize(point.size());
    report.relative_error.resize(point.size());
    for (std::size_t j = 0; j < point.size(); ++j) {
        const double original = point[j];
        auto at = [&](double offset) {
            point[j] = original + offset;
            return evaluate(graph, probe).item();
        };
        const double numeric = (8.0 * (at(step) - at(-step)) - (at(2.0 * step) - at(-2.0 * step))) / (12.0 * step);
        point[j] = original;
        const double a = report.analytic[j];
        const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
        report.numeric[j] = numeric;
        report.relative_error[j] = std::fabs(a - numeric) / denom;
        if (report.relative_error[j] > report.max_relative_error) {
            report.max_relative_error = report.relative_error[j];
            report.worst_index = j;
        }
    }
    return report;
}

}  // namespace jml::ad
