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

#include "jml/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace jml {

std::size_t element_count(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) {
            os << ", ";
        }
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (data_.size() != element_count(shape_)) {
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + to_string(shape_));
    }
    if (!all_finite()) {
        throw std::invalid_argument("tensor constructed with non-finite values");
    }
}

Tensor Tensor::scalar(double value)
{
    return Tensor(Shape{}, std::vector<double>{value});
}

Tensor Tensor::vector(std::vector<double> values)
{
    const std::size_t n = values.size();
    return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::filled(Shape shape, double value)
{
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

std::size_t Tensor::extent(std::size_t axis) const
{
    if (axis >= shape_.size()) {
        throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
    }
    return shape_[axis];
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const
{
    if (index.size() != shape_.size()) {
        throw std::invalid_argument("index rank does not match tensor rank");
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
        if (i >= shape_[axis]) {
            throw std::out_of_range("tensor index out of range");
        }
        flat = flat * shape_[axis] + i;
        ++axis;
    }
    return flat;
}

double Tensor::at(std::initializer_list<std::size_t> index) const
{
    return data_[offset(index)];
}

double& Tensor::at(std::initializer_list<std::size_t> index)
{
    return data_[offset(index)];
}

double Tensor::item() const
{
    if (data_.size() != 1) {
        throw std::logic_error("item() on tensor of shape " + to_string(shape_));
    }
    return data_.front();
}

Tensor Tensor::reshaped(Shape shape) const
{
    if (element_count(shape) != data_.size()) {
        throw std::invalid_argument("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

bool Tensor::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace jml
