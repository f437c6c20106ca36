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

#ifndef JML_TENSOR_HPP
#define JML_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace jml {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of doubles. A rank-0 tensor holds a single value.
///
/// Values are checked for finiteness when a tensor is constructed from
/// caller data; kernels that write through values() are trusted.
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> values);
    static Tensor filled(Shape shape, double value);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const;

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& storage() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// Row-major element access; the number of indices must equal rank().
    double at(std::initializer_list<std::size_t> index) const;
    double& at(std::initializer_list<std::size_t> index);

    /// Value of a single-element tensor.
    double item() const;

    Tensor reshaped(Shape shape) const;

    bool all_finite() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t offset(std::initializer_list<std::size_t> index) const;

    Shape shape_;
    std::vector<double> data_;
};

}  // namespace jml

#endif  // JML_TENSOR_HPP
