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

#ifndef JML_PTF_HPP
#define JML_PTF_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "jml/tensor.hpp"

// Portable tensor files: "PTF1", u32 rank, u32 extents, f32 row-major
// payload, all little-endian.
namespace jml::ptf {

struct Array {
    Shape shape;
    std::vector<float> data;
};

void write(std::ostream& os, const Shape& shape, std::span<const float> data);
Array read(std::istream& is);

void write_file(const std::filesystem::path& path, const Shape& shape, std::span<const float> data);
Array read_file(const std::filesystem::path& path);

/// Narrows to f32 on write and widens on read.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace jml::ptf

#endif  // JML_PTF_HPP
