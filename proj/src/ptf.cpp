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

#include "jml/ptf.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace jml::ptf {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'T', 'F', '1'};

void put_u32(std::ostream& os, std::uint32_t v)
{
    const std::array<char, 4> bytes{static_cast<char>(v & 0xFFU), static_cast<char>((v >> 8) & 0xFFU),
                                    static_cast<char>((v >> 16) & 0xFFU), static_cast<char>((v >> 24) & 0xFFU)};
    os.write(bytes.data(), 4);
}

std::uint32_t get_u32(std::istream& is, const char* what)
{
    std::array<unsigned char, 4> b{};
    if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw std::runtime_error(std::string("ptf: truncated ") + what);
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write(std::ostream& os, const Shape& shape, std::span<const float> data)
{
    if (element_count(shape) != data.size()) {
        throw std::invalid_argument("ptf: payload of " + std::to_string(data.size()) + " values for shape " +
                                    to_string(shape));
    }
    os.write(kMagic.data(), 4);
    put_u32(os, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t e : shape) {
        if (e > std::numeric_limits<std::uint32_t>::max()) {
            throw std::invalid_argument("ptf: extent does not fit in u32");
        }
        put_u32(os, static_cast<std::uint32_t>(e));
    }
    for (float f : data) {
        put_u32(os, std::bit_cast<std::uint32_t>(f));
    }
    if (!os) {
        throw std::runtime_error("ptf: write failed");
    }
}

Array read(std::istream& is)
{
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4) || magic != kMagic) {
        throw std::runtime_error("ptf: bad magic");
    }
    Array out;
    const std::uint32_t rank = get_u32(is, "rank");
    for (std::uint32_t i = 0; i < rank; ++i) {
        out.shape.push_back(get_u32(is, "extent"));
    }
    const std::size_t n = element_count(out.shape);
    out.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.data[i] = std::bit_cast<float>(get_u32(is, "payload"));
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error("ptf: trailing bytes after payload");
    }
    return out;
}

void write_file(const std::filesystem::path& path, const Shape& shape, std::span<const float> data)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("ptf: cannot open " + path.string() + " for writing");
    }
    write(os, shape, data);
}

Array read_file(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("ptf: cannot open " + path.string());
    }
    return read(is);
}

void write_tensor(const std::filesystem::path& path, const Tensor& t)
{
    std::vector<float> data(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        data[i] = static_cast<float>(t[i]);
    }
    write_file(path, t.shape(), data);
}

Tensor read_tensor(const std::filesystem::path& path)
{
    Array a = read_file(path);
    return Tensor(a.shape, std::vector<double>(a.data.begin(), a.data.end()));
}

}  // namespace jml::ptf
