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

#ifndef JML_KERNELS_HPP
#define JML_KERNELS_HPP

#include <cstddef>
#include <span>

#include "jml/parallel.hpp"

// Dense numeric kernels shared by the autodiff engine, the label transforms
// and the training harness. Every kernel has a serial reference path and an
// OpenMP path selected by Exec.
namespace jml::kernels {

double sum(std::span<const double> x, Exec exec = Exec::parallel);
double dot(std::span<const double> x, std::span<const double> y, Exec exec = Exec::parallel);

/// c = op(a) * op(b) where op transposes when the flag is set. op(a) is m x k,
/// op(b) is k x n, c is m x n; all row-major and c is overwritten.
void gemm(bool transpose_a, bool transpose_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          Exec exec = Exec::parallel);

/// Stride-1 k x k max pooling over the trailing two axes of `planes` stacked
/// h x w planes. Windows are clipped at the image edge, which is the same as
/// replicate padding for a max. When argmax is non-empty it receives the flat
/// input index of each window's maximum (first in row-major order on ties).
void max_pool2d(std::span<const double> in, std::size_t planes, std::size_t h, std::size_t w, std::size_t k,
                std::span<double> out, std::span<std::size_t> argmax = {}, Exec exec = Exec::parallel);

}  // namespace jml::kernels

#endif  // JML_KERNELS_HPP
