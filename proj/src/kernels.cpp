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

#include "jml/kernels.hpp"

#include <algorithm>
#include <stdexcept>

namespace jml::kernels {

double sum(std::span<const double> x, Exec exec)
{
    return blocked_reduce(
        x.size(), exec, 0.0,
        [&](std::size_t begin, std::size_t end) {
            double s = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                s += x[i];
            }
            return s;
        },
        [](double& acc, double part) { acc += part; });
}

double dot(std::span<const double> x, std::span<const double> y, Exec exec)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("dot: operand lengths differ");
    }
    return blocked_reduce(
        x.size(), exec, 0.0,
        [&](std::size_t begin, std::size_t end) {
            double s = 0.0;
            for (std::size_t i = begin; i < end; ++i) {
                s += x[i] * y[i];
            }
            return s;
        },
        [](double& acc, double part) { acc += part; });
}

namespace {

void gemm_reference(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
                    std::span<const double> b, std::span<double> c)
{
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = ta ? a[p * m + i] : a[i * k + p];
                const double bv = tb ? b[j * k + p] : b[p * n + j];
                s += av * bv;
            }
            c[i * n + j] = s;
        }
    }
}

void gemm_dot_row(bool ta, std::size_t i, std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
                  std::span<const double> b, std::span<double> c)
{
    double* row = c.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
        const double* bj = b.data() + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            s += (ta ? a[p * m + i] : a[i * k + p]) * bj[p];
        }
        row[j] = s;
    }
}

constexpr std::size_t kGemmTile = 256;

// Columns [j0, j1) of every row of C = op(A) B, four rows at a time; each
// entry still sums over p in order.
void gemm_tile(bool ta, std::size_t j0, std::size_t j1, std::size_t m, std::size_t n, std::size_t k,
               std::span<const double> a, std::span<const double> b, std::span<double> c)
{
    auto at = [&](std::size_t i, std::size_t p) { return ta ? a[p * m + i] : a[i * k + p]; };
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        double* r0 = c.data() + i * n;
        double* r1 = r0 + n;
        double* r2 = r1 + n;
        double* r3 = r2 + n;
        for (double* r : {r0, r1, r2, r3}) {
            std::fill(r + j0, r + j1, 0.0);
        }
        for (std::size_t p = 0; p < k; ++p) {
            const double a0 = at(i, p);
            const double a1 = at(i + 1, p);
            const double a2 = at(i + 2, p);
            const double a3 = at(i + 3, p);
            const double* bp = b.data() + p * n;
            for (std::size_t j = j0; j < j1; ++j) {
                const double bv = bp[j];
                r0[j] += a0 * bv;
                r1[j] += a1 * bv;
                r2[j] += a2 * bv;
                r3[j] += a3 * bv;
            }
        }
    }
    for (; i < m; ++i) {
        double* row = c.data() + i * n;
        std::fill(row + j0, row + j1, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = at(i, p);
            const double* bp = b.data() + p * n;
            for (std::size_t j = j0; j < j1; ++j) {
                row[j] += av * bp[j];
            }
        }
    }
}

}  // namespace

void gemm(bool transpose_a, bool transpose_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c, Exec exec)
{
    if (a.size() != m * k || b.size() != k * n || c.size() != m * n) {
        throw std::invalid_argument("gemm: operand sizes do not match dimensions");
    }
    if (exec == Exec::serial) {
        gemm_reference(transpose_a, transpose_b, m, n, k, a, b, c);
        return;
    }
    if (transpose_b) {
        parallel_for(m, exec, [&](std::size_t i) { gemm_dot_row(transpose_a, i, m, n, k, a, b, c); });
        return;
    }
    const std::size_t tiles = (n + kGemmTile - 1) / kGemmTile;
    parallel_for(tiles, exec, [&](std::size_t t) {
        gemm_tile(transpose_a, t * kGemmTile, std::min(n, (t + 1) * kGemmTile), m, n, k, a, b, c);
    });
}

void max_pool2d(std::span<const double> in, std::size_t planes, std::size_t h, std::size_t w, std::size_t k,
                std::span<double> out, std::span<std::size_t> argmax, Exec exec)
{
    if (k == 0 || k % 2 == 0) {
        throw std::invalid_argument("max_pool2d: kernel size must be odd and positive, got " + std::to_string(k));
    }
    if (in.size() != planes * h * w || out.size() != in.size() || (!argmax.empty() && argmax.size() != in.size())) {
        throw std::invalid_argument("max_pool2d: buffer sizes do not match planes x h x w");
    }
    const std::size_t r = k / 2;
    const std::size_t rows = planes * h;
    parallel_for(rows, exec, [&](std::size_t pr) {
        const std::size_t plane = pr / h;
        const std::size_t y = pr % h;
        const std::size_t base = plane * h * w;
        const std::size_t y0 = y >= r ? y - r : 0;
        const std::size_t y1 = std::min(h - 1, y + r);
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t x0 = x >= r ? x - r : 0;
            const std::size_t x1 = std::min(w - 1, x + r);
            std::size_t best = base + y0 * w + x0;
            for (std::size_t yy = y0; yy <= y1; ++yy) {
                for (std::size_t xx = x0; xx <= x1; ++xx) {
                    const std::size_t idx = base + yy * w + xx;
                    if (in[idx] > in[best]) {
                        best = idx;
                    }
                }
            }
            out[base + y * w + x] = in[best];
            if (!argmax.empty()) {
                argmax[base + y * w + x] = best;
            }
        }
    });
}

}  // namespace jml::kernels
