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

#include "jml/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace jml::theory {

namespace {

// Tableau with one row per constraint plus the objective row at the bottom.
// Column `width - 1` holds the right-hand side.
class Tableau {
public:
    Tableau(std::size_t rows, std::size_t width) : rows_(rows), width_(width), t_((rows + 1) * width, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return t_[r * width_ + c]; }
    double at(std::size_t r, std::size_t c) const { return t_[r * width_ + c]; }
    double& rhs(std::size_t r) { return at(r, width_ - 1); }
    std::size_t objective_row() const { return rows_; }

    void pivot(std::size_t pr, std::size_t pc)
    {
        const double p = at(pr, pc);
        for (std::size_t c = 0; c < width_; ++c) {
            at(pr, c) /= p;
        }
        for (std::size_t r = 0; r <= rows_; ++r) {
            if (r == pr) {
                continue;
            }
            const double f = at(r, pc);
            if (f == 0.0) {
                continue;
            }
            for (std::size_t c = 0; c < width_; ++c) {
                at(r, c) -= f * at(pr, c);
            }
            at(r, pc) = 0.0;
        }
    }

private:
    std::size_t rows_;
    std::size_t width_;
    std::vector<double> t_;
};

// Runs Bland's rule over columns [0, usable). Returns false when unbounded.
bool iterate(Tableau& t, std::vector<std::size_t>& basis, std::size_t rows, std::size_t usable, double tol)
{
    const std::size_t obj = t.objective_row();
    for (;;) {
        std::size_t enter = usable;
        for (std::size_t c = 0; c < usable; ++c) {
            if (t.at(obj, c) < -tol) {
                enter = c;
                break;
            }
        }
        if (enter == usable) {
            return true;
        }
        std::size_t leave = rows;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < rows; ++r) {
            const double coef = t.at(r, enter);
            if (coef <= tol) {
                continue;
            }
            const double ratio = t.rhs(r) / coef;
            if (ratio < best - tol || (ratio <= best + tol && leave != rows && basis[r] < basis[leave])) {
                best = ratio;
                leave = r;
            }
        }
        if (leave == rows) {
            return false;
        }
        t.pivot(leave, enter);
        basis[leave] = enter;
    }
}

}  // namespace

LpResult solve_lp(const std::vector<double>& a, std::size_t rows, std::size_t cols, const std::vector<double>& b,
                  const std::vector<double>& c, double tol)
{
    if (a.size() != rows * cols || b.size() != rows || c.size() != cols) {
        throw std::invalid_argument("solve_lp: inconsistent problem dimensions");
    }
    // Columns: original variables, then one artificial per row, then rhs.
    const std::size_t width = cols + rows + 1;
    Tableau t(rows, width);
    std::vector<std::size_t> basis(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double sign = b[r] < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < cols; ++j) {
            t.at(r, j) = sign * a[r * cols + j];
        }
        t.at(r, cols + r) = 1.0;
        t.rhs(r) = sign * b[r];
        basis[r] = cols + r;
    }
    // Phase one: minimize the sum of artificials, expressed in reduced form.
    const std::size_t obj = t.objective_row();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < cols; ++j) {
            t.at(obj, j) -= t.at(r, j);
        }
        t.at(obj, width - 1) -= t.rhs(r);
    }
    iterate(t, basis, rows, cols + rows, tol);
    LpResult result;
    if (-t.at(obj, width - 1) > 1e3 * tol * static_cast<double>(rows + 1)) {
        result.status = LpStatus::infeasible;
        return result;
    }
    // Drive remaining artificials out of the basis where possible.
    for (std::size_t r = 0; r < rows; ++r) {
        if (basis[r] < cols) {
            continue;
        }
        for (std::size_t j = 0; j < cols; ++j) {
            if (std::fabs(t.at(r, j)) > tol) {
                t.pivot(r, j);
                basis[r] = j;
                break;
            }
        }
    }
    // Phase two on the original costs. Artificials stay out of the pricing;
    // any still basic sit on redundant rows at level zero.
    for (std::size_t j = 0; j < width; ++j) {
        t.at(obj, j) = j < cols ? c[j] : 0.0;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (basis[r] >= cols) {
            continue;
        }
        const double f = t.at(obj, basis[r]);
        if (f == 0.0) {
            continue;
        }
        for (std::size_t j = 0; j < width; ++j) {
            t.at(obj, j) -= f * t.at(r, j);
        }
    }
    if (!iterate(t, basis, rows, cols, tol)) {
        result.status = LpStatus::unbounded;
        return result;
    }
    result.status = LpStatus::optimal;
    result.x.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        if (basis[r] < cols) {
            result.x[basis[r]] = t.rhs(r);
        }
    }
    for (std::size_t j = 0; j < cols; ++j) {
        result.value += c[j] * result.x[j];
    }
    return result;
}

}  // namespace jml::theory
