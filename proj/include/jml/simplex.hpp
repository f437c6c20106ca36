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

#ifndef JML_SIMPLEX_HPP
#define JML_SIMPLEX_HPP

#include <cstddef>
#include <vector>

namespace jml::theory {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    std::vector<double> x;
};

/// Dense two-phase simplex with Bland's rule for
///   min c'x  s.t.  A x = b,  x >= 0.
/// A is row-major, rows x cols. Meant for small problems (a few hundred
/// columns); pivots below `tol` in magnitude are treated as zero.
LpResult solve_lp(const std::vector<double>& a, std::size_t rows, std::size_t cols, const std::vector<double>& b,
                  const std::vector<double>& c, double tol = 1e-11);

}  // namespace jml::theory

#endif  // JML_SIMPLEX_HPP
