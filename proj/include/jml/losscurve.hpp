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

#ifndef JML_LOSSCURVE_HPP
#define JML_LOSSCURVE_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace jml::harness {

/// Names accepted by losscurve: the pair losses plus ce (binary cross
/// entropy), tversky (alpha = beta = 1) and lovasz.
std::vector<std::string> curve_loss_names();

/// Single-pixel value of a named loss at prediction x and label y.
double curve_value(const std::string& name, double x, double y);

struct LossCurve {
    std::vector<std::string> names;
    std::vector<double> x;
    std::vector<std::vector<double>> values;  // one row per name

    std::string to_csv() const;
};

/// Sweeps x over n evenly spaced points of [0, 1] for each comma-separated
/// loss name.
LossCurve losscurve(const std::string& names, double y, std::size_t n);

}  // namespace jml::harness

#endif  // JML_LOSSCURVE_HPP
