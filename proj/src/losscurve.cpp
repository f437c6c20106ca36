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

#include "jml/losscurve.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "jml/losses.hpp"
#include "jml/theory.hpp"

namespace jml::harness {

std::vector<std::string> curve_loss_names()
{
    auto names = theory::loss_names();
    names.insert(names.end(), {"ce", "tversky", "lovasz"});
    return names;
}

double curve_value(const std::string& name, double x, double y)
{
    const double xs[] = {x};
    const double ys[] = {y};
    if (name == "ce") {
        const double xc = std::clamp(x, losses::kProbabilityClamp, 1.0 - losses::kProbabilityClamp);
        return -(y * std::log(xc) + (1.0 - y) * std::log(1.0 - xc));
    }
    if (name == "tversky") {
        return losses::tversky(xs, ys, 1.0, 1.0);
    }
    if (name == "lovasz") {
        return losses::lovasz_softmax(xs, ys);
    }
    const auto names = curve_loss_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        std::string valid;
        for (const auto& n : names) {
            valid += (valid.empty() ? "" : ", ") + n;
        }
        throw std::invalid_argument("unknown loss '" + name + "'; valid names: " + valid);
    }
    return theory::loss_by_name(name)(xs, ys);
}

std::string LossCurve::to_csv() const
{
    std::ostringstream os;
    os << std::setprecision(12) << 'x';
    for (const auto& n : names) {
        os << ',' << n;
    }
    os << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) {
        os << x[i];
        for (const auto& row : values) {
            os << ',' << row[i];
        }
        os << '\n';
    }
    return os.str();
}

LossCurve losscurve(const std::string& names, double y, std::size_t n)
{
    if (!(y >= 0.0 && y <= 1.0)) {
        throw std::invalid_argument("losscurve: y must lie in [0, 1]");
    }
    if (n < 2) {
        throw std::invalid_argument("losscurve: need at least 2 grid points");
    }
    LossCurve curve;
    std::stringstream ss(names);
    std::string name;
    while (std::getline(ss, name, ',')) {
        if (!name.empty()) {
            curve.names.push_back(name);
        }
    }
    if (curve.names.empty()) {
        throw std::invalid_argument("losscurve: no loss names given");
    }
    for (std::size_t i = 0; i < n; ++i) {
        curve.x.push_back(static_cast<double>(i) / static_cast<double>(n - 1));
    }
    for (const auto& nm : curve.names) {
        std::vector<double> row;
        for (double x : curve.x) {
            row.push_back(curve_value(nm, x, y));
        }
        curve.values.push_back(std::move(row));
    }
    return curve;
}

}  // namespace jml::harness
