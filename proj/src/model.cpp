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

#include "jml/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace jml::harness {

Tensor patch_features(const Tensor& features, std::size_t patch, Exec exec)
{
    if (features.rank() != 3) {
        throw std::invalid_argument("patch_features: expected F x H x W, got " + to_string(features.shape()));
    }
    if (patch == 0 || patch % 2 == 0) {
        throw std::invalid_argument("patch_features: patch size must be odd");
    }
    const std::size_t f = features.shape()[0];
    const auto h = static_cast<long>(features.shape()[1]);
    const auto w = static_cast<long>(features.shape()[2]);
    const std::size_t n = static_cast<std::size_t>(h * w);
    const long r = static_cast<long>(patch / 2);
    const std::size_t rows = f * patch * patch;
    Tensor out(Shape{rows, n});
    parallel_for(n, exec, [&](std::size_t i) {
        const long y = static_cast<long>(i) / w;
        const long x = static_cast<long>(i) % w;
        std::size_t row = 0;
        for (std::size_t ch = 0; ch < f; ++ch) {
            for (long dy = -r; dy <= r; ++dy) {
                for (long dx = -r; dx <= r; ++dx) {
                    const long yy = std::clamp(y + dy, 0L, h - 1);
                    const long xx = std::clamp(x + dx, 0L, w - 1);
                    out[row * n + i] = features[ch * n + static_cast<std::size_t>(yy * w + xx)];
                    ++row;
                }
            }
        }
    });
    return out;
}

Tensor concat_columns(const std::vector<const Tensor*>& parts)
{
    if (parts.empty()) {
        throw std::invalid_argument("concat_columns: nothing to concatenate");
    }
    const std::size_t rows = parts.front()->shape()[0];
    std::size_t cols = 0;
    for (const Tensor* p : parts) {
        if (p->rank() != 2 || p->shape()[0] != rows) {
            throw std::invalid_argument("concat_columns: row counts differ");
        }
        cols += p->shape()[1];
    }
    Tensor out(Shape{rows, cols});
    std::size_t offset = 0;
    for (const Tensor* p : parts) {
        const std::size_t c = p->shape()[1];
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < c; ++j) {
                out[r * cols + offset + j] = (*p)[r * c + j];
            }
        }
        offset += c;
    }
    return out;
}

Mlp::Mlp(MlpSpec spec, std::uint64_t seed) : spec_(std::move(spec))
{
    if (spec_.inputs == 0 || spec_.classes == 0) {
        throw std::invalid_argument("mlp: inputs and classes must be positive");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> widths{spec_.inputs};
    widths.insert(widths.end(), spec_.hidden.begin(), spec_.hidden.end());
    widths.push_back(spec_.classes);
    for (std::size_t layer = 0; layer + 1 < widths.size(); ++layer) {
        const std::size_t in = widths[layer];
        const std::size_t out = widths[layer + 1];
        if (out == 0) {
            throw std::invalid_argument("mlp: hidden widths must be positive");
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Tensor weight(Shape{out, in});
        for (std::size_t i = 0; i < weight.size(); ++i) {
            weight[i] = dist(rng);
        }
        names_.push_back("w" + std::to_string(layer));
        params_.push_back(std::move(weight));
        names_.push_back("b" + std::to_string(layer));
        params_.emplace_back(Shape{out});
    }
}

ad::Bindings Mlp::bindings() const
{
    ad::Bindings b;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        b.emplace(names_[i], params_[i]);
    }
    return b;
}

ad::Expr Mlp::forward(ad::Graph& graph, ad::Expr inputs) const
{
    ad::Expr h = inputs;
    const std::size_t layers = names_.size() / 2;
    for (std::size_t layer = 0; layer < layers; ++layer) {
        h = ad::bias_add(ad::matmul(graph.input(names_[2 * layer]), h), graph.input(names_[2 * layer + 1]));
        if (layer + 1 < layers) {
            h = ad::relu(h);
        }
    }
    return h;
}

Tensor Mlp::predict(const Tensor& inputs, Exec exec) const
{
    ad::Graph graph;
    ad::Expr probs = ad::softmax(forward(graph, graph.constant(inputs)), 0);
    ad::Evaluator ev(graph, bindings(), exec);
    return ev.value(probs);
}

nlohmann::json Mlp::to_json() const
{
    nlohmann::json j;
    j["inputs"] = spec_.inputs;
    j["hidden"] = spec_.hidden;
    j["classes"] = spec_.classes;
    nlohmann::json params = nlohmann::json::object();
    for (std::size_t i = 0; i < names_.size(); ++i) {
        params[names_[i]] = {{"shape", params_[i].shape()},
                             {"values", std::vector<double>(params_[i].values().begin(), params_[i].values().end())}};
    }
    j["params"] = params;
    return j;
}

Mlp Mlp::from_json(const nlohmann::json& j)
{
    MlpSpec spec{j.at("inputs").get<std::size_t>(), j.at("hidden").get<std::vector<std::size_t>>(),
                 j.at("classes").get<std::size_t>()};
    Mlp m(spec, 0);
    for (std::size_t i = 0; i < m.names_.size(); ++i) {
        const auto& p = j.at("params").at(m.names_[i]);
        Tensor t(p.at("shape").get<Shape>(), p.at("values").get<std::vector<double>>());
        if (t.shape() != m.params_[i].shape()) {
            throw std::invalid_argument("mlp: parameter " + m.names_[i] + " has shape " + to_string(t.shape()));
        }
        m.params_[i] = std::move(t);
    }
    return m;
}

}  // namespace jml::harness
