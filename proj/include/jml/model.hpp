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

#ifndef JML_MODEL_HPP
#define JML_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "jml/autodiff.hpp"
#include "jml/parallel.hpp"
#include "jml/tensor.hpp"

namespace jml::harness {

/// (F * p * p) x (H * W) matrix of p x p feature patches around every pixel,
/// channel-major within a patch. Borders replicate the edge pixel.
Tensor patch_features(const Tensor& features, std::size_t patch, Exec exec = Exec::parallel);

/// Column-wise concatenation of patch matrices, image after image.
Tensor concat_columns(const std::vector<const Tensor*>& parts);

struct MlpSpec {
    std::size_t inputs = 0;
    std::vector<std::size_t> hidden{16};
    std::size_t classes = 0;
};

/// Per-pixel multilayer perceptron: ReLU hidden layers, linear output.
/// Parameters are named w0, b0, w1, b1, ... for use as graph inputs.
class Mlp {
public:
    Mlp() = default;
    /// He-uniform weights, zero biases.
    Mlp(MlpSpec spec, std::uint64_t seed);

    const MlpSpec& spec() const { return spec_; }
    const std::vector<std::string>& names() const { return names_; }
    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }
    ad::Bindings bindings() const;

    /// Logits (C x N) for a D x N input.
    ad::Expr forward(ad::Graph& graph, ad::Expr inputs) const;
    /// Softmax probabilities (C x N) computed without building a loss.
    Tensor predict(const Tensor& inputs, Exec exec = Exec::parallel) const;

    nlohmann::json to_json() const;
    static Mlp from_json(const nlohmann::json& j);

private:
    MlpSpec spec_;
    std::vector<std::string> names_;
    std::vector<Tensor> params_;
};

}  // namespace jml::harness

#endif  // JML_MODEL_HPP
