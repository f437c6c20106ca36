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

#ifndef JML_VERIFY_HPP
#define JML_VERIFY_HPP

#include <cstddef>
#include <cstdint>

#include <json.hpp>

namespace jml::harness {

struct VerifyOptions {
    std::uint64_t seed = 0;
    std::size_t axiom_samples = 100000;     // per dimension and loss
    std::size_t pair_samples = 10000;       // equivalence and KD triangle
    std::size_t ordering_samples = 100000;
    std::size_t sign_samples = 1000;
    std::size_t gradient_points = 1000;
    std::size_t closure_pairs = 1000;
};

struct VerifyReport {
    nlohmann::json checks = nlohmann::json::array();  // {name, verdict, magnitude, worst}
    bool all_pass() const;
};

/// Runs the whole theory suite. Every entry's verdict is "pass" or "fail";
/// entries for known counterexamples pass when the counterexample reproduces.
VerifyReport run_verify(const VerifyOptions& options);

}  // namespace jml::harness

#endif  // JML_VERIFY_HPP
