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

#ifndef JML_PARALLEL_HPP
#define JML_PARALLEL_HPP

#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <utility>
#include <vector>

namespace jml {

/// Selects the execution path of a kernel. `serial` is the plain loop kept as
/// the reference implementation; `parallel` is the OpenMP path used by default.
enum class Exec { serial, parallel };

/// Block length for parallel reductions. Fixed so that results do not depend
/// on the number of OpenMP threads.
inline constexpr std::size_t kReductionBlock = 2048;

namespace detail {

// Collects the exception thrown by the lowest failing iteration of a parallel
// loop so it can be rethrown outside the OpenMP region.
class FirstError {
public:
    void capture(std::size_t index)
    {
#pragma omp critical(jml_first_error)
        {
            if (index < index_) {
                index_ = index;
                error_ = std::current_exception();
            }
        }
    }
    void rethrow() const
    {
        if (error_) {
            std::rethrow_exception(error_);
        }
    }

private:
    std::size_t index_ = std::numeric_limits<std::size_t>::max();
    std::exception_ptr error_;
};

}  // namespace detail

/// Calls fn(i) for i in [0, n). Iterations must be independent. An exception
/// thrown by any iteration is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn)
{
    if (exec == Exec::serial) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    const auto count = static_cast<std::int64_t>(n);
    detail::FirstError error;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            error.capture(static_cast<std::size_t>(i));
        }
    }
    error.rethrow();
}

/// Reduces [0, n) by evaluating block(begin, end) -> Partial on fixed-size
/// blocks and folding the partials left to right with merge(acc, partial).
///
/// The serial path evaluates one block spanning the whole range, which is the
/// textbook loop; the parallel path is deterministic for a given n.
template <class Partial, class BlockFn, class MergeFn>
Partial blocked_reduce(std::size_t n, Exec exec, Partial identity, BlockFn&& block, MergeFn&& merge)
{
    if (exec == Exec::serial || n <= kReductionBlock) {
        merge(identity, block(std::size_t{0}, n));
        return identity;
    }
    const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
    std::vector<Partial> partials(blocks, identity);
    const auto count = static_cast<std::int64_t>(blocks);
    detail::FirstError error;
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < count; ++b) {
        const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
        const std::size_t end = begin + kReductionBlock < n ? begin + kReductionBlock : n;
        try {
            partials[static_cast<std::size_t>(b)] = block(begin, end);
        } catch (...) {
            error.capture(static_cast<std::size_t>(b));
        }
    }
    error.rethrow();
    for (auto& partial : partials) {
        merge(identity, std::move(partial));
    }
    return identity;
}

}  // namespace jml

#endif  // JML_PARALLEL_HPP
