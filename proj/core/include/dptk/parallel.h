// Copyright 2026 The dp_toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPTK_PARALLEL_H_
#define DPTK_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace dptk {

// Worker cap: DP_TOOLKIT_THREADS if set to a positive integer, otherwise
// std::thread::hardware_concurrency().
std::size_t worker_threads();

// Runs body(begin, end) over a static partition of [0, count). Chunks are
// disjoint, so results written to per-index slots do not depend on the thread
// count.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 64);

}  // namespace dptk

#endif  // DPTK_PARALLEL_H_
