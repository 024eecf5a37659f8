// Copyright 2026 The pairsync Authors
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

#ifndef PAIRSYNC_PARALLEL_HPP_
#define PAIRSYNC_PARALLEL_HPP_

#include <cstddef>

namespace pairsync
{

/// Thread cap for internal work: PAIRSYNC_THREADS when set to a positive
/// integer, otherwise the hardware concurrency (at least 1).
std::size_t max_threads();

}  // namespace pairsync

#endif  // PAIRSYNC_PARALLEL_HPP_
