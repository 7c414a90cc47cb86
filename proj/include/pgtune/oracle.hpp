/*
 * Copyright 2026 The pgtune authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PGTUNE_ORACLE_HPP
#define PGTUNE_ORACLE_HPP

#include <vector>

#include "pgtune/collectives.hpp"

namespace pgtune {

/// Brute-force single-threaded reference semantics for every collective:
/// plain loop nests over the per-rank send buffers, no message passing, no
/// algorithms.  Reductions fold in strict ascending rank order.  Returns one
/// expected recv buffer per rank; a buffer the collective leaves undefined or
/// untouched (EXSCAN rank 0, rooted recv away from the root, any count-0
/// call) comes back empty.
///
/// all_send[i] holds rank i's send bytes, sized send_elems(call, i) * extent.
std::vector<std::vector<std::byte>> sequential_oracle(
    const CollectiveCall& call,
    const std::vector<std::vector<std::byte>>& all_send);

}  // namespace pgtune

#endif  // PGTUNE_ORACLE_HPP
