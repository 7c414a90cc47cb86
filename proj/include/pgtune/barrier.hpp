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

#ifndef PGTUNE_BARRIER_HPP
#define PGTUNE_BARRIER_HPP

#include "pgtune/transport.hpp"

namespace pgtune {

/// Rounds a dissemination barrier takes on p ranks: ceil(log2(p)).
int barrier_rounds(int p) noexcept;

/// Dissemination barrier.  In round k (k = 0..ceil(log2 p)-1) rank i sends a
/// zero-byte token to (i + 2^k) mod p and receives one from
/// (i - 2^k) mod p.  Tokens are never skipped, so a barrier always costs
/// p * ceil(log2 p) messages and pays per-message latency even though no
/// payload moves.  After the final round every rank is past the point where
/// all ranks have entered the barrier.
void dissemination_barrier(RankHandle& rh);

}  // namespace pgtune

#endif  // PGTUNE_BARRIER_HPP
