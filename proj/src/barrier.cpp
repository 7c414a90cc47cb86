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

#include "pgtune/barrier.hpp"

namespace pgtune {

int barrier_rounds(int p) noexcept {
  int rounds = 0;
  for (int span = 1; span < p; span <<= 1) ++rounds;
  return rounds;
}

void dissemination_barrier(RankHandle& rh) {
  const int p = rh.nprocs();
  const int me = rh.rank();
  for (int span = 1; span < p; span <<= 1) {
    const int to = (me + span) % p;
    const int from = (me - span + p) % p;  // span < p inside the loop
    rh.send(to, {});
    (void)rh.recv(from);
  }
}

}  // namespace pgtune
