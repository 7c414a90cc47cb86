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

#include <algorithm>
#include <vector>

#include "pgtune/collectives.hpp"
#include "pgtune/cost_model.hpp"
#include "pgtune/error.hpp"

namespace pgtune {

namespace {

// Analytic replay of an algorithm's message pattern under the jitter-free
// cost model.  Mirrors the per-rank program order of the executable
// implementations: a send occupies the sender's injection port until the
// message lands, a receive advances the receiver to the arrival time, and a
// reduction combine costs gamma per byte on the combining rank.  Keep these
// loops in lockstep with the implementations in collectives.cpp.
struct Replay {
  const CostModel& model;
  std::vector<std::int64_t> clock;
  std::vector<std::int64_t> port;

  Replay(const CostModel& m, int p) : model(m), clock(p, 0), port(p, 0) {}

  std::int64_t send(int src, std::int64_t bytes) {
    const std::int64_t depart =
        std::max(clock[static_cast<std::size_t>(src)],
                 port[static_cast<std::size_t>(src)]);
    const std::int64_t arrival = depart + hop_cost_ns(model, bytes);
    port[static_cast<std::size_t>(src)] = arrival;
    return arrival;
  }

  void recv(int dst, std::int64_t arrival) {
    clock[static_cast<std::size_t>(dst)] =
        std::max(clock[static_cast<std::size_t>(dst)], arrival);
  }

  void charge(int rank, std::int64_t bytes) {
    clock[static_cast<std::size_t>(rank)] +=
        local_reduce_cost_ns(model, bytes);
  }

  std::int64_t makespan() const {
    return *std::max_element(clock.begin(), clock.end());
  }
};

void sched_bcast_binomial(Replay& rp, int p, int root, std::int64_t bytes) {
  if (bytes == 0) return;
  for (int mask = 1; mask < p; mask <<= 1)
    for (int vr = 0; vr < mask && vr + mask < p; ++vr) {
      const std::int64_t arr = rp.send((vr + root) % p, bytes);
      rp.recv((vr + mask + root) % p, arr);
    }
}

void sched_bcast_linear(Replay& rp, int p, int root, std::int64_t bytes) {
  if (bytes == 0) return;
  for (int d = 0; d < p; ++d) {
    if (d == root) continue;
    rp.recv(d, rp.send(root, bytes));
  }
}

void sched_gather_linear(Replay& rp, int p, int root, std::int64_t bytes) {
  if (bytes == 0) return;
  for (int src = 0; src < p; ++src) {
    if (src == root) continue;
    rp.recv(root, rp.send(src, bytes));
  }
}

void sched_gather_binomial(Replay& rp, int p, int root,
                           std::int64_t block_bytes) {
  if (block_bytes == 0) return;
  for (int mask = 1; mask < p; mask <<= 1)
    for (int vr = mask; vr < p; vr += 2 * mask) {
      const std::int64_t held = std::min<std::int64_t>(mask, p - vr);
      const std::int64_t arr = rp.send((vr + root) % p, held * block_bytes);
      rp.recv((vr - mask + root) % p, arr);
    }
}

void sched_rooted_v(Replay& rp, int p, int root, bool gather,
                    const std::vector<std::int64_t>& counts,
                    std::int64_t elem_bytes) {
  for (int peer = 0; peer < p; ++peer) {
    if (peer == root || counts[static_cast<std::size_t>(peer)] == 0) continue;
    const std::int64_t bytes =
        counts[static_cast<std::size_t>(peer)] * elem_bytes;
    if (gather)
      rp.recv(root, rp.send(peer, bytes));
    else
      rp.recv(peer, rp.send(root, bytes));
  }
}

void sched_scatter_linear(Replay& rp, int p, int root, std::int64_t bytes) {
  if (bytes == 0) return;
  for (int d = 0; d < p; ++d) {
    if (d == root) continue;
    rp.recv(d, rp.send(root, bytes));
  }
}

void sched_allgather_ring(Replay& rp, int p, std::int64_t bytes) {
  if (bytes == 0) return;
  std::vector<std::int64_t> arr(static_cast<std::size_t>(p));
  for (int r = 1; r < p; ++r) {
    for (int me = 0; me < p; ++me)
      arr[static_cast<std::size_t>(me)] = rp.send(me, bytes);
    for (int me = 0; me < p; ++me)
      rp.recv(me, arr[static_cast<std::size_t>((me - 1 + p) % p)]);
  }
}

void sched_allgatherv_linear(Replay& rp, int p,
                             const std::vector<std::int64_t>& counts,
                             std::int64_t elem_bytes) {
  // arr[src][d]: arrival of src's d-th send, addressed to (src + d) % p.
  std::vector<std::vector<std::int64_t>> arr(
      static_cast<std::size_t>(p),
      std::vector<std::int64_t>(static_cast<std::size_t>(p), 0));
  for (int me = 0; me < p; ++me) {
    const std::int64_t bytes =
        counts[static_cast<std::size_t>(me)] * elem_bytes;
    if (bytes == 0) continue;
    for (int d = 1; d < p; ++d)
      arr[static_cast<std::size_t>(me)][static_cast<std::size_t>(d)] =
          rp.send(me, bytes);
  }
  for (int me = 0; me < p; ++me)
    for (int d = 1; d < p; ++d) {
      const int src = (me - d + p) % p;
      if (counts[static_cast<std::size_t>(src)] == 0) continue;
      rp.recv(me, arr[static_cast<std::size_t>(src)][static_cast<std::size_t>(d)]);
    }
}

void sched_alltoall_pairwise(Replay& rp, int p, std::int64_t bytes) {
  if (bytes == 0) return;
  std::vector<std::int64_t> arr(static_cast<std::size_t>(p));
  for (int s = 1; s < p; ++s) {
    for (int me = 0; me < p; ++me)
      arr[static_cast<std::size_t>(me)] = rp.send(me, bytes);
    for (int me = 0; me < p; ++me)
      rp.recv(me, arr[static_cast<std::size_t>((me - s + p) % p)]);
  }
}

void sched_alltoallv_linear(Replay& rp, int p,
                            const std::vector<std::int64_t>& counts,
                            std::int64_t elem_bytes) {
  std::vector<std::int64_t> arr(static_cast<std::size_t>(p));
  for (int s = 1; s < p; ++s) {
    for (int me = 0; me < p; ++me) {
      const int dst = (me + s) % p;
      const std::int64_t bytes =
          counts[static_cast<std::size_t>(dst)] * elem_bytes;
      arr[static_cast<std::size_t>(me)] = bytes > 0 ? rp.send(me, bytes) : -1;
    }
    for (int me = 0; me < p; ++me) {
      if (counts[static_cast<std::size_t>(me)] == 0) continue;
      const int src = (me - s + p) % p;
      rp.recv(me, arr[static_cast<std::size_t>(src)]);
    }
  }
}

void sched_reduce_binomial(Replay& rp, int p, int root, std::int64_t bytes) {
  if (bytes == 0) return;
  for (int mask = 1; mask < p; mask <<= 1)
    for (int vr = mask; vr < p; vr += 2 * mask) {
      const std::int64_t arr = rp.send((vr + root) % p, bytes);
      const int parent = (vr - mask + root) % p;
      rp.recv(parent, arr);
      rp.charge(parent, bytes);
    }
}

void sched_allreduce_recursive_doubling(Replay& rp, int p,
                                        std::int64_t bytes) {
  if (bytes == 0 || p == 1) return;
  int pprime = 1;
  while (pprime * 2 <= p) pprime *= 2;
  const int r = p - pprime;
  for (int me = 0; me < 2 * r; me += 2) {
    rp.recv(me + 1, rp.send(me, bytes));
    rp.charge(me + 1, bytes);
  }
  std::vector<std::int64_t> arr(static_cast<std::size_t>(p));
  for (int mask = 1; mask < pprime; mask <<= 1) {
    for (int q = 0; q < pprime; ++q) {
      const int abs = q < r ? 2 * q + 1 : q + r;
      arr[static_cast<std::size_t>(abs)] = rp.send(abs, bytes);
    }
    for (int q = 0; q < pprime; ++q) {
      const int abs = q < r ? 2 * q + 1 : q + r;
      const int pq = q ^ mask;
      const int pabs = pq < r ? 2 * pq + 1 : pq + r;
      rp.recv(abs, arr[static_cast<std::size_t>(pabs)]);
      rp.charge(abs, bytes);
    }
  }
  for (int me = 0; me < 2 * r; me += 2) rp.recv(me, rp.send(me + 1, bytes));
}

void sched_scan_linear(Replay& rp, int p, std::int64_t bytes) {
  if (bytes == 0 || p == 1) return;
  std::int64_t arr = rp.send(0, bytes);
  for (int me = 1; me < p; ++me) {
    rp.recv(me, arr);
    rp.charge(me, bytes);
    if (me < p - 1) arr = rp.send(me, bytes);
  }
}

void sched_exscan_linear(Replay& rp, int p, std::int64_t bytes) {
  if (bytes == 0 || p == 1) return;
  std::int64_t arr = rp.send(0, bytes);
  for (int me = 1; me < p; ++me) {
    rp.recv(me, arr);
    if (me < p - 1) {
      rp.charge(me, bytes);
      arr = rp.send(me, bytes);
    }
  }
}

}  // namespace

std::int64_t algorithm_cost_schedule(const CollectiveCall& call,
                                     std::string_view variant,
                                     const CostModel& model) {
  validate_call(call);
  validate_algorithm(call.kind, variant);
  const int p = call.nprocs;
  const int E = extent(call.datatype);
  Replay rp(model, p);
  switch (call.kind) {
    case CollectiveKind::Bcast:
      variant == "binomial"
          ? sched_bcast_binomial(rp, p, call.root, call.count * E)
          : sched_bcast_linear(rp, p, call.root, call.count * E);
      break;
    case CollectiveKind::Gather:
      variant == "binomial"
          ? sched_gather_binomial(rp, p, call.root, call.count * E)
          : sched_gather_linear(rp, p, call.root, call.count * E);
      break;
    case CollectiveKind::Gatherv:
      sched_rooted_v(rp, p, call.root, true, call.counts, E);
      break;
    case CollectiveKind::Scatter:
      sched_scatter_linear(rp, p, call.root, call.count / p * E);
      break;
    case CollectiveKind::Scatterv:
      sched_rooted_v(rp, p, call.root, false, call.counts, E);
      break;
    case CollectiveKind::Allgather:
      sched_allgather_ring(rp, p, call.count * E);
      break;
    case CollectiveKind::Allgatherv:
      sched_allgatherv_linear(rp, p, call.counts, E);
      break;
    case CollectiveKind::Alltoall:
      sched_alltoall_pairwise(rp, p, call.count * E);
      break;
    case CollectiveKind::Alltoallv:
      sched_alltoallv_linear(rp, p, call.counts, E);
      break;
    case CollectiveKind::Reduce:
      sched_reduce_binomial(rp, p, call.root, call.count * E);
      break;
    case CollectiveKind::Allreduce:
      sched_allreduce_recursive_doubling(rp, p, call.count * E);
      break;
    case CollectiveKind::ReduceScatter:
      sched_reduce_binomial(rp, p, 0, call.count * E);
      sched_rooted_v(rp, p, 0, false, call.counts, E);
      break;
    case CollectiveKind::ReduceScatterBlock:
      sched_reduce_binomial(rp, p, 0, call.count * E);
      sched_scatter_linear(rp, p, 0, call.count / p * E);
      break;
    case CollectiveKind::Scan:
      sched_scan_linear(rp, p, call.count * E);
      break;
    case CollectiveKind::Exscan:
      sched_exscan_linear(rp, p, call.count * E);
      break;
  }
  return rp.makespan();
}

}  // namespace pgtune
