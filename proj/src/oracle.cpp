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

#include "pgtune/oracle.hpp"

#include <cstring>
#include <utility>

#include "pgtune/error.hpp"

namespace pgtune {

namespace {

// One rank's contribution as a byte range [elem_off, elem_off + elems).
std::span<const std::byte> block(const std::vector<std::byte>& buf,
                                 std::int64_t elem_off, std::int64_t elems,
                                 int E) {
  return std::span<const std::byte>(buf).subspan(
      static_cast<std::size_t>(elem_off * E),
      static_cast<std::size_t>(elems * E));
}

void put(std::vector<std::byte>& out, std::int64_t elem_off,
         std::span<const std::byte> src, int E) {
  if (!src.empty())
    std::memcpy(out.data() + elem_off * E, src.data(), src.size());
}

// Left-to-right fold over ranks [0, last]: ((s0 op s1) op s2) ... op s_last.
// Each step evaluates op(accumulator, next) with the accumulator as the
// first argument, the same association every chained implementation uses.
std::vector<std::byte> chain_fold(const CollectiveCall& call,
                                  const std::vector<std::vector<std::byte>>&
                                      all_send,
                                  int last) {
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  std::vector<std::byte> acc(block(all_send[0], 0, n, E).begin(),
                             block(all_send[0], 0, n, E).end());
  for (int r = 1; r <= last; ++r) {
    std::vector<std::byte> tmp(block(all_send[static_cast<std::size_t>(r)], 0,
                                     n, E)
                                   .begin(),
                               block(all_send[static_cast<std::size_t>(r)], 0,
                                     n, E)
                                   .end());
    apply_reduce(call.op, call.datatype, acc, tmp, n);
    acc = std::move(tmp);
  }
  return acc;
}

}  // namespace

std::vector<std::vector<std::byte>> sequential_oracle(
    const CollectiveCall& call,
    const std::vector<std::vector<std::byte>>& all_send) {
  validate_call(call);
  const int p = call.nprocs;
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  if (std::cmp_not_equal(all_send.size(), p))
    fail(Errc::SizeMismatch, "oracle needs one send buffer per rank");
  for (int r = 0; r < p; ++r)
    if (std::cmp_less(all_send[static_cast<std::size_t>(r)].size(),
                      send_elems(call, r) * E))
      fail(Errc::SizeMismatch, "oracle send buffer shorter than contribution");

  std::vector<std::vector<std::byte>> out(static_cast<std::size_t>(p));
  auto sized = [&](int r) {
    out[static_cast<std::size_t>(r)].resize(
        static_cast<std::size_t>(recv_elems(call, r) * E));
  };

  switch (call.kind) {
    case CollectiveKind::Bcast: {
      for (int r = 0; r < p; ++r) {
        sized(r);
        put(out[static_cast<std::size_t>(r)], 0,
            block(all_send[static_cast<std::size_t>(call.root)], 0, n, E), E);
      }
      break;
    }
    case CollectiveKind::Gather: {
      sized(call.root);
      for (int r = 0; r < p; ++r)
        put(out[static_cast<std::size_t>(call.root)],
            static_cast<std::int64_t>(r) * n,
            block(all_send[static_cast<std::size_t>(r)], 0, n, E), E);
      break;
    }
    case CollectiveKind::Gatherv: {
      sized(call.root);
      for (int r = 0; r < p; ++r)
        put(out[static_cast<std::size_t>(call.root)],
            call.displs[static_cast<std::size_t>(r)],
            block(all_send[static_cast<std::size_t>(r)], 0,
                  call.counts[static_cast<std::size_t>(r)], E),
            E);
      break;
    }
    case CollectiveKind::Scatter: {
      const std::int64_t b = n / p;
      for (int r = 0; r < p; ++r) {
        sized(r);
        put(out[static_cast<std::size_t>(r)], 0,
            block(all_send[static_cast<std::size_t>(call.root)],
                  static_cast<std::int64_t>(r) * b, b, E),
            E);
      }
      break;
    }
    case CollectiveKind::Scatterv: {
      for (int r = 0; r < p; ++r) {
        sized(r);
        put(out[static_cast<std::size_t>(r)], 0,
            block(all_send[static_cast<std::size_t>(call.root)],
                  call.displs[static_cast<std::size_t>(r)],
                  call.counts[static_cast<std::size_t>(r)], E),
            E);
      }
      break;
    }
    case CollectiveKind::Allgather: {
      for (int r = 0; r < p; ++r) {
        sized(r);
        for (int s = 0; s < p; ++s)
          put(out[static_cast<std::size_t>(r)],
              static_cast<std::int64_t>(s) * n,
              block(all_send[static_cast<std::size_t>(s)], 0, n, E), E);
      }
      break;
    }
    case CollectiveKind::Allgatherv: {
      for (int r = 0; r < p; ++r) {
        sized(r);
        for (int s = 0; s < p; ++s)
          put(out[static_cast<std::size_t>(r)],
              call.displs[static_cast<std::size_t>(s)],
              block(all_send[static_cast<std::size_t>(s)], 0,
                    call.counts[static_cast<std::size_t>(s)], E),
              E);
      }
      break;
    }
    case CollectiveKind::Alltoall: {
      for (int r = 0; r < p; ++r) {
        sized(r);
        for (int s = 0; s < p; ++s)
          put(out[static_cast<std::size_t>(r)],
              static_cast<std::int64_t>(s) * n,
              block(all_send[static_cast<std::size_t>(s)],
                    static_cast<std::int64_t>(r) * n, n, E),
              E);
      }
      break;
    }
    case CollectiveKind::Alltoallv: {
      for (int r = 0; r < p; ++r) {
        sized(r);
        const std::int64_t c = call.counts[static_cast<std::size_t>(r)];
        for (int s = 0; s < p; ++s)
          put(out[static_cast<std::size_t>(r)],
              static_cast<std::int64_t>(s) * c,
              block(all_send[static_cast<std::size_t>(s)],
                    call.displs[static_cast<std::size_t>(r)], c, E),
              E);
      }
      break;
    }
    case CollectiveKind::Reduce: {
      sized(call.root);
      std::vector<std::byte> acc = chain_fold(call, all_send, p - 1);
      put(out[static_cast<std::size_t>(call.root)], 0, acc, E);
      break;
    }
    case CollectiveKind::Allreduce: {
      std::vector<std::byte> acc = chain_fold(call, all_send, p - 1);
      for (int r = 0; r < p; ++r) {
        sized(r);
        put(out[static_cast<std::size_t>(r)], 0, acc, E);
      }
      break;
    }
    case CollectiveKind::ReduceScatter: {
      std::vector<std::byte> acc = chain_fold(call, all_send, p - 1);
      std::int64_t off = 0;
      for (int r = 0; r < p; ++r) {
        sized(r);
        const std::int64_t c = call.counts[static_cast<std::size_t>(r)];
        put(out[static_cast<std::size_t>(r)], 0,
            std::span<const std::byte>(acc).subspan(
                static_cast<std::size_t>(off * E),
                static_cast<std::size_t>(c * E)),
            E);
        off += c;
      }
      break;
    }
    case CollectiveKind::ReduceScatterBlock: {
      std::vector<std::byte> acc = chain_fold(call, all_send, p - 1);
      const std::int64_t b = n / p;
      for (int r = 0; r < p; ++r) {
        sized(r);
        put(out[static_cast<std::size_t>(r)], 0,
            std::span<const std::byte>(acc).subspan(
                static_cast<std::size_t>(r * b * E),
                static_cast<std::size_t>(b * E)),
            E);
      }
      break;
    }
    case CollectiveKind::Scan: {
      for (int r = 0; r < p; ++r) {
        sized(r);
        std::vector<std::byte> acc = chain_fold(call, all_send, r);
        put(out[static_cast<std::size_t>(r)], 0, acc, E);
      }
      break;
    }
    case CollectiveKind::Exscan: {
      // Rank 0 has no predecessors; its buffer stays untouched (left empty).
      for (int r = 1; r < p; ++r) {
        sized(r);
        std::vector<std::byte> acc = chain_fold(call, all_send, r - 1);
        put(out[static_cast<std::size_t>(r)], 0, acc, E);
      }
      break;
    }
  }
  return out;
}

}  // namespace pgtune
