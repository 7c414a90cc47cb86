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

#include "pgtune/collectives.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <sstream>
#include <utility>

#include "pgtune/error.hpp"

namespace pgtune {

namespace {

struct KindInfo {
  const char* name;
  const char* mpi_name;
  bool rooted;
  bool reduces;
  bool irregular;
  bool has_displs;
};

constexpr KindInfo kKinds[kCollectiveKindCount] = {
    {"BCAST", "MPI_Bcast", true, false, false, false},
    {"GATHER", "MPI_Gather", true, false, false, false},
    {"GATHERV", "MPI_Gatherv", true, false, true, true},
    {"SCATTER", "MPI_Scatter", true, false, false, false},
    {"SCATTERV", "MPI_Scatterv", true, false, true, true},
    {"ALLGATHER", "MPI_Allgather", false, false, false, false},
    {"ALLGATHERV", "MPI_Allgatherv", false, false, true, true},
    {"ALLTOALL", "MPI_Alltoall", false, false, false, false},
    {"ALLTOALLV", "MPI_Alltoallv", false, false, true, true},
    {"REDUCE", "MPI_Reduce", true, true, false, false},
    {"ALLREDUCE", "MPI_Allreduce", false, true, false, false},
    {"REDUCE_SCATTER", "MPI_Reduce_scatter", false, true, true, false},
    {"REDUCE_SCATTER_BLOCK", "MPI_Reduce_scatter_block", false, true, false,
     false},
    {"SCAN", "MPI_Scan", false, true, false, false},
    {"EXSCAN", "MPI_Exscan", false, true, false, false},
};

const KindInfo& info(CollectiveKind kind) {
  return kKinds[static_cast<int>(kind)];
}

}  // namespace

const char* collective_name(CollectiveKind kind) noexcept {
  return info(kind).name;
}

const char* collective_mpi_name(CollectiveKind kind) noexcept {
  return info(kind).mpi_name;
}

std::optional<CollectiveKind> parse_collective(std::string_view name) {
  std::string up;
  up.reserve(name.size());
  for (char c : name)
    up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up.rfind("MPI_", 0) == 0) up.erase(0, 4);
  for (int i = 0; i < kCollectiveKindCount; ++i)
    if (up == kKinds[i].name) return static_cast<CollectiveKind>(i);
  return std::nullopt;
}

bool kind_is_rooted(CollectiveKind kind) noexcept { return info(kind).rooted; }
bool kind_reduces(CollectiveKind kind) noexcept { return info(kind).reduces; }
bool kind_irregular(CollectiveKind kind) noexcept {
  return info(kind).irregular;
}
bool kind_has_displs(CollectiveKind kind) noexcept {
  return info(kind).has_displs;
}

std::int64_t sum_counts(const CollectiveCall& call) {
  std::int64_t total = 0;
  for (std::int64_t c : call.counts) total += c;
  return total;
}

void validate_call(const CollectiveCall& call) {
  const KindInfo& ki = info(call.kind);
  const int p = call.nprocs;
  if (p < 1) fail(Errc::SizeMismatch, "collective group must have >= 1 rank");
  if (call.count < 0) fail(Errc::SizeMismatch, "negative element count");
  if (ki.rooted && (call.root < 0 || call.root >= p)) {
    std::ostringstream os;
    os << "root " << call.root << " outside group of size " << p;
    fail(Errc::RootOutOfRange, os.str());
  }
  if (ki.reduces) require_op_datatype(call.op, call.datatype);
  if (ki.irregular) {
    if (std::cmp_not_equal(call.counts.size(), p))
      fail(Errc::SizeMismatch, "counts vector must have one entry per rank");
    for (std::int64_t c : call.counts)
      if (c < 0) fail(Errc::SizeMismatch, "negative per-rank count");
    if (ki.has_displs) {
      if (std::cmp_not_equal(call.displs.size(), p))
        fail(Errc::SizeMismatch, "displs vector must have one entry per rank");
      // This artifact works with packed layouts only: displacements are the
      // prefix sums of the counts.
      std::int64_t expect = 0;
      for (int i = 0; i < p; ++i) {
        if (call.displs[static_cast<std::size_t>(i)] != expect)
          fail(Errc::SizeMismatch,
               "displacements must be packed prefix sums of counts");
        expect += call.counts[static_cast<std::size_t>(i)];
      }
    }
    if (call.kind == CollectiveKind::ReduceScatter &&
        sum_counts(call) != call.count)
      fail(Errc::SizeMismatch,
           "REDUCE_SCATTER count must equal the sum of per-rank counts");
  }
  if ((call.kind == CollectiveKind::Scatter ||
       call.kind == CollectiveKind::ReduceScatterBlock) &&
      call.count % p != 0) {
    std::ostringstream os;
    os << collective_name(call.kind) << " total count " << call.count
       << " not divisible by " << p << " ranks";
    fail(Errc::SizeMismatch, os.str());
  }
}

std::int64_t send_elems(const CollectiveCall& call, int rank) {
  const int p = call.nprocs;
  switch (call.kind) {
    case CollectiveKind::Bcast:
      return rank == call.root ? call.count : 0;
    case CollectiveKind::Scatter:
      return rank == call.root ? call.count : 0;
    case CollectiveKind::Scatterv:
      return rank == call.root ? sum_counts(call) : 0;
    case CollectiveKind::Gather:
    case CollectiveKind::Allgather:
      return call.count;
    case CollectiveKind::Gatherv:
    case CollectiveKind::Allgatherv:
      return call.counts[static_cast<std::size_t>(rank)];
    case CollectiveKind::Alltoall:
      return call.count * p;
    case CollectiveKind::Alltoallv:
      return sum_counts(call);
    case CollectiveKind::Reduce:
    case CollectiveKind::Allreduce:
    case CollectiveKind::ReduceScatter:
    case CollectiveKind::ReduceScatterBlock:
    case CollectiveKind::Scan:
    case CollectiveKind::Exscan:
      return call.count;
  }
  return 0;
}

std::int64_t recv_elems(const CollectiveCall& call, int rank) {
  const int p = call.nprocs;
  switch (call.kind) {
    case CollectiveKind::Bcast:
      return call.count;
    case CollectiveKind::Gather:
      return rank == call.root ? call.count * p : 0;
    case CollectiveKind::Gatherv:
      return rank == call.root ? sum_counts(call) : 0;
    case CollectiveKind::Scatter:
      return call.count / p;
    case CollectiveKind::Scatterv:
      return call.counts[static_cast<std::size_t>(rank)];
    case CollectiveKind::Allgather:
      return call.count * p;
    case CollectiveKind::Allgatherv:
      return sum_counts(call);
    case CollectiveKind::Alltoall:
      return call.count * p;
    case CollectiveKind::Alltoallv:
      return call.counts[static_cast<std::size_t>(rank)] * p;
    case CollectiveKind::Reduce:
      return rank == call.root ? call.count : 0;
    case CollectiveKind::Allreduce:
    case CollectiveKind::Scan:
    case CollectiveKind::Exscan:
      return call.count;
    case CollectiveKind::ReduceScatter:
      return call.counts[static_cast<std::size_t>(rank)];
    case CollectiveKind::ReduceScatterBlock:
      return call.count / p;
  }
  return 0;
}

AlgorithmTable default_algorithms() {
  AlgorithmTable t;
  t.variant(CollectiveKind::Bcast) = "linear";
  t.variant(CollectiveKind::Gather) = "binomial";
  t.variant(CollectiveKind::Gatherv) = "linear";
  t.variant(CollectiveKind::Scatter) = "linear";
  t.variant(CollectiveKind::Scatterv) = "linear";
  t.variant(CollectiveKind::Allgather) = "ring";
  t.variant(CollectiveKind::Allgatherv) = "linear";
  t.variant(CollectiveKind::Alltoall) = "pairwise";
  t.variant(CollectiveKind::Alltoallv) = "linear";
  t.variant(CollectiveKind::Reduce) = "binomial";
  t.variant(CollectiveKind::Allreduce) = "recursive_doubling";
  t.variant(CollectiveKind::ReduceScatter) = "reduce_then_scatterv";
  t.variant(CollectiveKind::ReduceScatterBlock) = "reduce_then_scatter";
  t.variant(CollectiveKind::Scan) = "linear";
  t.variant(CollectiveKind::Exscan) = "linear";
  return t;
}

const std::vector<std::string>& algorithm_variants(CollectiveKind kind) {
  static const std::vector<std::string> tables[kCollectiveKindCount] = {
      /*Bcast*/ {"binomial", "linear"},
      /*Gather*/ {"linear", "binomial"},
      /*Gatherv*/ {"linear"},
      /*Scatter*/ {"linear"},
      /*Scatterv*/ {"linear"},
      /*Allgather*/ {"ring"},
      /*Allgatherv*/ {"linear"},
      /*Alltoall*/ {"pairwise"},
      /*Alltoallv*/ {"linear"},
      /*Reduce*/ {"binomial"},
      /*Allreduce*/ {"recursive_doubling"},
      /*ReduceScatter*/ {"reduce_then_scatterv"},
      /*ReduceScatterBlock*/ {"reduce_then_scatter"},
      /*Scan*/ {"linear"},
      /*Exscan*/ {"linear"},
  };
  return tables[static_cast<int>(kind)];
}

void validate_algorithm(CollectiveKind kind, std::string_view variant) {
  for (const std::string& v : algorithm_variants(kind))
    if (variant == v) return;
  std::ostringstream os;
  os << "no algorithm '" << variant << "' for " << collective_name(kind)
     << "; known:";
  for (const std::string& v : algorithm_variants(kind)) os << " " << v;
  fail(Errc::ConfigError, os.str());
}

// ---------------------------------------------------------------------------
// Algorithm implementations.  Shared conventions: program order per rank is
// sends-before-receives inside a round; zero-byte payloads are never sent;
// local copies are free; every reduction combine is charged at gamma per
// byte.  The cost schedules in another translation unit replay these loop
// structures step for step — keep them in sync.
// ---------------------------------------------------------------------------
namespace {

std::span<const std::byte> csub(std::span<const std::byte> buf,
                                std::int64_t elem_off, std::int64_t elems,
                                int E) {
  return buf.subspan(static_cast<std::size_t>(elem_off * E),
                     static_cast<std::size_t>(elems * E));
}

std::span<std::byte> wsub(std::span<std::byte> buf, std::int64_t elem_off,
                          std::int64_t elems, int E) {
  return buf.subspan(static_cast<std::size_t>(elem_off * E),
                     static_cast<std::size_t>(elems * E));
}

void copy_bytes(std::span<std::byte> dst, std::span<const std::byte> src) {
  if (!src.empty()) std::memcpy(dst.data(), src.data(), src.size());
}

// Receives from src and checks the payload length against the algorithm's
// expectation; a mismatch means the two ranks disagree about the schedule.
std::vector<std::byte> recv_exact(RankHandle& rh, int src,
                                  std::int64_t bytes) {
  std::vector<std::byte> got = rh.recv(src);
  if (std::cmp_not_equal(got.size(), bytes)) {
    std::ostringstream os;
    os << "rank " << rh.rank() << " expected " << bytes << " bytes from "
       << src << ", got " << got.size();
    fail(Errc::InvariantViolation, os.str());
  }
  return got;
}

void combine(RankHandle& rh, const CollectiveCall& call,
             std::span<const std::byte> in, std::span<std::byte> inout,
             std::int64_t count) {
  apply_reduce(call.op, call.datatype, in, inout, count);
  rh.charge_ns(local_reduce_cost_ns(rh.model(), count * extent(call.datatype)));
}

void bcast_binomial(RankHandle& rh, const CollectiveCall& call,
                    std::span<const std::byte> send,
                    std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank(), root = call.root;
  const int E = extent(call.datatype);
  const std::int64_t bytes = call.count * E;
  if (bytes == 0) return;
  const int vr = (me - root + p) % p;
  if (me == root && !recv.empty()) copy_bytes(recv, csub(send, 0, call.count, E));
  std::span<const std::byte> data =
      me == root ? csub(send, 0, call.count, E)
                 : std::span<const std::byte>(recv.data(),
                                              static_cast<std::size_t>(bytes));
  for (int mask = 1; mask < p; mask <<= 1) {
    if (vr >= mask && vr < 2 * mask) {
      const int parent = (vr - mask + root) % p;
      std::vector<std::byte> got = recv_exact(rh, parent, bytes);
      copy_bytes(wsub(recv, 0, call.count, E), got);
    } else if (vr < mask && vr + mask < p) {
      const int child = (vr + mask + root) % p;
      rh.send(child, data);
    }
  }
}

void bcast_linear(RankHandle& rh, const CollectiveCall& call,
                  std::span<const std::byte> send, std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank(), root = call.root;
  const int E = extent(call.datatype);
  const std::int64_t bytes = call.count * E;
  if (bytes == 0) return;
  if (me == root) {
    for (int d = 0; d < p; ++d)
      if (d != root) rh.send(d, csub(send, 0, call.count, E));
    if (!recv.empty()) copy_bytes(recv, csub(send, 0, call.count, E));
  } else {
    std::vector<std::byte> got = recv_exact(rh, root, bytes);
    copy_bytes(wsub(recv, 0, call.count, E), got);
  }
}

void gather_linear(RankHandle& rh, const CollectiveCall& call,
                   std::span<const std::byte> send,
                   std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank(), root = call.root;
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  if (n == 0) return;
  if (me == root) {
    copy_bytes(wsub(recv, static_cast<std::int64_t>(me) * n, n, E),
               csub(send, 0, n, E));
    for (int src = 0; src < p; ++src) {
      if (src == root) continue;
      std::vector<std::byte> got = recv_exact(rh, src, n * E);
      copy_bytes(wsub(recv, static_cast<std::int64_t>(src) * n, n, E), got);
    }
  } else {
    rh.send(root, csub(send, 0, n, E));
  }
}

void gather_binomial(RankHandle& rh, const CollectiveCall& call,
                     std::span<const std::byte> send,
                     std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank(), root = call.root;
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  if (n == 0) return;
  const int vr = (me - root + p) % p;
  // Segment holds blocks for relative ranks [vr, vr+held), own block first.
  std::vector<std::byte> seg(static_cast<std::size_t>(n * E));
  copy_bytes(seg, csub(send, 0, n, E));
  std::int64_t held = 1;
  for (int mask = 1; mask < p; mask <<= 1) {
    if (vr & mask) {
      const int parent = (vr - mask + root) % p;
      rh.send(parent, seg);
      break;  // this rank's part is done
    }
    if (vr + mask < p) {
      const std::int64_t child_held = std::min<std::int64_t>(mask, p - (vr + mask));
      const int child = (vr + mask + root) % p;
      std::vector<std::byte> got = recv_exact(rh, child, child_held * n * E);
      seg.resize(static_cast<std::size_t>((held + child_held) * n * E));
      std::memcpy(seg.data() + held * n * E, got.data(), got.size());
      held += child_held;
    }
  }
  if (me == root) {
    // Segment is ordered by relative rank; rotate into absolute positions.
    for (int a = 0; a < p; ++a) {
      const std::int64_t rel = (a - root + p) % p;
      copy_bytes(wsub(recv, static_cast<std::int64_t>(a) * n, n, E),
                 std::span<const std::byte>(seg).subspan(
                     static_cast<std::size_t>(rel * n * E),
                     static_cast<std::size_t>(n * E)));
    }
  }
}

void gatherv_linear(RankHandle& rh, const CollectiveCall& call,
                    std::span<const std::byte> send,
                    std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank(), root = call.root;
  const int E = extent(call.datatype);
  const auto& counts = call.counts;
  const auto& displs = call.displs;
  if (me == root) {
    if (counts[static_cast<std::size_t>(me)] > 0)
      copy_bytes(wsub(recv, displs[static_cast<std::size_t>(me)],
                      counts[static_cast<std::size_t>(me)], E),
                 csub(send, 0, counts[static_cast<std::size_t>(me)], E));
    for (int src = 0; src < p; ++src) {
      if (src == root || counts[static_cast<std::size_t>(src)] == 0) continue;
      std::vector<std::byte> got =
          recv_exact(rh, src, counts[static_cast<std::size_t>(src)] * E);
      copy_bytes(wsub(recv, displs[static_cast<std::size_t>(src)],
                      counts[static_cast<std::size_t>(src)], E),
                 got);
    }
  } else if (counts[static_cast<std::size_t>(me)] > 0) {
    rh.send(root, csub(send, 0, counts[static_cast<std::size_t>(me)], E));
  }
}

void scatter_linear(RankHandle& rh, const CollectiveCall& call,
                    std::span<const std::byte> send,
                    std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank(), root = call.root;
  const int E = extent(call.datatype);
  const std::int64_t b = call.count / p;
  if (b == 0) return;
  if (me == root) {
    for (int d = 0; d < p; ++d) {
      if (d == root) continue;
      rh.send(d, csub(send, static_cast<std::int64_t>(d) * b, b, E));
    }
    copy_bytes(wsub(recv, 0, b, E),
               csub(send, static_cast<std::int64_t>(root) * b, b, E));
  } else {
    std::vector<std::byte> got = recv_exact(rh, root, b * E);
    copy_bytes(wsub(recv, 0, b, E), got);
  }
}

void scatterv_linear(RankHandle& rh, const CollectiveCall& call,
                     std::span<const std::byte> send,
                     std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank(), root = call.root;
  const int E = extent(call.datatype);
  const auto& counts = call.counts;
  const auto& displs = call.displs;
  if (me == root) {
    for (int d = 0; d < p; ++d) {
      if (d == root || counts[static_cast<std::size_t>(d)] == 0) continue;
      rh.send(d, csub(send, displs[static_cast<std::size_t>(d)],
                      counts[static_cast<std::size_t>(d)], E));
    }
    if (counts[static_cast<std::size_t>(root)] > 0)
      copy_bytes(wsub(recv, 0, counts[static_cast<std::size_t>(root)], E),
                 csub(send, displs[static_cast<std::size_t>(root)],
                      counts[static_cast<std::size_t>(root)], E));
  } else if (counts[static_cast<std::size_t>(me)] > 0) {
    std::vector<std::byte> got =
        recv_exact(rh, root, counts[static_cast<std::size_t>(me)] * E);
    copy_bytes(wsub(recv, 0, counts[static_cast<std::size_t>(me)], E), got);
  }
}

void allgather_ring(RankHandle& rh, const CollectiveCall& call,
                    std::span<const std::byte> send,
                    std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank();
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  if (n == 0) return;
  copy_bytes(wsub(recv, static_cast<std::int64_t>(me) * n, n, E),
             csub(send, 0, n, E));
  const int right = (me + 1) % p;
  const int left = (me - 1 + p) % p;
  for (int r = 1; r < p; ++r) {
    // Pass along the block received last round (own block in round 1).
    const std::int64_t out_block = (me - (r - 1) + p * r) % p;
    const std::int64_t in_block = (me - r + p * r) % p;
    rh.send(right, csub(std::span<const std::byte>(recv.data(), recv.size()),
                        out_block * n, n, E));
    std::vector<std::byte> got = recv_exact(rh, left, n * E);
    copy_bytes(wsub(recv, in_block * n, n, E), got);
  }
}

void allgatherv_linear(RankHandle& rh, const CollectiveCall& call,
                       std::span<const std::byte> send,
                       std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank();
  const int E = extent(call.datatype);
  const auto& counts = call.counts;
  const auto& displs = call.displs;
  const std::int64_t mine = counts[static_cast<std::size_t>(me)];
  if (mine > 0)
    copy_bytes(wsub(recv, displs[static_cast<std::size_t>(me)], mine, E),
               csub(send, 0, mine, E));
  for (int d = 1; d < p; ++d) {
    const int dst = (me + d) % p;
    if (mine > 0) rh.send(dst, csub(send, 0, mine, E));
  }
  for (int d = 1; d < p; ++d) {
    const int src = (me - d + p) % p;
    const std::int64_t c = counts[static_cast<std::size_t>(src)];
    if (c == 0) continue;
    std::vector<std::byte> got = recv_exact(rh, src, c * E);
    copy_bytes(wsub(recv, displs[static_cast<std::size_t>(src)], c, E), got);
  }
}

void alltoall_pairwise(RankHandle& rh, const CollectiveCall& call,
                       std::span<const std::byte> send,
                       std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank();
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  if (n == 0) return;
  copy_bytes(wsub(recv, static_cast<std::int64_t>(me) * n, n, E),
             csub(send, static_cast<std::int64_t>(me) * n, n, E));
  for (int s = 1; s < p; ++s) {
    const int dst = (me + s) % p;
    const int src = (me - s + p) % p;
    rh.send(dst, csub(send, static_cast<std::int64_t>(dst) * n, n, E));
    std::vector<std::byte> got = recv_exact(rh, src, n * E);
    copy_bytes(wsub(recv, static_cast<std::int64_t>(src) * n, n, E), got);
  }
}

// Column-uniform irregular all-to-all: every rank sends counts[j] elements to
// rank j (from its send buffer at displs[j]); consequently rank i receives
// counts[i] elements from each peer, placed at j*counts[i] for source j.
void alltoallv_linear(RankHandle& rh, const CollectiveCall& call,
                      std::span<const std::byte> send,
                      std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank();
  const int E = extent(call.datatype);
  const auto& counts = call.counts;
  const auto& displs = call.displs;
  const std::int64_t mine = counts[static_cast<std::size_t>(me)];
  if (mine > 0)
    copy_bytes(wsub(recv, static_cast<std::int64_t>(me) * mine, mine, E),
               csub(send, displs[static_cast<std::size_t>(me)], mine, E));
  for (int s = 1; s < p; ++s) {
    const int dst = (me + s) % p;
    const int src = (me - s + p) % p;
    const std::int64_t dc = counts[static_cast<std::size_t>(dst)];
    if (dc > 0)
      rh.send(dst, csub(send, displs[static_cast<std::size_t>(dst)], dc, E));
    if (mine > 0) {
      std::vector<std::byte> got = recv_exact(rh, src, mine * E);
      copy_bytes(wsub(recv, static_cast<std::int64_t>(src) * mine, mine, E),
                 got);
    }
  }
}

void reduce_binomial(RankHandle& rh, const CollectiveCall& call,
                     std::span<const std::byte> send,
                     std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank(), root = call.root;
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  if (n == 0) return;
  const int vr = (me - root + p) % p;
  std::vector<std::byte> acc(csub(send, 0, n, E).begin(),
                             csub(send, 0, n, E).end());
  for (int mask = 1; mask < p; mask <<= 1) {
    if (vr & mask) {
      const int parent = (vr - mask + root) % p;
      rh.send(parent, acc);
      break;
    }
    if (vr + mask < p) {
      const int child = (vr + mask + root) % p;
      std::vector<std::byte> got = recv_exact(rh, child, n * E);
      combine(rh, call, got, acc, n);
    }
  }
  if (me == root) copy_bytes(wsub(recv, 0, n, E), acc);
}

void allreduce_recursive_doubling(RankHandle& rh, const CollectiveCall& call,
                                  std::span<const std::byte> send,
                                  std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank();
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  if (n == 0) return;
  std::vector<std::byte> acc(csub(send, 0, n, E).begin(),
                             csub(send, 0, n, E).end());
  if (p > 1) {
    int pprime = 1;
    while (pprime * 2 <= p) pprime *= 2;
    const int r = p - pprime;
    // Fold the surplus ranks into their odd neighbors so a power of two
    // remains.
    if (me < 2 * r) {
      if (me % 2 == 0) {
        rh.send(me + 1, acc);
      } else {
        std::vector<std::byte> got = recv_exact(rh, me - 1, n * E);
        combine(rh, call, got, acc, n);  // lower rank's data folds in first
      }
    }
    const bool participant = me >= 2 * r || me % 2 == 1;
    if (participant) {
      const int q = me < 2 * r ? me / 2 : me - r;
      for (int mask = 1; mask < pprime; mask <<= 1) {
        const int pq = q ^ mask;
        const int pabs = pq < r ? 2 * pq + 1 : pq + r;
        rh.send(pabs, acc);
        std::vector<std::byte> got = recv_exact(rh, pabs, n * E);
        // Both sides compute op(lower-rank vector, higher-rank vector) so
        // every participant carries bit-identical state.
        if (me < pabs) {
          apply_reduce(call.op, call.datatype, acc, got, n);
          acc = std::move(got);
          rh.charge_ns(local_reduce_cost_ns(rh.model(), n * E));
        } else {
          combine(rh, call, got, acc, n);
        }
      }
    }
    if (me < 2 * r) {
      if (me % 2 == 1) {
        rh.send(me - 1, acc);
      } else {
        acc = recv_exact(rh, me + 1, n * E);
      }
    }
  }
  copy_bytes(wsub(recv, 0, n, E), acc);
}

void scan_linear(RankHandle& rh, const CollectiveCall& call,
                 std::span<const std::byte> send, std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank();
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  if (n == 0) return;
  copy_bytes(wsub(recv, 0, n, E), csub(send, 0, n, E));
  if (me > 0) {
    std::vector<std::byte> prefix = recv_exact(rh, me - 1, n * E);
    combine(rh, call, prefix, wsub(recv, 0, n, E), n);
  }
  if (me < p - 1)
    rh.send(me + 1, std::span<const std::byte>(recv.data(),
                                               static_cast<std::size_t>(n * E)));
}

void exscan_linear(RankHandle& rh, const CollectiveCall& call,
                   std::span<const std::byte> send,
                   std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank();
  const int E = extent(call.datatype);
  const std::int64_t n = call.count;
  if (n == 0 || p == 1) return;
  if (me == 0) {
    rh.send(1, csub(send, 0, n, E));
    return;  // rank 0's buffer stays untouched
  }
  std::vector<std::byte> prefix = recv_exact(rh, me - 1, n * E);
  copy_bytes(wsub(recv, 0, n, E), prefix);
  if (me < p - 1) {
    std::vector<std::byte> fwd(csub(send, 0, n, E).begin(),
                               csub(send, 0, n, E).end());
    combine(rh, call, prefix, fwd, n);
    rh.send(me + 1, fwd);
  }
}

std::vector<std::int64_t> prefix_displs(const std::vector<std::int64_t>& counts) {
  std::vector<std::int64_t> d(counts.size(), 0);
  for (std::size_t i = 1; i < counts.size(); ++i)
    d[i] = d[i - 1] + counts[i - 1];
  return d;
}

void reduce_then_scatterv(RankHandle& rh, const CollectiveCall& call,
                          std::span<const std::byte> send,
                          std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank();
  const int E = extent(call.datatype);
  CollectiveCall rcall;
  rcall.kind = CollectiveKind::Reduce;
  rcall.nprocs = p;
  rcall.count = call.count;
  rcall.datatype = call.datatype;
  rcall.op = call.op;
  rcall.root = 0;
  std::vector<std::byte> reduced(
      me == 0 ? static_cast<std::size_t>(call.count * E) : 0);
  execute_collective(rh, rcall, "binomial", send, reduced);

  CollectiveCall scall;
  scall.kind = CollectiveKind::Scatterv;
  scall.nprocs = p;
  scall.datatype = call.datatype;
  scall.root = 0;
  scall.counts = call.counts;
  scall.displs = prefix_displs(call.counts);
  execute_collective(rh, scall, "linear", reduced, recv);
}

void reduce_then_scatter(RankHandle& rh, const CollectiveCall& call,
                         std::span<const std::byte> send,
                         std::span<std::byte> recv) {
  const int p = call.nprocs, me = rh.rank();
  const int E = extent(call.datatype);
  CollectiveCall rcall;
  rcall.kind = CollectiveKind::Reduce;
  rcall.nprocs = p;
  rcall.count = call.count;
  rcall.datatype = call.datatype;
  rcall.op = call.op;
  rcall.root = 0;
  std::vector<std::byte> reduced(
      me == 0 ? static_cast<std::size_t>(call.count * E) : 0);
  execute_collective(rh, rcall, "binomial", send, reduced);

  CollectiveCall scall;
  scall.kind = CollectiveKind::Scatter;
  scall.nprocs = p;
  scall.count = call.count;
  scall.datatype = call.datatype;
  scall.root = 0;
  execute_collective(rh, scall, "linear", reduced, recv);
}

void check_buffer_sizes(const CollectiveCall& call, int rank,
                        std::span<const std::byte> send,
                        std::span<std::byte> recv) {
  const int E = extent(call.datatype);
  const std::int64_t need_send = send_elems(call, rank) * E;
  std::int64_t need_recv = recv_elems(call, rank) * E;
  if (std::cmp_less(send.size(), need_send)) {
    std::ostringstream os;
    os << collective_name(call.kind) << " rank " << rank << " send buffer "
       << send.size() << " B < required " << need_send << " B";
    fail(Errc::SizeMismatch, os.str());
  }
  if (call.kind == CollectiveKind::Bcast && rank == call.root && recv.empty())
    need_recv = 0;  // the root may opt out of receiving its own data
  if (std::cmp_less(recv.size(), need_recv)) {
    std::ostringstream os;
    os << collective_name(call.kind) << " rank " << rank << " recv buffer "
       << recv.size() << " B < required " << need_recv << " B";
    fail(Errc::SizeMismatch, os.str());
  }
}

}  // namespace

void execute_collective(RankHandle& rh, const CollectiveCall& call,
                        std::string_view variant,
                        std::span<const std::byte> send,
                        std::span<std::byte> recv) {
  validate_call(call);
  validate_algorithm(call.kind, variant);
  if (call.nprocs != rh.nprocs())
    fail(Errc::SizeMismatch, "call group size differs from transport group");
  check_buffer_sizes(call, rh.rank(), send, recv);

  switch (call.kind) {
    case CollectiveKind::Bcast:
      variant == "binomial" ? bcast_binomial(rh, call, send, recv)
                            : bcast_linear(rh, call, send, recv);
      return;
    case CollectiveKind::Gather:
      variant == "binomial" ? gather_binomial(rh, call, send, recv)
                            : gather_linear(rh, call, send, recv);
      return;
    case CollectiveKind::Gatherv:
      gatherv_linear(rh, call, send, recv);
      return;
    case CollectiveKind::Scatter:
      scatter_linear(rh, call, send, recv);
      return;
    case CollectiveKind::Scatterv:
      scatterv_linear(rh, call, send, recv);
      return;
    case CollectiveKind::Allgather:
      allgather_ring(rh, call, send, recv);
      return;
    case CollectiveKind::Allgatherv:
      allgatherv_linear(rh, call, send, recv);
      return;
    case CollectiveKind::Alltoall:
      alltoall_pairwise(rh, call, send, recv);
      return;
    case CollectiveKind::Alltoallv:
      alltoallv_linear(rh, call, send, recv);
      return;
    case CollectiveKind::Reduce:
      reduce_binomial(rh, call, send, recv);
      return;
    case CollectiveKind::Allreduce:
      allreduce_recursive_doubling(rh, call, send, recv);
      return;
    case CollectiveKind::ReduceScatter:
      reduce_then_scatterv(rh, call, send, recv);
      return;
    case CollectiveKind::ReduceScatterBlock:
      reduce_then_scatter(rh, call, send, recv);
      return;
    case CollectiveKind::Scan:
      scan_linear(rh, call, send, recv);
      return;
    case CollectiveKind::Exscan:
      exscan_linear(rh, call, send, recv);
      return;
  }
}

}  // namespace pgtune
