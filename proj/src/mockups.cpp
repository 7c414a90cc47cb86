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

#include "pgtune/mockups.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <utility>

#include "pgtune/error.hpp"

namespace pgtune {

namespace {

struct MockupInfo {
  const char* name;
  CollectiveKind lhs;
};

constexpr MockupInfo kMockups[kMockupCount] = {
    {"allgather_as_gather_bcast", CollectiveKind::Allgather},
    {"allgather_as_alltoall", CollectiveKind::Allgather},
    {"allgather_as_allreduce", CollectiveKind::Allgather},
    {"allgather_as_allgatherv", CollectiveKind::Allgather},
    {"allreduce_as_reduce_bcast", CollectiveKind::Allreduce},
    {"allreduce_as_reducescatterblock_allgather", CollectiveKind::Allreduce},
    {"allreduce_as_reducescatter_allgatherv", CollectiveKind::Allreduce},
    {"alltoall_as_alltoallv", CollectiveKind::Alltoall},
    {"bcast_as_allgatherv", CollectiveKind::Bcast},
    {"bcast_as_scatter_allgather", CollectiveKind::Bcast},
    {"gather_as_allgather", CollectiveKind::Gather},
    {"gather_as_gatherv", CollectiveKind::Gather},
    {"gather_as_reduce", CollectiveKind::Gather},
    {"reduce_as_allreduce", CollectiveKind::Reduce},
    {"reduce_as_reducescatterblock_gather", CollectiveKind::Reduce},
    {"reduce_as_reducescatter_gatherv", CollectiveKind::Reduce},
    {"reducescatterblock_as_reduce_scatter",
     CollectiveKind::ReduceScatterBlock},
    {"reducescatterblock_as_reducescatter",
     CollectiveKind::ReduceScatterBlock},
    {"reducescatterblock_as_allreduce", CollectiveKind::ReduceScatterBlock},
    {"scan_as_exscan_reducelocal", CollectiveKind::Scan},
    {"scatter_as_bcast", CollectiveKind::Scatter},
    {"scatter_as_scatterv", CollectiveKind::Scatter},
};

}  // namespace

const char* mockup_name(MockupId id) noexcept {
  return kMockups[static_cast<int>(id)].name;
}

std::optional<MockupId> parse_mockup(std::string_view name) {
  for (int i = 0; i < kMockupCount; ++i)
    if (name == kMockups[i].name) return static_cast<MockupId>(i);
  return std::nullopt;
}

CollectiveKind mockup_lhs(MockupId id) noexcept {
  return kMockups[static_cast<int>(id)].lhs;
}

const std::vector<MockupId>& mockups_of(CollectiveKind kind) {
  static const auto tables = [] {
    std::vector<std::vector<MockupId>> t(kCollectiveKindCount);
    for (int i = 0; i < kMockupCount; ++i) {
      const auto id = static_cast<MockupId>(i);
      t[static_cast<int>(mockup_lhs(id))].push_back(id);
    }
    return t;
  }();
  return tables[static_cast<int>(kind)];
}

std::int64_t pad_count(std::int64_t n, int p) {
  return n + (p - n % p) % p;
}

std::vector<std::int64_t> chunk_counts(std::int64_t n, int p,
                                       std::int64_t C) {
  if (C < 1) fail(Errc::ConfigError, "chunk size must be at least 1");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(p), 0);
  std::int64_t off = 0;
  int r = 0;
  while (off < n) {
    const std::int64_t take = std::min(C, n - off);
    counts[static_cast<std::size_t>(r)] += take;
    off += take;
    r = (r + 1) % p;
  }
  return counts;
}

namespace {

void require_chunk_size(const MockupConfig& cfg, std::int64_t n) {
  const std::int64_t hi = std::max<std::int64_t>(n, 1);
  if (cfg.chunk_size_C < 1 || cfg.chunk_size_C > hi) {
    std::ostringstream os;
    os << "chunk size " << cfg.chunk_size_C << " outside [1, " << hi << "]";
    fail(Errc::ConfigError, os.str());
  }
}

std::int64_t chunk_bound(std::int64_t n, int p, std::int64_t C) {
  return std::max(n / p + C, C);
}

}  // namespace

MemoryRequirement extra_memory_required(MockupId id,
                                        const CollectiveCall& call,
                                        const MockupConfig& cfg) {
  if (mockup_lhs(id) != call.kind) {
    std::ostringstream os;
    os << mockup_name(id) << " replaces " << collective_name(mockup_lhs(id))
       << ", not " << collective_name(call.kind);
    fail(Errc::KindMismatch, os.str());
  }
  validate_call(call);
  const int p = call.nprocs;
  const std::int64_t E = extent(call.datatype);
  const std::int64_t n = call.count;
  const std::int64_t m = pad_count(n, p);
  MemoryRequirement req;
  switch (id) {
    case MockupId::AllgatherAsGatherBcast:
    case MockupId::AllreduceAsReduceBcast:
    case MockupId::ScanAsExscanReducelocal:
      break;  // compose entirely within the caller's buffers
    case MockupId::AllgatherAsAlltoall:
    case MockupId::AllgatherAsAllreduce:
      req.msg_bytes = p * n * E;  // replicated / zero-positioned send copy
      break;
    case MockupId::AllgatherAsAllgatherv:
    case MockupId::AlltoallAsAlltoallv:
    case MockupId::GatherAsGatherv:
    case MockupId::ScatterAsScatterv:
      req.int_elems = 2 * p;  // uniform counts + displacements
      break;
    case MockupId::AllreduceAsReducescatterblockAllgather:
    case MockupId::BcastAsScatterAllgather:
    case MockupId::ReduceAsReducescatterblockGather:
      req.msg_bytes = m * E + m / p * E;  // padded vector + one block
      break;
    case MockupId::AllreduceAsReducescatterAllgatherv:
    case MockupId::ReduceAsReducescatterGatherv:
      require_chunk_size(cfg, n);
      req.msg_bytes = chunk_bound(n, p, cfg.chunk_size_C) * E;
      req.int_elems = 2 * p;  // chunked counts + displacements
      break;
    case MockupId::BcastAsAllgatherv:
      req.msg_bytes = p > 1 ? n * E : 0;  // landing buffer away from the root
      req.int_elems = 2 * p;
      break;
    case MockupId::GatherAsAllgather:
      req.msg_bytes = p > 1 ? p * n * E : 0;  // discarded away from the root
      break;
    case MockupId::GatherAsReduce:
      req.msg_bytes = p * n * E;  // zero-filled positioned contribution
      break;
    case MockupId::ReduceAsAllreduce:
      req.msg_bytes = p > 1 ? n * E : 0;  // result landing away from the root
      break;
    case MockupId::ReducescatterblockAsReduceScatter:
      req.msg_bytes = n * E;  // full reduced vector, on the staging root
      break;
    case MockupId::ReducescatterblockAsReducescatter:
      req.int_elems = p;  // uniform counts
      break;
    case MockupId::ReducescatterblockAsAllreduce:
      req.msg_bytes = n * E;  // full reduced vector on every rank
      break;
    case MockupId::ScatterAsBcast:
      req.msg_bytes = p > 1 ? n * E : 0;  // full vector away from the root
      break;
  }
  return req;
}

ScratchBuffers::ScratchBuffers(std::size_t msg_capacity_bytes,
                               std::size_t int_capacity_bytes)
    : msg_(msg_capacity_bytes),
      ints_(int_capacity_bytes / sizeof(std::int64_t)) {}

std::span<std::byte> ScratchBuffers::alloc_msg(std::int64_t bytes) {
  if (bytes < 0 ||
      std::cmp_greater(bytes, msg_.size() - msg_used_)) {
    std::ostringstream os;
    os << "payload arena exhausted: need " << bytes << " B, "
       << msg_.size() - msg_used_ << " of " << msg_.size() << " B free";
    fail(Errc::InsufficientScratch, os.str());
  }
  auto out = std::span<std::byte>(msg_).subspan(
      msg_used_, static_cast<std::size_t>(bytes));
  std::memset(out.data(), 0, out.size());
  msg_used_ += static_cast<std::size_t>(bytes);
  msg_high_ = std::max(msg_high_, msg_used_);
  return out;
}

std::span<std::int64_t> ScratchBuffers::alloc_ints(std::int64_t slots) {
  if (slots < 0 ||
      std::cmp_greater(slots, ints_.size() - int_used_)) {
    std::ostringstream os;
    os << "count arena exhausted: need " << slots << " slots, "
       << ints_.size() - int_used_ << " of " << ints_.size() << " free";
    fail(Errc::InsufficientScratch, os.str());
  }
  auto out = std::span<std::int64_t>(ints_).subspan(
      int_used_, static_cast<std::size_t>(slots));
  std::fill(out.begin(), out.end(), 0);
  int_used_ += static_cast<std::size_t>(slots);
  int_high_ = std::max(int_high_, int_used_ * sizeof(std::int64_t));
  return out;
}

void ScratchBuffers::release_all() noexcept {
  msg_used_ = 0;
  int_used_ = 0;
}

namespace {

struct ArenaGuard {
  ScratchBuffers& scratch;
  ~ArenaGuard() { scratch.release_all(); }
};

CollectiveCall sub_call(const CollectiveCall& lhs, CollectiveKind kind,
                        std::int64_t count, int root = 0) {
  CollectiveCall c;
  c.kind = kind;
  c.nprocs = lhs.nprocs;
  c.count = count;
  c.datatype = lhs.datatype;
  c.op = lhs.op;
  c.root = root;
  return c;
}

void with_counts(CollectiveCall& c, std::span<const std::int64_t> counts,
                 std::span<const std::int64_t> displs = {}) {
  c.counts.assign(counts.begin(), counts.end());
  if (!displs.empty()) c.displs.assign(displs.begin(), displs.end());
}

std::span<std::int64_t> fill_prefix(std::span<std::int64_t> displs,
                                    std::span<const std::int64_t> counts) {
  std::int64_t off = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    displs[i] = off;
    off += counts[i];
  }
  return displs;
}

void copy_span(std::span<std::byte> dst, std::span<const std::byte> src) {
  if (!src.empty()) std::memcpy(dst.data(), src.data(), src.size());
}

std::span<const std::byte> elem_range(std::span<const std::byte> buf,
                                      std::int64_t elem_off,
                                      std::int64_t elems, std::int64_t E) {
  return buf.subspan(static_cast<std::size_t>(elem_off * E),
                     static_cast<std::size_t>(elems * E));
}

std::span<std::byte> elem_range(std::span<std::byte> buf,
                                std::int64_t elem_off, std::int64_t elems,
                                std::int64_t E) {
  return buf.subspan(static_cast<std::size_t>(elem_off * E),
                     static_cast<std::size_t>(elems * E));
}

using ConstBytes = std::span<const std::byte>;
using Bytes = std::span<std::byte>;

// Every recipe below executes its right-hand-side collectives with the
// algorithms from cfg.algorithms (passed down as `alg`).
struct Ctx {
  RankHandle& rh;
  const CollectiveCall& call;
  ConstBytes send;
  Bytes recv;
  ScratchBuffers& scratch;
  const MockupConfig& cfg;
  int me;
  int p;
  std::int64_t E;
  std::int64_t n;

  void exec(const CollectiveCall& c, ConstBytes s, Bytes r) {
    execute_collective(rh, c, cfg.algorithms.variant(c.kind), s, r);
  }
};

void mock_allgather_as_gather_bcast(Ctx& cx) {
  const int root = 0;
  CollectiveCall g = sub_call(cx.call, CollectiveKind::Gather, cx.n, root);
  cx.exec(g, cx.send, cx.me == root ? cx.recv : Bytes{});
  CollectiveCall b =
      sub_call(cx.call, CollectiveKind::Bcast, cx.p * cx.n, root);
  cx.exec(b, cx.me == root ? ConstBytes(cx.recv.data(), cx.recv.size())
                           : ConstBytes{},
          cx.me == root ? Bytes{} : cx.recv);
}

void mock_allgather_as_alltoall(Ctx& cx) {
  Bytes a = cx.scratch.alloc_msg(cx.p * cx.n * cx.E);
  for (int d = 0; d < cx.p; ++d)
    copy_span(elem_range(a, static_cast<std::int64_t>(d) * cx.n, cx.n, cx.E),
              elem_range(cx.send, 0, cx.n, cx.E));
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Alltoall, cx.n);
  cx.exec(c, a, cx.recv);
}

void mock_allgather_as_allreduce(Ctx& cx) {
  // Zero-filled positions plus a byte-wise OR: each position has exactly one
  // nonzero contributor, so the OR reassembles every payload bit-exactly,
  // whatever the datatype.
  Bytes a = cx.scratch.alloc_msg(cx.p * cx.n * cx.E);
  copy_span(elem_range(a, static_cast<std::int64_t>(cx.me) * cx.n, cx.n, cx.E),
            elem_range(cx.send, 0, cx.n, cx.E));
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Allreduce,
                              cx.p * cx.n);
  c.op = ReduceOp::Bor;
  cx.exec(c, a, cx.recv);
}

void mock_allgather_as_allgatherv(Ctx& cx) {
  auto counts = cx.scratch.alloc_ints(cx.p);
  std::fill(counts.begin(), counts.end(), cx.n);
  auto displs = fill_prefix(cx.scratch.alloc_ints(cx.p), counts);
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Allgatherv, 0);
  with_counts(c, counts, displs);
  cx.exec(c, cx.send, cx.recv);
}

void mock_allreduce_as_reduce_bcast(Ctx& cx) {
  const int root = 0;
  CollectiveCall r = sub_call(cx.call, CollectiveKind::Reduce, cx.n, root);
  cx.exec(r, cx.send, cx.me == root ? cx.recv : Bytes{});
  CollectiveCall b = sub_call(cx.call, CollectiveKind::Bcast, cx.n, root);
  cx.exec(b, cx.me == root ? ConstBytes(cx.recv.data(), cx.recv.size())
                           : ConstBytes{},
          cx.me == root ? Bytes{} : cx.recv);
}

void mock_allreduce_as_reducescatterblock_allgather(Ctx& cx) {
  const std::int64_t m = pad_count(cx.n, cx.p);
  Bytes a = cx.scratch.alloc_msg(m * cx.E);
  Bytes b = cx.scratch.alloc_msg(m / cx.p * cx.E);
  copy_span(a, elem_range(cx.send, 0, cx.n, cx.E));  // padding stays zero
  CollectiveCall rsb =
      sub_call(cx.call, CollectiveKind::ReduceScatterBlock, m);
  cx.exec(rsb, a, b);
  CollectiveCall ag = sub_call(cx.call, CollectiveKind::Allgather, m / cx.p);
  cx.exec(ag, b, a);  // the padded buffer is free again; reuse it
  copy_span(cx.recv, elem_range(ConstBytes(a.data(), a.size()), 0, cx.n,
                                cx.E));
}

void mock_allreduce_as_reducescatter_allgatherv(Ctx& cx) {
  require_chunk_size(cx.cfg, cx.n);
  const std::int64_t C = cx.cfg.chunk_size_C;
  const std::vector<std::int64_t> cc = chunk_counts(cx.n, cx.p, C);
  auto counts = cx.scratch.alloc_ints(cx.p);
  std::copy(cc.begin(), cc.end(), counts.begin());
  auto displs = fill_prefix(cx.scratch.alloc_ints(cx.p), counts);
  Bytes blk = cx.scratch.alloc_msg(chunk_bound(cx.n, cx.p, C) * cx.E);
  const std::int64_t mine = counts[static_cast<std::size_t>(cx.me)];

  CollectiveCall rs = sub_call(cx.call, CollectiveKind::ReduceScatter, cx.n);
  with_counts(rs, counts);
  cx.exec(rs, cx.send, elem_range(blk, 0, mine, cx.E));

  CollectiveCall ag = sub_call(cx.call, CollectiveKind::Allgatherv, 0);
  with_counts(ag, counts, displs);
  cx.exec(ag, elem_range(ConstBytes(blk.data(), blk.size()), 0, mine, cx.E),
          cx.recv);
}

void mock_alltoall_as_alltoallv(Ctx& cx) {
  auto counts = cx.scratch.alloc_ints(cx.p);
  std::fill(counts.begin(), counts.end(), cx.n);
  auto displs = fill_prefix(cx.scratch.alloc_ints(cx.p), counts);
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Alltoallv, 0);
  with_counts(c, counts, displs);
  cx.exec(c, cx.send, cx.recv);
}

void mock_bcast_as_allgatherv(Ctx& cx) {
  // Only the root contributes bytes; everyone else contributes zero.
  auto counts = cx.scratch.alloc_ints(cx.p);
  counts[static_cast<std::size_t>(cx.call.root)] = cx.n;
  auto displs = fill_prefix(cx.scratch.alloc_ints(cx.p), counts);
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Allgatherv, 0);
  with_counts(c, counts, displs);
  if (cx.me == cx.call.root) {
    cx.exec(c, cx.send, cx.recv);
  } else {
    Bytes a = cx.scratch.alloc_msg(cx.n * cx.E);
    cx.exec(c, ConstBytes{}, a);
    copy_span(cx.recv, ConstBytes(a.data(), a.size()));
  }
}

void mock_bcast_as_scatter_allgather(Ctx& cx) {
  const std::int64_t m = pad_count(cx.n, cx.p);
  Bytes a = cx.scratch.alloc_msg(m * cx.E);
  Bytes b = cx.scratch.alloc_msg(m / cx.p * cx.E);
  if (cx.me == cx.call.root)
    copy_span(a, elem_range(cx.send, 0, cx.n, cx.E));
  CollectiveCall sc =
      sub_call(cx.call, CollectiveKind::Scatter, m, cx.call.root);
  cx.exec(sc, cx.me == cx.call.root ? ConstBytes(a.data(), a.size())
                                    : ConstBytes{},
          b);
  CollectiveCall ag = sub_call(cx.call, CollectiveKind::Allgather, m / cx.p);
  cx.exec(ag, b, a);
  copy_span(cx.recv,
            elem_range(ConstBytes(a.data(), a.size()), 0, cx.n, cx.E));
}

void mock_gather_as_allgather(Ctx& cx) {
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Allgather, cx.n);
  if (cx.me == cx.call.root) {
    cx.exec(c, cx.send, cx.recv);
  } else {
    Bytes a = cx.scratch.alloc_msg(cx.p * cx.n * cx.E);
    cx.exec(c, cx.send, a);  // discarded: only the root keeps the result
  }
}

void mock_gather_as_gatherv(Ctx& cx) {
  auto counts = cx.scratch.alloc_ints(cx.p);
  std::fill(counts.begin(), counts.end(), cx.n);
  auto displs = fill_prefix(cx.scratch.alloc_ints(cx.p), counts);
  CollectiveCall c =
      sub_call(cx.call, CollectiveKind::Gatherv, 0, cx.call.root);
  with_counts(c, counts, displs);
  cx.exec(c, cx.send, cx.me == cx.call.root ? cx.recv : Bytes{});
}

void mock_gather_as_reduce(Ctx& cx) {
  // Same zero-fill + byte-wise OR trick as the allgather emulation.
  Bytes a = cx.scratch.alloc_msg(cx.p * cx.n * cx.E);
  copy_span(elem_range(a, static_cast<std::int64_t>(cx.me) * cx.n, cx.n, cx.E),
            elem_range(cx.send, 0, cx.n, cx.E));
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Reduce, cx.p * cx.n,
                              cx.call.root);
  c.op = ReduceOp::Bor;
  cx.exec(c, a, cx.me == cx.call.root ? cx.recv : Bytes{});
}

void mock_reduce_as_allreduce(Ctx& cx) {
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Allreduce, cx.n);
  if (cx.me == cx.call.root) {
    cx.exec(c, cx.send, cx.recv);
  } else {
    Bytes a = cx.scratch.alloc_msg(cx.n * cx.E);
    cx.exec(c, cx.send, a);
  }
}

void mock_reduce_as_reducescatterblock_gather(Ctx& cx) {
  const std::int64_t m = pad_count(cx.n, cx.p);
  Bytes a = cx.scratch.alloc_msg(m * cx.E);
  Bytes b = cx.scratch.alloc_msg(m / cx.p * cx.E);
  copy_span(a, elem_range(cx.send, 0, cx.n, cx.E));
  CollectiveCall rsb =
      sub_call(cx.call, CollectiveKind::ReduceScatterBlock, m);
  cx.exec(rsb, a, b);
  CollectiveCall g =
      sub_call(cx.call, CollectiveKind::Gather, m / cx.p, cx.call.root);
  cx.exec(g, ConstBytes(b.data(), b.size()),
          cx.me == cx.call.root ? a : Bytes{});  // reuse the padded buffer
  if (cx.me == cx.call.root)
    copy_span(cx.recv,
              elem_range(ConstBytes(a.data(), a.size()), 0, cx.n, cx.E));
}

void mock_reduce_as_reducescatter_gatherv(Ctx& cx) {
  require_chunk_size(cx.cfg, cx.n);
  const std::int64_t C = cx.cfg.chunk_size_C;
  const std::vector<std::int64_t> cc = chunk_counts(cx.n, cx.p, C);
  auto counts = cx.scratch.alloc_ints(cx.p);
  std::copy(cc.begin(), cc.end(), counts.begin());
  auto displs = fill_prefix(cx.scratch.alloc_ints(cx.p), counts);
  Bytes blk = cx.scratch.alloc_msg(chunk_bound(cx.n, cx.p, C) * cx.E);
  const std::int64_t mine = counts[static_cast<std::size_t>(cx.me)];

  CollectiveCall rs = sub_call(cx.call, CollectiveKind::ReduceScatter, cx.n);
  with_counts(rs, counts);
  cx.exec(rs, cx.send, elem_range(blk, 0, mine, cx.E));

  CollectiveCall g =
      sub_call(cx.call, CollectiveKind::Gatherv, 0, cx.call.root);
  with_counts(g, counts, displs);
  cx.exec(g, elem_range(ConstBytes(blk.data(), blk.size()), 0, mine, cx.E),
          cx.me == cx.call.root ? cx.recv : Bytes{});
}

void mock_reducescatterblock_as_reduce_scatter(Ctx& cx) {
  const int root = 0;
  Bytes a = cx.me == root ? cx.scratch.alloc_msg(cx.n * cx.E) : Bytes{};
  CollectiveCall r = sub_call(cx.call, CollectiveKind::Reduce, cx.n, root);
  cx.exec(r, cx.send, a);
  CollectiveCall s = sub_call(cx.call, CollectiveKind::Scatter, cx.n, root);
  cx.exec(s, ConstBytes(a.data(), a.size()), cx.recv);
}

void mock_reducescatterblock_as_reducescatter(Ctx& cx) {
  auto counts = cx.scratch.alloc_ints(cx.p);
  std::fill(counts.begin(), counts.end(), cx.n / cx.p);
  CollectiveCall c = sub_call(cx.call, CollectiveKind::ReduceScatter, cx.n);
  with_counts(c, counts);
  cx.exec(c, cx.send, cx.recv);
}

void mock_reducescatterblock_as_allreduce(Ctx& cx) {
  Bytes a = cx.scratch.alloc_msg(cx.n * cx.E);
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Allreduce, cx.n);
  cx.exec(c, cx.send, a);
  copy_span(cx.recv,
            elem_range(ConstBytes(a.data(), a.size()),
                       static_cast<std::int64_t>(cx.me) * (cx.n / cx.p),
                       cx.n / cx.p, cx.E));
}

void mock_scan_as_exscan_reducelocal(Ctx& cx) {
  CollectiveCall c = sub_call(cx.call, CollectiveKind::Exscan, cx.n);
  cx.exec(c, cx.send, cx.recv);
  if (cx.n == 0) return;
  if (cx.me == 0) {
    // The exclusive scan leaves rank 0's buffer alone; its inclusive result
    // is simply its own contribution.
    copy_span(cx.recv, elem_range(cx.send, 0, cx.n, cx.E));
  } else {
    // recv holds the exclusive prefix; fold in the local contribution.  The
    // operators are commutative, so op(own, prefix) equals op(prefix, own)
    // bit for bit.
    apply_reduce(cx.call.op, cx.call.datatype,
                 elem_range(cx.send, 0, cx.n, cx.E),
                 elem_range(cx.recv, 0, cx.n, cx.E), cx.n);
    cx.rh.charge_ns(local_reduce_cost_ns(cx.rh.model(), cx.n * cx.E));
  }
}

void mock_scatter_as_bcast(Ctx& cx) {
  const std::int64_t b = cx.n / cx.p;
  CollectiveCall c =
      sub_call(cx.call, CollectiveKind::Bcast, cx.n, cx.call.root);
  if (cx.me == cx.call.root) {
    cx.exec(c, cx.send, Bytes{});
    copy_span(cx.recv,
              elem_range(cx.send, static_cast<std::int64_t>(cx.me) * b, b,
                         cx.E));
  } else {
    Bytes a = cx.scratch.alloc_msg(cx.n * cx.E);
    cx.exec(c, ConstBytes{}, a);
    copy_span(cx.recv,
              elem_range(ConstBytes(a.data(), a.size()),
                         static_cast<std::int64_t>(cx.me) * b, b, cx.E));
  }
}

void mock_scatter_as_scatterv(Ctx& cx) {
  auto counts = cx.scratch.alloc_ints(cx.p);
  std::fill(counts.begin(), counts.end(), cx.n / cx.p);
  auto displs = fill_prefix(cx.scratch.alloc_ints(cx.p), counts);
  CollectiveCall c =
      sub_call(cx.call, CollectiveKind::Scatterv, 0, cx.call.root);
  with_counts(c, counts, displs);
  cx.exec(c, cx.send, cx.recv);
}

}  // namespace

void execute_mockup(RankHandle& rh, MockupId id, const CollectiveCall& call,
                    std::span<const std::byte> send, std::span<std::byte> recv,
                    ScratchBuffers& scratch, const MockupConfig& cfg) {
  // extra_memory_required re-validates kind and call shape.
  const MemoryRequirement req = extra_memory_required(id, call, cfg);
  if (call.nprocs != rh.nprocs())
    fail(Errc::SizeMismatch, "call group size differs from transport group");

  // Group-wide admission check before any message moves: the requirement is
  // the per-rank maximum, identical on every rank, so the whole group
  // reaches the same verdict and no rank starts a collective alone.
  if (std::cmp_greater(req.msg_bytes, scratch.msg_capacity()) ||
      std::cmp_greater(req.int_elems * kIntSlotBytes,
                       scratch.int_capacity())) {
    std::ostringstream os;
    os << mockup_name(id) << " needs " << req.msg_bytes << " B payload and "
       << req.int_elems * kIntSlotBytes << " B counts; arenas hold "
       << scratch.msg_capacity() << " / " << scratch.int_capacity() << " B";
    fail(Errc::InsufficientScratch, os.str());
  }

  const int me = rh.rank();
  const std::int64_t E = extent(call.datatype);
  if (std::cmp_less(send.size(), send_elems(call, me) * E) ||
      std::cmp_less(recv.size(), recv_elems(call, me) * E))
    fail(Errc::SizeMismatch, "mock-up caller buffers undersized");

  ArenaGuard guard{scratch};
  Ctx cx{rh,      call, send, recv, scratch, cfg, me,
         call.nprocs, E,    call.count};
  switch (id) {
    case MockupId::AllgatherAsGatherBcast:
      mock_allgather_as_gather_bcast(cx);
      break;
    case MockupId::AllgatherAsAlltoall:
      mock_allgather_as_alltoall(cx);
      break;
    case MockupId::AllgatherAsAllreduce:
      mock_allgather_as_allreduce(cx);
      break;
    case MockupId::AllgatherAsAllgatherv:
      mock_allgather_as_allgatherv(cx);
      break;
    case MockupId::AllreduceAsReduceBcast:
      mock_allreduce_as_reduce_bcast(cx);
      break;
    case MockupId::AllreduceAsReducescatterblockAllgather:
      mock_allreduce_as_reducescatterblock_allgather(cx);
      break;
    case MockupId::AllreduceAsReducescatterAllgatherv:
      mock_allreduce_as_reducescatter_allgatherv(cx);
      break;
    case MockupId::AlltoallAsAlltoallv:
      mock_alltoall_as_alltoallv(cx);
      break;
    case MockupId::BcastAsAllgatherv:
      mock_bcast_as_allgatherv(cx);
      break;
    case MockupId::BcastAsScatterAllgather:
      mock_bcast_as_scatter_allgather(cx);
      break;
    case MockupId::GatherAsAllgather:
      mock_gather_as_allgather(cx);
      break;
    case MockupId::GatherAsGatherv:
      mock_gather_as_gatherv(cx);
      break;
    case MockupId::GatherAsReduce:
      mock_gather_as_reduce(cx);
      break;
    case MockupId::ReduceAsAllreduce:
      mock_reduce_as_allreduce(cx);
      break;
    case MockupId::ReduceAsReducescatterblockGather:
      mock_reduce_as_reducescatterblock_gather(cx);
      break;
    case MockupId::ReduceAsReducescatterGatherv:
      mock_reduce_as_reducescatter_gatherv(cx);
      break;
    case MockupId::ReducescatterblockAsReduceScatter:
      mock_reducescatterblock_as_reduce_scatter(cx);
      break;
    case MockupId::ReducescatterblockAsReducescatter:
      mock_reducescatterblock_as_reducescatter(cx);
      break;
    case MockupId::ReducescatterblockAsAllreduce:
      mock_reducescatterblock_as_allreduce(cx);
      break;
    case MockupId::ScanAsExscanReducelocal:
      mock_scan_as_exscan_reducelocal(cx);
      break;
    case MockupId::ScatterAsBcast:
      mock_scatter_as_bcast(cx);
      break;
    case MockupId::ScatterAsScatterv:
      mock_scatter_as_scatterv(cx);
      break;
  }
}

}  // namespace pgtune
