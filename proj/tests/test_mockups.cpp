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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pgtune/collectives.hpp"
#include "pgtune/error.hpp"
#include "pgtune/mockups.hpp"
#include "pgtune/oracle.hpp"
#include "pgtune/transport.hpp"

using namespace pgtune;

namespace {

constexpr std::byte kFill{0xAB};

std::vector<std::byte> make_payload(Datatype dt, std::int64_t elems,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::byte> out(static_cast<std::size_t>(elems * extent(dt)));
  switch (dt) {
    case Datatype::Byte:
      for (auto& b : out) b = static_cast<std::byte>(rng() & 0xFF);
      break;
    case Datatype::Int32:
      for (std::int64_t i = 0; i < elems; ++i) {
        auto v = static_cast<std::int32_t>(rng() % 2001) - 1000;
        std::memcpy(out.data() + i * 4, &v, 4);
      }
      break;
    case Datatype::Float64: {
      std::uniform_real_distribution<double> dist(0.5, 1.5);
      for (std::int64_t i = 0; i < elems; ++i) {
        double v = dist(rng);
        std::memcpy(out.data() + i * 8, &v, 8);
      }
      break;
    }
  }
  return out;
}

CollectiveCall make_lhs_call(CollectiveKind kind, int p, std::int64_t n,
                             int root, Datatype dt, ReduceOp op) {
  CollectiveCall call;
  call.kind = kind;
  call.nprocs = p;
  call.datatype = dt;
  call.op = op;
  call.root = root;
  call.count = (kind == CollectiveKind::Scatter ||
                kind == CollectiveKind::ReduceScatterBlock)
                   ? n * p
                   : n;
  return call;
}

std::vector<std::vector<std::byte>> group_payloads(const CollectiveCall& call,
                                                   std::uint64_t seed) {
  std::vector<std::vector<std::byte>> all(
      static_cast<std::size_t>(call.nprocs));
  for (int r = 0; r < call.nprocs; ++r)
    all[static_cast<std::size_t>(r)] = make_payload(
        call.datatype, send_elems(call, r),
        seed * 1000003ULL + static_cast<std::uint64_t>(r));
  return all;
}

// Mock-up paths that tree-reduce floating point sums re-associate them.
bool needs_tolerance(MockupId id, const CollectiveCall& call) {
  if (call.datatype != Datatype::Float64 || call.op != ReduceOp::Sum ||
      !kind_reduces(call.kind))
    return false;
  return id != MockupId::ScanAsExscanReducelocal;  // chain order, bit-exact
}

bool buffers_match(bool tolerant, const std::vector<std::byte>& expected,
                   const std::vector<std::byte>& actual) {
  if (expected.size() != actual.size()) return false;
  if (!tolerant)
    return expected.empty() ||
           std::memcmp(expected.data(), actual.data(), expected.size()) == 0;
  for (std::size_t i = 0; i + 8 <= expected.size(); i += 8) {
    double e, a;
    std::memcpy(&e, expected.data() + i, 8);
    std::memcpy(&a, actual.data() + i, 8);
    if (std::abs(a - e) > 1e-12 * std::max(1.0, std::abs(e))) return false;
  }
  return true;
}

struct MockupRun {
  std::vector<std::vector<std::byte>> recv;
  std::int64_t max_msg_high = 0;
  std::int64_t max_int_high = 0;
};

MockupRun run_mockup(MockupId id, const CollectiveCall& call,
                     const std::vector<std::vector<std::byte>>& sends,
                     const MockupConfig& cfg, std::size_t msg_cap,
                     std::size_t int_cap, Mode mode = Mode::Virtual) {
  const int p = call.nprocs;
  MockupRun out;
  out.recv.resize(static_cast<std::size_t>(p));
  for (int r = 0; r < p; ++r)
    out.recv[static_cast<std::size_t>(r)].assign(
        static_cast<std::size_t>(recv_elems(call, r) * extent(call.datatype)),
        kFill);
  std::vector<std::int64_t> msg_high(static_cast<std::size_t>(p), 0);
  std::vector<std::int64_t> int_high(static_cast<std::size_t>(p), 0);
  run_spmd(p, CostModel{}, mode, [&](RankHandle& rh) {
    const auto me = static_cast<std::size_t>(rh.rank());
    ScratchBuffers scratch(msg_cap, int_cap);
    execute_mockup(rh, id, call, sends[me], std::span<std::byte>(out.recv[me]),
                   scratch, cfg);
    msg_high[me] = static_cast<std::int64_t>(scratch.msg_high_water());
    int_high[me] = static_cast<std::int64_t>(scratch.int_high_water());
  });
  out.max_msg_high = *std::max_element(msg_high.begin(), msg_high.end());
  out.max_int_high = *std::max_element(int_high.begin(), int_high.end());
  return out;
}

std::vector<std::pair<Datatype, ReduceOp>> lhs_type_combos(
    CollectiveKind kind) {
  std::vector<std::pair<Datatype, ReduceOp>> combos{
      {Datatype::Byte, ReduceOp::Bor}};
  if (kind_reduces(kind)) {
    combos.push_back({Datatype::Int32, ReduceOp::Sum});
    combos.push_back({Datatype::Float64, ReduceOp::Sum});
    combos.push_back({Datatype::Float64, ReduceOp::Max});
  } else {
    // Exercises the byte-wise OR emulations with multi-byte elements.
    combos.push_back({Datatype::Float64, ReduceOp::Bor});
  }
  return combos;
}

std::vector<std::byte> int32_bytes(std::initializer_list<std::int32_t> vals) {
  std::vector<std::byte> out(vals.size() * 4);
  std::size_t i = 0;
  for (std::int32_t v : vals) std::memcpy(out.data() + 4 * (i++), &v, 4);
  return out;
}

}  // namespace

TEST_CASE("mock-up identifiers match their published names") {
  CHECK(std::string(mockup_name(MockupId::AllgatherAsGatherBcast)) ==
        "allgather_as_gather_bcast");
  CHECK(std::string(mockup_name(
            MockupId::AllreduceAsReducescatterblockAllgather)) ==
        "allreduce_as_reducescatterblock_allgather");
  CHECK(std::string(mockup_name(MockupId::ScatterAsBcast)) ==
        "scatter_as_bcast");
  CHECK(std::string(mockup_name(MockupId::ScatterAsScatterv)) ==
        "scatter_as_scatterv");
  for (int i = 0; i < kMockupCount; ++i) {
    const auto id = static_cast<MockupId>(i);
    CHECK(parse_mockup(mockup_name(id)) == id);
  }
  CHECK(parse_mockup("bcast_as_bcast") == std::nullopt);

  CHECK(mockups_of(CollectiveKind::Allgather).size() == 4);
  CHECK(mockups_of(CollectiveKind::Allreduce).size() == 3);
  CHECK(mockups_of(CollectiveKind::Alltoall).size() == 1);
  CHECK(mockups_of(CollectiveKind::Bcast).size() == 2);
  CHECK(mockups_of(CollectiveKind::Gather).size() == 3);
  CHECK(mockups_of(CollectiveKind::Reduce).size() == 3);
  CHECK(mockups_of(CollectiveKind::ReduceScatterBlock).size() == 3);
  CHECK(mockups_of(CollectiveKind::Scan).size() == 1);
  CHECK(mockups_of(CollectiveKind::Scatter).size() == 2);
  CHECK(mockups_of(CollectiveKind::Exscan).empty());
  CHECK(mockups_of(CollectiveKind::Gatherv).empty());
  for (int i = 0; i < kMockupCount; ++i) {
    const auto id = static_cast<MockupId>(i);
    const auto& group = mockups_of(mockup_lhs(id));
    CHECK(std::find(group.begin(), group.end(), id) != group.end());
  }
}

TEST_CASE("padding rounds up to the group size") {
  CHECK(pad_count(5, 4) == 8);
  CHECK(pad_count(8, 4) == 8);
  CHECK(pad_count(0, 3) == 0);
  CHECK(pad_count(1, 1) == 1);
  for (int p = 1; p <= 9; ++p)
    for (std::int64_t n = 0; n <= 40; ++n) {
      const std::int64_t m = pad_count(n, p);
      CHECK(m % p == 0);
      CHECK(m >= n);
      CHECK(m - n <= p - 1);
    }
}

TEST_CASE("chunked splits deal round-robin and conserve elements") {
  CHECK(chunk_counts(10, 4, 1) == std::vector<std::int64_t>{3, 3, 2, 2});
  CHECK(chunk_counts(10, 4, 10) == std::vector<std::int64_t>{10, 0, 0, 0});
  CHECK(chunk_counts(0, 3, 2) == std::vector<std::int64_t>{0, 0, 0});
  CHECK_THROWS_AS(chunk_counts(4, 2, 0), Error);

  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::int64_t n = static_cast<std::int64_t>(rng() % 200);
    const int p = static_cast<int>(rng() % 16) + 1;
    const std::int64_t C = static_cast<std::int64_t>(rng() % 20) + 1;
    const auto counts = chunk_counts(n, p, C);
    CHECK(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) ==
          n);
    const std::int64_t bound = std::max(n / p + C, C);
    CHECK(*std::max_element(counts.begin(), counts.end()) <= bound);
  }
}

TEST_CASE("memory requirements reproduce the published table rows") {
  MockupConfig cfg;
  auto call = [](CollectiveKind kind, int p, std::int64_t n, Datatype dt) {
    return make_lhs_call(kind, p, n, 0, dt,
                         kind_reduces(kind) ? ReduceOp::Sum : ReduceOp::Bor);
  };

  auto r = extra_memory_required(
      MockupId::AllgatherAsAlltoall,
      call(CollectiveKind::Allgather, 4, 6, Datatype::Byte), cfg);
  CHECK(r.msg_bytes == 24);
  CHECK(r.int_elems == 0);

  r = extra_memory_required(
      MockupId::AllgatherAsAllgatherv,
      call(CollectiveKind::Allgather, 4, 6, Datatype::Byte), cfg);
  CHECK(r.msg_bytes == 0);
  CHECK(r.int_elems == 8);

  r = extra_memory_required(
      MockupId::AllreduceAsReduceBcast,
      call(CollectiveKind::Allreduce, 4, 6, Datatype::Float64), cfg);
  CHECK(r.msg_bytes == 0);
  CHECK(r.int_elems == 0);

  // n=5, p=4, 4-byte elements: pad by 3 to 8, plus one 2-element block.
  r = extra_memory_required(
      MockupId::AllreduceAsReducescatterblockAllgather,
      call(CollectiveKind::Allreduce, 4, 5, Datatype::Int32), cfg);
  CHECK(r.msg_bytes == 40);
  CHECK(r.int_elems == 0);

  r = extra_memory_required(
      MockupId::GatherAsReduce,
      call(CollectiveKind::Gather, 3, 2, Datatype::Int32), cfg);
  CHECK(r.msg_bytes == 24);
  CHECK(r.int_elems == 0);

  r = extra_memory_required(MockupId::BcastAsAllgatherv,
                            call(CollectiveKind::Bcast, 4, 5, Datatype::Byte),
                            cfg);
  CHECK(r.msg_bytes == 5);
  CHECK(r.int_elems == 8);

  r = extra_memory_required(
      MockupId::ReducescatterblockAsReducescatter,
      call(CollectiveKind::ReduceScatterBlock, 4, 2, Datatype::Int32), cfg);
  CHECK(r.msg_bytes == 0);
  CHECK(r.int_elems == 4);

  r = extra_memory_required(
      MockupId::ScatterAsBcast,
      call(CollectiveKind::Scatter, 4, 2, Datatype::Byte), cfg);
  CHECK(r.msg_bytes == 8);  // the full 8-element vector lands off-root
  CHECK(r.int_elems == 0);

  // Chunked split: the bound max(n/p + C, C) is allocated, not the actual
  // maximum share.
  cfg.chunk_size_C = 10;
  r = extra_memory_required(
      MockupId::ReduceAsReducescatterGatherv,
      call(CollectiveKind::Reduce, 4, 10, Datatype::Float64), cfg);
  CHECK(r.msg_bytes == 12 * 8);
  CHECK(r.int_elems == 8);

  CHECK_THROWS_AS(
      extra_memory_required(
          MockupId::GatherAsReduce,
          call(CollectiveKind::Allgather, 4, 2, Datatype::Byte), cfg),
      Error);
  try {
    extra_memory_required(
        MockupId::GatherAsReduce,
        call(CollectiveKind::Allgather, 4, 2, Datatype::Byte), cfg);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::KindMismatch);
  }

  cfg.chunk_size_C = 0;
  CHECK_THROWS_AS(
      extra_memory_required(
          MockupId::AllreduceAsReducescatterAllgatherv,
          call(CollectiveKind::Allreduce, 4, 6, Datatype::Float64), cfg),
      Error);
  cfg.chunk_size_C = 7;  // > max(n,1) for n=6
  CHECK_THROWS_AS(
      extra_memory_required(
          MockupId::AllreduceAsReducescatterAllgatherv,
          call(CollectiveKind::Allreduce, 4, 6, Datatype::Float64), cfg),
      Error);
}

TEST_CASE("every mock-up is equivalent to its collective, with tight scratch "
          "accounting") {
  MockupConfig cfg;
  for (int i = 0; i < kMockupCount; ++i) {
    const auto id = static_cast<MockupId>(i);
    const CollectiveKind kind = mockup_lhs(id);
    for (int p : {1, 2, 3, 4, 5, 8, 16}) {
      for (std::int64_t n :
           {std::int64_t{0}, std::int64_t{1}, std::int64_t{2}, std::int64_t{7},
            std::int64_t{16}, std::int64_t{p}, std::int64_t{3 * p + 1}}) {
        for (int root : kind_is_rooted(kind) && p > 1 ? std::vector<int>{0, p - 1}
                                                      : std::vector<int>{0}) {
          for (auto [dt, op] : lhs_type_combos(kind)) {
            CollectiveCall call = make_lhs_call(kind, p, n, root, dt, op);
            auto sends = group_payloads(
                call, static_cast<std::uint64_t>(i * 977 + p * 31 + n));
            const MemoryRequirement req = extra_memory_required(id, call, cfg);
            INFO(mockup_name(id) << " p=" << p << " n=" << n << " root="
                                 << root << " dt=" << datatype_name(dt)
                                 << " op=" << reduce_op_name(op));
            MockupRun mr =
                run_mockup(id, call, sends, cfg, 1 << 20, 1 << 12);
            auto expect = sequential_oracle(call, sends);
            const bool tolerant = needs_tolerance(id, call);
            for (int rank = 0; rank < p; ++rank) {
              const auto& exp = expect[static_cast<std::size_t>(rank)];
              const auto& act = mr.recv[static_cast<std::size_t>(rank)];
              INFO("rank " << rank);
              if (exp.empty() && !act.empty()) {
                CHECK(std::all_of(act.begin(), act.end(),
                                  [](std::byte b) { return b == kFill; }));
              } else {
                CHECK(buffers_match(tolerant, exp, act));
              }
            }
            CHECK(mr.max_msg_high == req.msg_bytes);
            CHECK(mr.max_int_high == req.int_elems * kIntSlotBytes);
          }
        }
      }
    }
  }
}

TEST_CASE("chunked mock-ups stay equivalent across chunk sizes") {
  for (auto id : {MockupId::AllreduceAsReducescatterAllgatherv,
                  MockupId::ReduceAsReducescatterGatherv}) {
    for (std::int64_t C : {std::int64_t{1}, std::int64_t{2}, std::int64_t{3},
                           std::int64_t{10}}) {
      MockupConfig cfg;
      cfg.chunk_size_C = C;
      CollectiveCall call = make_lhs_call(mockup_lhs(id), 4, 10, 0,
                                          Datatype::Int32, ReduceOp::Sum);
      auto sends = group_payloads(call, 55 + static_cast<std::uint64_t>(C));
      const MemoryRequirement req = extra_memory_required(id, call, cfg);
      MockupRun mr = run_mockup(id, call, sends, cfg, 1 << 20, 1 << 12);
      auto expect = sequential_oracle(call, sends);
      INFO(mockup_name(id) << " C=" << C);
      for (int rank = 0; rank < 4; ++rank) {
        const auto& exp = expect[static_cast<std::size_t>(rank)];
        const auto& act = mr.recv[static_cast<std::size_t>(rank)];
        if (!exp.empty()) CHECK(buffers_match(false, exp, act));
      }
      CHECK(mr.max_msg_high == req.msg_bytes);  // full bound, not actual use
      CHECK(mr.max_int_high == req.int_elems * kIntSlotBytes);
    }
  }
}

TEST_CASE("worked examples from the recipe descriptions") {
  // Inclusive scan via exclusive scan plus one local fold.
  {
    CollectiveCall call = make_lhs_call(CollectiveKind::Scan, 3, 1, 0,
                                        Datatype::Int32, ReduceOp::Sum);
    std::vector<std::vector<std::byte>> sends{int32_bytes({1}),
                                              int32_bytes({2}),
                                              int32_bytes({3})};
    MockupRun mr = run_mockup(MockupId::ScanAsExscanReducelocal, call, sends,
                              MockupConfig{}, 0, 0);
    CHECK(mr.recv[0] == int32_bytes({1}));
    CHECK(mr.recv[1] == int32_bytes({3}));
    CHECK(mr.recv[2] == int32_bytes({6}));
  }
  // Gather emulated by an OR-reduction over zero-filled padded vectors.
  {
    CollectiveCall call = make_lhs_call(CollectiveKind::Gather, 2, 1, 0,
                                        Datatype::Int32, ReduceOp::Sum);
    std::vector<std::vector<std::byte>> sends{int32_bytes({5}),
                                              int32_bytes({9})};
    MockupRun mr = run_mockup(MockupId::GatherAsReduce, call, sends,
                              MockupConfig{}, 64, 0);
    CHECK(mr.recv[0] == int32_bytes({5, 9}));
  }
  // Single-rank groups degenerate to a copy.
  {
    CollectiveCall call = make_lhs_call(CollectiveKind::Allgather, 1, 3, 0,
                                        Datatype::Byte, ReduceOp::Bor);
    auto sends = group_payloads(call, 9);
    MockupRun mr = run_mockup(MockupId::AllgatherAsAllreduce, call, sends,
                              MockupConfig{}, 64, 0);
    CHECK(mr.recv[0] == sends[0]);
  }
  // Broadcast via scatter+allgather pads 6 elements to 8 and drops the
  // padding on the way back out.
  {
    CollectiveCall call = make_lhs_call(CollectiveKind::Bcast, 4, 6, 0,
                                        Datatype::Byte, ReduceOp::Bor);
    auto sends = group_payloads(call, 10);
    MockupRun mr = run_mockup(MockupId::BcastAsScatterAllgather, call, sends,
                              MockupConfig{}, 64, 0);
    for (int r = 0; r < 4; ++r)
      CHECK(mr.recv[static_cast<std::size_t>(r)] == sends[0]);
    CHECK(mr.max_msg_high == 8 + 2);
  }
}

TEST_CASE("zero-requirement mock-ups run with empty arenas") {
  for (auto id :
       {MockupId::AllgatherAsGatherBcast, MockupId::AllreduceAsReduceBcast,
        MockupId::ScanAsExscanReducelocal}) {
    CollectiveCall call = make_lhs_call(
        mockup_lhs(id), 4, 3, 0,
        kind_reduces(mockup_lhs(id)) ? Datatype::Int32 : Datatype::Byte,
        kind_reduces(mockup_lhs(id)) ? ReduceOp::Sum : ReduceOp::Bor);
    auto sends = group_payloads(call, 21);
    MockupRun mr = run_mockup(id, call, sends, MockupConfig{}, 0, 0);
    auto expect = sequential_oracle(call, sends);
    for (int r = 0; r < 4; ++r)
      CHECK(mr.recv[static_cast<std::size_t>(r)] ==
            expect[static_cast<std::size_t>(r)]);
    CHECK(mr.max_msg_high == 0);
    CHECK(mr.max_int_high == 0);
  }
}

TEST_CASE("scratch admission is all-or-nothing at exact capacity") {
  CollectiveCall call = make_lhs_call(CollectiveKind::Allgather, 4, 3, 0,
                                      Datatype::Byte, ReduceOp::Bor);
  auto sends = group_payloads(call, 5);
  const MemoryRequirement req =
      extra_memory_required(MockupId::AllgatherAsAlltoall, call,
                            MockupConfig{});
  REQUIRE(req.msg_bytes == 12);

  // Exactly enough: succeeds.
  MockupRun ok = run_mockup(MockupId::AllgatherAsAlltoall, call, sends,
                            MockupConfig{}, 12, 0);
  CHECK(ok.max_msg_high == 12);

  // One byte short: InsufficientScratch before any message, buffers intact.
  std::vector<std::vector<std::byte>> recv(
      4, std::vector<std::byte>(12, kFill));
  try {
    run_spmd(4, CostModel{}, Mode::Virtual, [&](RankHandle& rh) {
      ScratchBuffers scratch(11, 0);
      execute_mockup(rh, MockupId::AllgatherAsAlltoall, call,
                     sends[static_cast<std::size_t>(rh.rank())],
                     recv[static_cast<std::size_t>(rh.rank())], scratch,
                     MockupConfig{});
    });
    FAIL("undersized arena accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientScratch);
  }
  for (const auto& buf : recv)
    CHECK(std::all_of(buf.begin(), buf.end(),
                      [](std::byte b) { return b == kFill; }));

  // Count-slot arena enforced the same way.
  const MemoryRequirement vreq =
      extra_memory_required(MockupId::AllgatherAsAllgatherv, call,
                            MockupConfig{});
  REQUIRE(vreq.int_elems == 8);
  CHECK_NOTHROW(run_mockup(MockupId::AllgatherAsAllgatherv, call, sends,
                           MockupConfig{}, 0, 64));
  try {
    run_spmd(4, CostModel{}, Mode::Virtual, [&](RankHandle& rh) {
      ScratchBuffers scratch(0, 63);
      std::vector<std::byte> r(12);
      execute_mockup(rh, MockupId::AllgatherAsAllgatherv, call,
                     sends[static_cast<std::size_t>(rh.rank())], r, scratch,
                     MockupConfig{});
    });
    FAIL("undersized count arena accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientScratch);
  }
}

TEST_CASE("scratch is fully released between consecutive mock-up calls") {
  CollectiveCall call = make_lhs_call(CollectiveKind::Allgather, 3, 2, 0,
                                      Datatype::Byte, ReduceOp::Bor);
  auto sends = group_payloads(call, 77);
  auto expect = sequential_oracle(call, sends);
  std::vector<std::vector<std::byte>> recv(3, std::vector<std::byte>(6));
  run_spmd(3, CostModel{}, Mode::Virtual, [&](RankHandle& rh) {
    const auto me = static_cast<std::size_t>(rh.rank());
    // Arena sized for exactly one call's worth of scratch (6 bytes): the
    // second call only fits if the first released everything.
    ScratchBuffers scratch(6, 0);
    for (int round = 0; round < 3; ++round)
      execute_mockup(rh, MockupId::AllgatherAsAlltoall, call, sends[me],
                     recv[me], scratch, MockupConfig{});
  });
  for (int r = 0; r < 3; ++r)
    CHECK(recv[static_cast<std::size_t>(r)] ==
          expect[static_cast<std::size_t>(r)]);
}

TEST_CASE("mock-ups behave identically under the wallclock engine") {
  for (auto id : {MockupId::AllreduceAsReducescatterblockAllgather,
                  MockupId::BcastAsScatterAllgather}) {
    CollectiveCall call = make_lhs_call(
        mockup_lhs(id), 5, 7, 0,
        kind_reduces(mockup_lhs(id)) ? Datatype::Int32 : Datatype::Byte,
        kind_reduces(mockup_lhs(id)) ? ReduceOp::Sum : ReduceOp::Bor);
    auto sends = group_payloads(call, 44);
    MockupRun mr = run_mockup(id, call, sends, MockupConfig{}, 1 << 16,
                              1 << 10, Mode::Wallclock);
    auto expect = sequential_oracle(call, sends);
    for (int r = 0; r < 5; ++r)
      CHECK(mr.recv[static_cast<std::size_t>(r)] ==
            expect[static_cast<std::size_t>(r)]);
  }
}
