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

#ifndef PGTUNE_MOCKUPS_HPP
#define PGTUNE_MOCKUPS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pgtune/collectives.hpp"

namespace pgtune {

/// The 22 mock-up implementations.  Each one re-expresses a collective (its
/// "left-hand side") as a composition of other collectives that is
/// semantically equivalent, so it can stand in as a drop-in replacement when
/// it happens to be faster.  Identifiers are `<lhs>_as_<replacement parts>`
/// and are the stable names used in profile files and CLI output.
enum class MockupId {
  AllgatherAsGatherBcast,              // 1
  AllgatherAsAlltoall,                 // 2
  AllgatherAsAllreduce,                // 3
  AllgatherAsAllgatherv,               // 4
  AllreduceAsReduceBcast,              // 5
  AllreduceAsReducescatterblockAllgather,  // 6
  AllreduceAsReducescatterAllgatherv,  // 7
  AlltoallAsAlltoallv,                 // 8
  BcastAsAllgatherv,                   // 9
  BcastAsScatterAllgather,             // 10
  GatherAsAllgather,                   // 11
  GatherAsGatherv,                     // 12
  GatherAsReduce,                      // 13
  ReduceAsAllreduce,                   // 14
  ReduceAsReducescatterblockGather,    // 15
  ReduceAsReducescatterGatherv,        // 16
  ReducescatterblockAsReduceScatter,   // 17
  ReducescatterblockAsReducescatter,   // 18
  ReducescatterblockAsAllreduce,       // 19
  ScanAsExscanReducelocal,             // 20
  ScatterAsBcast,                      // 21
  ScatterAsScatterv,                   // 22
};

inline constexpr int kMockupCount = 22;

const char* mockup_name(MockupId id) noexcept;  // "allgather_as_gather_bcast"
std::optional<MockupId> parse_mockup(std::string_view name);

/// The collective kind a mock-up replaces.
CollectiveKind mockup_lhs(MockupId id) noexcept;

/// All mock-ups replacing `kind`, in identifier order.  Nine kinds have
/// replacements; the rest return an empty list.
const std::vector<MockupId>& mockups_of(CollectiveKind kind);

/// Tuning knobs shared by all mock-ups of one runtime instance.
struct MockupConfig {
  /// Chunk size C for the chunked reduce-scatter splits (mock-ups 7 and 16).
  /// Must satisfy 1 <= C <= max(n, 1) for the call being executed.
  std::int64_t chunk_size_C = 1;
  /// Algorithms the composed right-hand-side collectives run with.
  AlgorithmTable algorithms = default_algorithms();
};

/// Rounds n up to the next multiple of p by appending zero-valued padding
/// elements; at most p-1 are ever added.
std::int64_t pad_count(std::int64_t n, int p);

/// Splits n elements into ceil(n/C) chunks of size C (last possibly short)
/// and deals the chunks round-robin to ranks; returns how many elements each
/// rank ends up with.  Sum equals n; no entry exceeds max(n/p + C, C).
std::vector<std::int64_t> chunk_counts(std::int64_t n, int p, std::int64_t C);

/// Extra per-rank memory a mock-up needs beyond the caller's own buffers.
/// Figures are the per-rank maximum over the group: rooted compositions with
/// asymmetric needs (scratch only away from the root, say) still report the
/// maximum, while each rank allocates only its own share at execution time.
struct MemoryRequirement {
  std::int64_t msg_bytes = 0;  // payload scratch
  std::int64_t int_elems = 0;  // count/displacement slots of kIntSlotBytes
};

inline constexpr int kIntSlotBytes = static_cast<int>(sizeof(std::int64_t));

MemoryRequirement extra_memory_required(MockupId id,
                                        const CollectiveCall& call,
                                        const MockupConfig& cfg);

/// Two bump-pointer arenas (payload bytes and count/displacement slots) that
/// a mock-up draws scratch from.  Capacities are fixed at construction;
/// every allocation is zero-filled; release_all() drops all allocations at
/// once (mock-ups release everything at call exit).  High-water marks record
/// the largest concurrent footprint in bytes since the last reset.
class ScratchBuffers {
 public:
  ScratchBuffers(std::size_t msg_capacity_bytes,
                 std::size_t int_capacity_bytes);

  std::span<std::byte> alloc_msg(std::int64_t bytes);
  std::span<std::int64_t> alloc_ints(std::int64_t slots);
  void release_all() noexcept;

  std::size_t msg_capacity() const noexcept { return msg_.size(); }
  std::size_t int_capacity() const noexcept {
    return ints_.size() * sizeof(std::int64_t);
  }
  std::size_t msg_high_water() const noexcept { return msg_high_; }
  std::size_t int_high_water() const noexcept { return int_high_; }
  void reset_high_water() noexcept {
    msg_high_ = 0;
    int_high_ = 0;
  }

 private:
  std::vector<std::byte> msg_;
  std::vector<std::int64_t> ints_;
  std::size_t msg_used_ = 0, int_used_ = 0;  // bytes / slots
  std::size_t msg_high_ = 0, int_high_ = 0;  // bytes / bytes
};

/// Runs mock-up `id` as a drop-in replacement for `call` on this rank.
/// Buffer contracts are those of execute_collective for the left-hand-side
/// kind, except that a BCAST root must pass its full recv buffer (mock-up
/// compositions may route the root's data through other ranks and back).
///
/// Throws KindMismatch when call.kind is not the mock-up's left-hand side
/// and InsufficientScratch — before touching recv or moving any message —
/// when the Table of requirements exceeds either arena's capacity.  The
/// capacity check uses the group-wide per-rank maximum on every rank, so
/// the whole group agrees on success or failure.  Scratch is fully released
/// on every exit path.
void execute_mockup(RankHandle& rh, MockupId id, const CollectiveCall& call,
                    std::span<const std::byte> send, std::span<std::byte> recv,
                    ScratchBuffers& scratch, const MockupConfig& cfg);

}  // namespace pgtune

#endif  // PGTUNE_MOCKUPS_HPP
