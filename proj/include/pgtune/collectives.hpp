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

#ifndef PGTUNE_COLLECTIVES_HPP
#define PGTUNE_COLLECTIVES_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgtune/datatype.hpp"
#include "pgtune/transport.hpp"

namespace pgtune {

/// Every collective kind a guideline's left- or right-hand side mentions.
enum class CollectiveKind {
  Bcast,
  Gather,
  Gatherv,
  Scatter,
  Scatterv,
  Allgather,
  Allgatherv,
  Alltoall,
  Alltoallv,
  Reduce,
  Allreduce,
  ReduceScatter,
  ReduceScatterBlock,
  Scan,
  Exscan,
};

inline constexpr int kCollectiveKindCount = 15;

const char* collective_name(CollectiveKind kind) noexcept;      // "ALLGATHER"
const char* collective_mpi_name(CollectiveKind kind) noexcept;  // "MPI_Allgather"

/// Accepts canonical names in any case, with or without the MPI_ prefix
/// ("allgather", "ALLGATHER", "MPI_Allgather").
std::optional<CollectiveKind> parse_collective(std::string_view name);

bool kind_is_rooted(CollectiveKind kind) noexcept;
bool kind_reduces(CollectiveKind kind) noexcept;
/// Kinds taking explicit per-rank counts (the `*v` family plus the
/// counts-driven reduce-scatter).
bool kind_irregular(CollectiveKind kind) noexcept;
/// Irregular kinds that also take displacements (all but ReduceScatter).
bool kind_has_displs(CollectiveKind kind) noexcept;

/// One collective invocation, shared by every rank of the group.
///
/// `count` follows each kind's send-count convention:
///   - SCATTER and REDUCE_SCATTER_BLOCK: total elements at the root /
///     in the reduced vector; each rank ends up with count/p (p must divide).
///   - ALLTOALL: elements per (src,dst) pair; buffers hold p*count.
///   - REDUCE_SCATTER: total reduced elements; must equal the sum of counts.
///   - irregular kinds: per-rank element counts come from `counts`, with
///     `displs` the packed prefix sums of `counts`.
///   - everything else: elements contributed per rank.
struct CollectiveCall {
  CollectiveKind kind = CollectiveKind::Bcast;
  int nprocs = 1;
  std::int64_t count = 0;
  Datatype datatype = Datatype::Byte;
  ReduceOp op = ReduceOp::Sum;
  int root = 0;
  std::vector<std::int64_t> counts;
  std::vector<std::int64_t> displs;
};

/// Validates the call against the kind's conventions (root range, op/datatype
/// pairing, divisibility, counts/displs shape).  Throws on violation.
void validate_call(const CollectiveCall& call);

/// Required buffer sizes in elements for `rank`.  Rooted kinds report 0 for
/// buffers that are insignificant away from the root (e.g. GATHER recv).
std::int64_t send_elems(const CollectiveCall& call, int rank);
std::int64_t recv_elems(const CollectiveCall& call, int rank);

std::int64_t sum_counts(const CollectiveCall& call);

/// Chooses the algorithm variant each kind runs with.  Variant names are
/// stable identifiers used in configuration (`default_alg.<kind>=<variant>`).
struct AlgorithmTable {
  std::string variants[kCollectiveKindCount];

  const std::string& variant(CollectiveKind kind) const {
    return variants[static_cast<int>(kind)];
  }
  std::string& variant(CollectiveKind kind) {
    return variants[static_cast<int>(kind)];
  }
};

/// The shipped table.  Deliberately includes slow choices (linear broadcast,
/// binomial gather) so that replacement opportunities exist under the cost
/// model.
AlgorithmTable default_algorithms();

/// Known variant names for a kind, in preference-free listing order.
const std::vector<std::string>& algorithm_variants(CollectiveKind kind);

/// Throws ConfigError if `variant` is not implemented for `kind`.
void validate_algorithm(CollectiveKind kind, std::string_view variant);

/// Runs one collective on this rank using the given algorithm variant.
/// Must be invoked by every rank of the group with the same call/variant.
///
/// Buffer contracts, in elements (multiply by extent for bytes):
///   send: send_elems(call, rank); recv: recv_elems(call, rank).  Two
///   relaxations exist for composition: BCAST accepts an empty recv at the
///   root (the root already holds the data in send), and rooted kinds accept
///   (and ignore) empty insignificant buffers.  EXSCAN writes nothing on
///   rank 0 but still requires the buffer.  Zero-element transfers send no
///   messages; count 0 leaves recv untouched.
void execute_collective(RankHandle& rh, const CollectiveCall& call,
                        std::string_view variant,
                        std::span<const std::byte> send,
                        std::span<std::byte> recv);

/// Predicted makespan (max over ranks of virtual elapsed time) of one
/// collective executed from an aligned start, under a jitter-free model.
/// Independent hand-written recurrence over per-rank clock/port vectors; it
/// shares only the nanosecond quantizers with the transport, so agreement
/// with the simulator is meaningful and exact (integer equality).
Nanos algorithm_cost_schedule(const CollectiveCall& call,
                              std::string_view variant, const CostModel& m);

}  // namespace pgtune

#endif  // PGTUNE_COLLECTIVES_HPP
