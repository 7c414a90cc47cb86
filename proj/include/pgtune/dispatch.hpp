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

#ifndef PGTUNE_DISPATCH_HPP
#define PGTUNE_DISPATCH_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgtune/collectives.hpp"
#include "pgtune/mockups.hpp"
#include "pgtune/profile.hpp"
#include "pgtune/transport.hpp"

namespace pgtune {

enum class DispatchReason {
  ProfileHit,          ///< a range matched and the scratch arenas suffice
  NoProfile,           ///< no profile for the kind, or no containing range
  NprocsMismatch,      ///< the kind has profiles, but none for this group size
  InsufficientScratch  ///< range matched, but the mock-up needs more scratch
};

const char* dispatch_reason_name(DispatchReason reason) noexcept;

struct DispatchDecision {
  CollectiveKind kind = CollectiveKind::Bcast;
  std::int64_t msize_bytes = 0;
  std::optional<MockupId> chosen;  ///< empty = Default ran
  DispatchReason reason = DispatchReason::NoProfile;
};

struct TunedConfig {
  int nprocs = 1;
  std::size_t msg_arena_bytes = 104857600;
  std::size_t int_arena_bytes = 10240;
  /// Chunk size and the algorithms both the Default path and the mock-ups'
  /// composed collectives run with.
  MockupConfig mockup{};
};

/// The tuned runtime: an immutable profile index keyed by (collective,
/// group size), one pre-allocated scratch arena pair per rank, and an
/// append-only decision log.  Drive it with one group at a time; rank 0's
/// dispatch appends the single log entry for each collective call.
struct TunedRuntime {
  TunedConfig config;
  std::map<std::pair<int, int>, Profile> profiles;  // (kind, nprocs) -> profile
  std::vector<ScratchBuffers> scratch;              // one arena pair per rank
  std::vector<DispatchDecision> log;
};

/// Builds the runtime from in-memory profiles.  Validates each profile,
/// requires every named mock-up to replace the profile's own collective
/// (KindMismatch otherwise), and rejects two profiles for the same
/// (collective, group size) as ambiguous (ConfigError).
TunedRuntime make_tuned(std::vector<Profile> profiles, const TunedConfig& config);

/// Loads every "*.profile" file under `profile_dir` (sorted by name for
/// determinism) and builds the runtime.  A missing or empty directory yields
/// a runtime with no profiles.  Malformed files fail fast as ParseError
/// naming the file.
TunedRuntime init_tuned(const std::string& profile_dir, const TunedConfig& config);

/// The profile-lookup key of a call: the per-rank block in bytes (count/p
/// elements for the rooted scatter family, the per-pair count for ALLTOALL,
/// the per-rank count otherwise, and the counts total for irregular kinds).
std::int64_t message_size_bytes(const CollectiveCall& call);

/// Runs `call` through the profile index: a range hit whose mock-up fits the
/// arenas executes the mock-up, everything else falls back to the Default
/// algorithm — scratch exhaustion degrades, it never throws.  Must be
/// invoked by every rank of the group; buffer contracts are those of
/// execute_mockup (a BCAST root passes its full recv buffer).  Appends one
/// DispatchDecision per collective call, in call order.
void dispatch(TunedRuntime& rt, RankHandle& rh, const CollectiveCall& call,
              std::span<const std::byte> send, std::span<std::byte> recv);

/// One '#'-prefixed line per distinct (collective, msize) decision in call
/// order — "# <collective> <msize> <Default|mockup_name>" — followed by the
/// two arena-capacity lines.
std::vector<std::string> replacement_footer(const TunedRuntime& rt);

}  // namespace pgtune

#endif  // PGTUNE_DISPATCH_HPP
