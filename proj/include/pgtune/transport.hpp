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

#ifndef PGTUNE_TRANSPORT_HPP
#define PGTUNE_TRANSPORT_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pgtune/cost_model.hpp"
#include "pgtune/time_units.hpp"

namespace pgtune {

namespace detail {
class Engine;
}

/// Per-rank view of a running SPMD group.  Rank programs receive one of
/// these and talk to the world exclusively through it.
///
/// Messaging is untagged and FIFO per ordered (src,dst) pair.  send() is
/// fully asynchronous: it never blocks and never advances the sender's
/// clock.  In virtual mode the message is stamped with an arrival time of
///
///   max(sender clock, sender port free) + alpha*(1+jitter) + beta*len
///
/// where the sender's injection port stays busy until that arrival, so
/// back-to-back sends from one rank serialize on the wire while the sender
/// itself runs ahead.  recv() blocks until the matching message exists and
/// advances the receiver's clock to max(own clock, arrival).
class RankHandle {
 public:
  int rank() const noexcept { return rank_; }
  int nprocs() const noexcept;
  const CostModel& model() const noexcept;
  Mode mode() const noexcept;

  void send(int dst, std::span<const std::byte> payload);
  std::vector<std::byte> recv(int src);

  /// Current virtual clock (virtual mode) or monotonic time since the run
  /// started (wallclock mode), in nanoseconds.
  Nanos now_ns() const;

  /// Advance this rank's virtual clock by `cost` to account for local
  /// compute (reductions).  No-op in wallclock mode, where real time is
  /// already passing.
  void charge_ns(Nanos cost);

  /// Measurement fence: every rank contributes one value and all ranks get
  /// the full vector back, indexed by rank.  Costless — no messages and no
  /// clock movement — it exists so the benchmark harness can agree on
  /// per-observation maxima without perturbing what it measures.
  std::vector<std::int64_t> fence_exchange(std::int64_t value);

  /// Measurement fence that additionally aligns every rank's virtual clock
  /// to the current global maximum (rendezvous only in wallclock mode).
  /// This is the "start the clock" point of a timed observation: the
  /// barrier that precedes it leaves bounded skew, and observations must
  /// start from a common origin to be repeatable.
  void sync_clocks();

 private:
  friend class detail::Engine;
  RankHandle(detail::Engine* engine, int rank) : engine_(engine), rank_(rank) {}

  detail::Engine* engine_;
  int rank_;
};

using RankProgram = std::function<void(RankHandle&)>;

struct RunStats {
  std::vector<Nanos> elapsed_ns;  // per rank: final clock - initial clock
  std::uint64_t messages_sent = 0;
};

/// Run `program` on p logically concurrent ranks and return per-rank elapsed
/// time.  Throws Deadlock when every live rank is blocked on a recv that can
/// never be satisfied, UnknownRank for out-of-range peers, and rethrows the
/// first failing rank's error (wrapping foreign exceptions in RankPanic).
///
/// Virtual mode runs the ranks under a deterministic scheduler: exactly one
/// rank executes at a time, a blocked rank resumes only when its message is
/// available, and ties are broken by (arrival time, rank id).  Two runs of
/// the same program under the same model produce bit-identical clocks.
/// Wallclock mode gives every rank its own OS thread, free-running, with
/// per-rank elapsed measured on the monotonic clock.
RunStats run_spmd(int nprocs, const CostModel& model, Mode mode,
                  const RankProgram& program);

}  // namespace pgtune

#endif  // PGTUNE_TRANSPORT_HPP
