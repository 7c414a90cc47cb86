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

#ifndef PGTUNE_BENCH_HPP
#define PGTUNE_BENCH_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pgtune/collectives.hpp"
#include "pgtune/cost_model.hpp"
#include "pgtune/mockups.hpp"
#include "pgtune/transport.hpp"

namespace pgtune {

/// One latency-measured operation for this rank.  Invoked collectively: the
/// same body runs on every rank of the group, once per observation.
using CollectiveBody = std::function<void(RankHandle&)>;

/// A named benchmarkable function.  `make_body` builds the per-message-size
/// body (buffers included); `min_msize_bytes` is the smallest legal message
/// for the function (its datatype extent), which the one-byte run-time
/// estimation probes.
struct BenchFunction {
  std::string id;
  std::int64_t min_msize_bytes = 1;
  std::function<CollectiveBody(std::int64_t msize_bytes)> make_body;
};

/// Raw latencies of one measurement run: no warm-up discard, no averaging,
/// samples in execution order.  Latencies are integer nanoseconds; the CSV
/// layer renders microseconds with three decimals, which is lossless.
struct SampleSet {
  std::string function_id;
  std::int64_t msize_bytes = 0;
  int nprocs = 1;
  int mpirun_idx = 0;
  std::vector<Nanos> latency_ns;
};

/// Knobs of the repetition-count estimation procedure.
struct NrepConfig {
  double rse_threshold_1byte = 0.01;  ///< stop 1-byte runs below this RSE
  double rse_threshold_batch = 0.05;  ///< second batch trigger at msize
  std::int64_t b1 = 5;                ///< first batch size
  std::int64_t b2 = 5;                ///< second batch size (0 = never)
  std::int64_t min_reps = 5;          ///< lower bound K on nrep
  int nmpiruns = 5;                   ///< independent runs per measurement
  std::int64_t convergence_cap = 10000;  ///< 1-byte observations before giving up
};

/// Throws ConfigError unless thresholds lie in (0,1), b1 >= 1, b2 >= 0,
/// min_reps >= 1, nmpiruns >= 1 and convergence_cap >= 2.
void validate_nrep_config(const NrepConfig& cfg);

/// Relative standard error: (sample standard deviation / sqrt(N)) / mean.
/// Throws DegenerateSamples when N < 2 or the mean is not positive.
double rse(std::span<const Nanos> samples);

/// Rank-side timing loop: nrep observations, each one
///   dissemination barrier -> clock alignment -> timed body -> exchange.
/// The recorded latency of an observation is the maximum per-rank elapsed
/// time; the barrier and the alignment are outside the timed window.  Every
/// rank returns the same vector.
std::vector<Nanos> timed_observations(RankHandle& rh, const CollectiveBody& body,
                                      std::int64_t nrep);

/// Smallest-message run-time estimation: per run, timed observations are
/// appended until their RSE drops below rse_threshold_1byte, and the run's
/// cumulative time (barriers included — it is wall time actually spent) is
/// recorded; the estimate is the maximum cumulative time over nmpiruns
/// independent runs.  Throws NonConvergence when a run exhausts
/// convergence_cap observations.
Nanos estimate_t1(const BenchFunction& fn, int nprocs, const NrepConfig& cfg,
                  const CostModel& model, Mode mode);

/// The repetition formula: max{ceil(t1 / t_msize), min_reps}.  Throws
/// DegenerateSamples when t_msize <= 0 (an all-zero batch has no usable
/// minimum) and ConfigError on t1 <= 0 or min_reps < 1.
std::int64_t nrep_from_estimates(Nanos t1_ns, Nanos t_msize_ns,
                                 std::int64_t min_reps);

/// Repetition count for one message size: b1 timed observations, b2 more if
/// their RSE is still at or above rse_threshold_batch, then
/// nrep_from_estimates(t1, min over the batch, min_reps).
std::int64_t estimate_nrep(const BenchFunction& fn, std::int64_t msize_bytes,
                           Nanos t1_ns, int nprocs, const NrepConfig& cfg,
                           const CostModel& model, Mode mode);

struct BenchPlanItem {
  BenchFunction function;
  std::vector<std::int64_t> msizes;
};

using SampleSink = std::function<void(const SampleSet&)>;

/// Full measurement pipeline: per function, estimate the 1-byte run time
/// once; per message size, estimate nrep, then perform nmpiruns independent
/// runs (fresh transport, advancing sub-seed) and emit every run's raw
/// SampleSet in order.  Throws EmptyInput on an empty plan or an item with
/// no message sizes.
void run_benchmark(std::span<const BenchPlanItem> plan, int nprocs,
                   const NrepConfig& cfg, const CostModel& model, Mode mode,
                   const SampleSink& sink);

// ---------------------------------------------------------------------------
// Plan construction
// ---------------------------------------------------------------------------

/// Shared settings for benchmark-plan bodies.
struct PlanOptions {
  Datatype datatype = Datatype::Byte;
  ReduceOp op = ReduceOp::Bor;
  /// Algorithms used both for the plain collectives and inside mock-ups,
  /// plus the chunk size C.
  MockupConfig mockup{};
  /// Per-rank scratch arena capacities for mock-up bodies.
  std::size_t msg_arena_bytes = 104857600;
  std::size_t int_arena_bytes = 10240;
};

/// Maps one benchmark message size to a concrete call.  `msize_bytes` is the
/// per-rank block: the bytes each rank contributes (or receives, for the
/// rooted scatter family) per peer-visible block.  Rules: SCATTER and
/// REDUCE_SCATTER_BLOCK take count = p * (msize/extent) so each rank's share
/// is msize bytes; ALLTOALL takes the per-pair count msize/extent; every
/// other regular kind takes count = msize/extent.  Throws ConfigError for
/// irregular kinds (no size mapping exists), non-positive sizes, and sizes
/// not divisible by the datatype extent.
CollectiveCall call_for_msize(CollectiveKind kind, int nprocs,
                              std::int64_t msize_bytes, Datatype datatype,
                              ReduceOp op);

/// Function ids used in benchmark output: "<kind>_default" for the
/// configured algorithm, the mock-up's own name for a mock-up, and
/// "<kind>_tuned" for dispatch-routed runs.
std::string default_function_id(CollectiveKind kind);
std::string tuned_function_id(CollectiveKind kind);

/// A function timing the configured algorithm of `kind` directly.
BenchFunction make_default_function(CollectiveKind kind, int nprocs,
                                    const PlanOptions& opt);

/// A function timing one mock-up as a drop-in for its left-hand-side kind,
/// with per-rank scratch arenas of the configured capacities.
BenchFunction make_mockup_function(MockupId id, int nprocs,
                                   const PlanOptions& opt);

/// Externally supplied execution of one collective call (e.g. a tuned
/// runtime's dispatcher); send/recv follow the execute_collective contracts.
using CollectiveExec =
    std::function<void(RankHandle&, const CollectiveCall&,
                       std::span<const std::byte>, std::span<std::byte>)>;

/// A function timing `exec` as a drop-in for `kind`: per message size it
/// builds the standard call and per-rank buffers and hands every execution
/// to `exec`.
BenchFunction make_exec_function(std::string id, CollectiveKind kind,
                                 int nprocs, const PlanOptions& opt,
                                 CollectiveExec exec);

// ---------------------------------------------------------------------------
// CSV interface
// ---------------------------------------------------------------------------

struct CsvMeta {
  int nprocs = 1;
  Mode mode = Mode::Virtual;
  std::uint64_t seed = 1;
};

/// Writes the metadata header (`# key=value` lines), the column header
/// `function,msize_bytes,nprocs,mpirun_idx,rep_idx,latency_us`, one row per
/// sample, then any footer lines verbatim (each must start with '#').
void write_samples_csv(std::ostream& out, const CsvMeta& meta,
                       std::span<const SampleSet> sets,
                       std::span<const std::string> footer_lines = {});

struct CsvData {
  CsvMeta meta;
  std::map<std::string, std::string> raw_meta;  ///< all parsed key=value pairs
  std::vector<SampleSet> sets;
  std::vector<std::string> footer_lines;  ///< trailing '#' lines, verbatim
};

/// Parses what write_samples_csv produces (tolerating extra whitespace in
/// metadata).  Throws ParseError with a line number on malformed input.
CsvData read_samples_csv(std::istream& in);

}  // namespace pgtune

#endif  // PGTUNE_BENCH_HPP
