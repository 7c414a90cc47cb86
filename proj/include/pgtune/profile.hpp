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

#ifndef PGTUNE_PROFILE_HPP
#define PGTUNE_PROFILE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgtune/bench.hpp"
#include "pgtune/collectives.hpp"
#include "pgtune/mockups.hpp"

namespace pgtune {

/// One replacement rule: messages of start..end bytes (both inclusive) run
/// the implementation with the profile-local id `alg_id`.
struct MessageRange {
  std::int64_t start_bytes = 0;
  std::int64_t end_bytes = 0;
  int alg_id = 0;
};

/// A per-collective, per-group-size table mapping message-size ranges to
/// replacement mock-ups.  `impls` maps the profile-local integer ids used in
/// the range lines to mock-up identities.
struct Profile {
  std::string collective;  ///< canonical name, e.g. "MPI_Scatter"
  int nprocs = 1;
  std::map<int, MockupId> impls;
  std::vector<MessageRange> ranges;  ///< sorted ascending, pairwise disjoint
};

/// Throws InvariantViolation unless: the collective name resolves, nprocs
/// >= 1, every range has start <= end, ranges are sorted and disjoint, and
/// every alg_id appears in `impls`.
void validate_profile(const Profile& profile);

CollectiveKind profile_kind(const Profile& profile);

/// O(log M) containment search over the sorted ranges; returns the mock-up
/// whose range holds msize, or nothing.
std::optional<MockupId> lookup(const Profile& profile, std::int64_t msize_bytes);

/// Reference implementation of the same containment rule by linear scan.
std::optional<MockupId> lookup_linear(const Profile& profile,
                                      std::int64_t msize_bytes);

/// Canonical text rendering:
///   # pgtune profile
///   <collective>
///   <p> # nb. of. processes
///   <k>    # nb. of mock-up impl.
///   <id> <mockup_name>          (k lines, ascending id)
///   <M>    # nb. of ranges
///   <start> <end> <alg_id>      (M lines)
/// Validates the profile first.
std::string write_profile_text(const Profile& profile);

/// Parses the canonical format, tolerating arbitrary token whitespace, blank
/// lines and trailing '#' comments.  Throws ParseError (with a line number)
/// on malformed or unresolvable names, InvariantViolation on bad ranges.
Profile parse_profile_text(std::string_view text);

/// File variants; the reader reports unreadable files as ParseError naming
/// the path.
void write_profile(const Profile& profile, const std::string& path);
Profile parse_profile(const std::string& path);

/// File-name convention inside a profile directory: "<collective>.<p>.profile".
std::string profile_filename(CollectiveKind kind, int nprocs);

// ---------------------------------------------------------------------------
// Violation detection
// ---------------------------------------------------------------------------

/// Median latency of one run, in microseconds; the median of an even-length
/// list is the mean of its two central values.  Throws EmptyInput on an
/// empty run.
double run_median_us(const SampleSet& run);

/// Median over per-run medians, in microseconds.  Each SampleSet is one run;
/// the median of an even-length list is the mean of its two central values.
/// Throws EmptyInput when there are no runs or a run has no samples.
double median_of_medians(std::span<const SampleSet> runs);

struct MockupScore {
  MockupId id;
  double median_us = 0.0;
};

/// Outcome at one (collective, message size) grid point.
struct SizeVerdict {
  CollectiveKind kind = CollectiveKind::Bcast;
  std::int64_t msize_bytes = 0;
  double default_median_us = 0.0;
  std::vector<MockupScore> mockups;  ///< ascending mock-up id
  std::optional<MockupId> winner;    ///< set only when fast enough to replace
  double improvement = 0.0;          ///< 1 - winner/default when winner is set
};

struct ViolationReport {
  std::vector<SizeVerdict> verdicts;  ///< ordered by (collective, msize)
};

struct DetectResult {
  ViolationReport report;
  std::vector<Profile> profiles;  ///< one per collective with >= 1 winner
};

/// Scans benchmark records for guideline violations.  Records are grouped by
/// function id ("<kind>_default" or a mock-up name; other ids are ignored)
/// and message size.  Per grid point the best mock-up by median-of-medians
/// wins iff its latency is at most (1 - replacement_threshold) times the
/// Default's; ties go to the lowest mock-up id.  Profiles carry one
/// start=end range per winning size and local ids 2.. in mock-up id order.
/// Throws MissingDefault when a grid point has mock-up records but no
/// Default records, KeyMismatch when records disagree on the group size,
/// and ConfigError for a threshold outside [0, 1).
DetectResult detect_violations(std::span<const SampleSet> records,
                               double replacement_threshold = 0.10);

}  // namespace pgtune

#endif  // PGTUNE_PROFILE_HPP
