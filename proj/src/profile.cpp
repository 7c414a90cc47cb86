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

#include "pgtune/profile.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "pgtune/error.hpp"

namespace pgtune {

// ---------------------------------------------------------------------------
// Profile structure
// ---------------------------------------------------------------------------

void validate_profile(const Profile& profile) {
  if (!parse_collective(profile.collective)) {
    fail(Errc::InvariantViolation,
         "profile names unresolvable collective '" + profile.collective + "'");
  }
  if (profile.nprocs < 1) {
    fail(Errc::InvariantViolation, "profile group size must be >= 1");
  }
  for (const auto& [id, mockup] : profile.impls) {
    (void)mockup;
    if (id < 1) {
      fail(Errc::InvariantViolation,
           "implementation id " + std::to_string(id) + " must be >= 1");
    }
  }
  const MessageRange* prev = nullptr;
  for (const MessageRange& r : profile.ranges) {
    if (r.start_bytes < 0 || r.start_bytes > r.end_bytes) {
      fail(Errc::InvariantViolation,
           "range " + std::to_string(r.start_bytes) + ".." +
               std::to_string(r.end_bytes) + " is not a valid interval");
    }
    if (prev != nullptr && prev->end_bytes >= r.start_bytes) {
      fail(Errc::InvariantViolation,
           "ranges must be sorted ascending and pairwise disjoint; " +
               std::to_string(prev->start_bytes) + ".." +
               std::to_string(prev->end_bytes) + " collides with " +
               std::to_string(r.start_bytes) + ".." +
               std::to_string(r.end_bytes));
    }
    if (profile.impls.find(r.alg_id) == profile.impls.end()) {
      fail(Errc::InvariantViolation,
           "range uses implementation id " + std::to_string(r.alg_id) +
               " that the profile does not declare");
    }
    prev = &r;
  }
}

CollectiveKind profile_kind(const Profile& profile) {
  const auto kind = parse_collective(profile.collective);
  if (!kind) {
    fail(Errc::InvariantViolation,
         "profile names unresolvable collective '" + profile.collective + "'");
  }
  return *kind;
}

std::optional<MockupId> lookup(const Profile& profile, std::int64_t msize_bytes) {
  // Last range whose start is <= msize is the only containment candidate.
  const auto it = std::upper_bound(
      profile.ranges.begin(), profile.ranges.end(), msize_bytes,
      [](std::int64_t value, const MessageRange& r) { return value < r.start_bytes; });
  if (it == profile.ranges.begin()) return std::nullopt;
  const MessageRange& r = *std::prev(it);
  if (msize_bytes > r.end_bytes) return std::nullopt;
  return profile.impls.at(r.alg_id);
}

std::optional<MockupId> lookup_linear(const Profile& profile,
                                      std::int64_t msize_bytes) {
  for (const MessageRange& r : profile.ranges) {
    if (r.start_bytes <= msize_bytes && msize_bytes <= r.end_bytes) {
      return profile.impls.at(r.alg_id);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "# pgtune profile";

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  fail(Errc::ParseError, "line " + std::to_string(line_no) + ": " + what);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

struct Cursor {
  std::vector<std::pair<std::size_t, std::string>> lines;  // (line no, payload)
  std::size_t next = 0;

  // Returns the next non-empty line with any trailing '#' comment removed.
  std::pair<std::size_t, std::string> take(const char* expected) {
    while (next < lines.size()) {
      auto [no, text] = lines[next++];
      const std::size_t hash = text.find('#');
      if (hash != std::string::npos) text.resize(hash);
      const std::string_view payload = trim(text);
      if (payload.empty()) continue;
      return {no, std::string(payload)};
    }
    fail(Errc::ParseError,
         std::string("unexpected end of profile; expected ") + expected);
  }

  bool exhausted() {
    while (next < lines.size()) {
      auto [no, text] = lines[next];
      const std::size_t hash = text.find('#');
      if (hash != std::string::npos) text.resize(hash);
      if (!trim(text).empty()) return false;
      ++next;
    }
    return true;
  }
};

std::vector<std::string> tokens_of(const std::string& payload) {
  std::vector<std::string> out;
  std::istringstream in(payload);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::int64_t parse_i64(const std::string& tok, std::size_t line_no,
                       const char* what) {
  std::int64_t value = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    parse_fail(line_no, std::string("malformed ") + what + " '" + tok + "'");
  }
  return value;
}

int parse_int(const std::string& tok, std::size_t line_no, const char* what) {
  const std::int64_t v = parse_i64(tok, line_no, what);
  if (v < INT32_MIN || v > INT32_MAX) {
    parse_fail(line_no, std::string(what) + " out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

std::string write_profile_text(const Profile& profile) {
  validate_profile(profile);
  std::ostringstream out;
  out << kMagic << "\n";
  out << profile.collective << "\n";
  out << profile.nprocs << " # nb. of. processes\n";
  out << profile.impls.size() << "    # nb. of mock-up impl.\n";
  for (const auto& [id, mockup] : profile.impls) {
    out << id << ' ' << mockup_name(mockup) << "\n";
  }
  out << profile.ranges.size() << "    # nb. of ranges\n";
  for (const MessageRange& r : profile.ranges) {
    out << r.start_bytes << ' ' << r.end_bytes << ' ' << r.alg_id << "\n";
  }
  return out.str();
}

Profile parse_profile_text(std::string_view text) {
  Cursor cur;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string_view line =
        text.substr(start, nl == std::string_view::npos ? text.size() - start
                                                        : nl - start);
    ++line_no;
    cur.lines.emplace_back(line_no, std::string(line));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }

  // The magic line is itself '#'-prefixed, so it is matched before comment
  // stripping applies.
  std::size_t magic_idx = cur.next;
  while (magic_idx < cur.lines.size() &&
         trim(cur.lines[magic_idx].second).empty()) {
    ++magic_idx;
  }
  if (magic_idx >= cur.lines.size() ||
      trim(cur.lines[magic_idx].second) != kMagic) {
    parse_fail(magic_idx < cur.lines.size() ? cur.lines[magic_idx].first : 1,
               "profile must start with '" + std::string(kMagic) + "'");
  }
  cur.next = magic_idx + 1;

  Profile profile;

  {
    auto [no, payload] = cur.take("a collective name");
    const auto toks = tokens_of(payload);
    if (toks.size() != 1) parse_fail(no, "expected a single collective name");
    if (!parse_collective(toks[0])) {
      parse_fail(no, "unknown collective '" + toks[0] + "'");
    }
    const auto kind = parse_collective(toks[0]);
    profile.collective = collective_mpi_name(*kind);
  }
  {
    auto [no, payload] = cur.take("the number of processes");
    const auto toks = tokens_of(payload);
    if (toks.size() != 1) parse_fail(no, "expected a single process count");
    profile.nprocs = parse_int(toks[0], no, "process count");
    if (profile.nprocs < 1) parse_fail(no, "process count must be >= 1");
  }

  int impl_count = 0;
  {
    auto [no, payload] = cur.take("the number of mock-up implementations");
    const auto toks = tokens_of(payload);
    if (toks.size() != 1) parse_fail(no, "expected a single implementation count");
    impl_count = parse_int(toks[0], no, "implementation count");
    if (impl_count < 0) parse_fail(no, "implementation count must be >= 0");
  }
  for (int i = 0; i < impl_count; ++i) {
    auto [no, payload] = cur.take("an implementation line '<id> <name>'");
    const auto toks = tokens_of(payload);
    if (toks.size() != 2) {
      parse_fail(no, "expected '<id> <mockup_name>', got '" + payload + "'");
    }
    const int id = parse_int(toks[0], no, "implementation id");
    const auto mockup = parse_mockup(toks[1]);
    if (!mockup) parse_fail(no, "unknown mock-up '" + toks[1] + "'");
    if (!profile.impls.emplace(id, *mockup).second) {
      parse_fail(no, "duplicate implementation id " + std::to_string(id));
    }
  }

  int range_count = 0;
  {
    auto [no, payload] = cur.take("the number of ranges");
    const auto toks = tokens_of(payload);
    if (toks.size() != 1) parse_fail(no, "expected a single range count");
    range_count = parse_int(toks[0], no, "range count");
    if (range_count < 0) parse_fail(no, "range count must be >= 0");
  }
  for (int i = 0; i < range_count; ++i) {
    auto [no, payload] = cur.take("a range line '<start> <end> <alg_id>'");
    const auto toks = tokens_of(payload);
    if (toks.size() != 3) {
      parse_fail(no, "expected '<start> <end> <alg_id>', got '" + payload + "'");
    }
    MessageRange r;
    r.start_bytes = parse_i64(toks[0], no, "range start");
    r.end_bytes = parse_i64(toks[1], no, "range end");
    r.alg_id = parse_int(toks[2], no, "implementation id");
    profile.ranges.push_back(r);
  }

  if (!cur.exhausted()) {
    parse_fail(cur.lines[cur.next].first, "trailing content after the ranges");
  }

  validate_profile(profile);
  return profile;
}

void write_profile(const Profile& profile, const std::string& path) {
  const std::string text = write_profile_text(profile);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) {
    fail(Errc::ParseError, "cannot write profile file '" + path + "'");
  }
}

Profile parse_profile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::ParseError, "cannot open profile file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_profile_text(buf.str());
  } catch (const Error& e) {
    if (e.code() == Errc::ParseError) {
      fail(Errc::ParseError, path + ": " + e.what());
    }
    throw;
  }
}

std::string profile_filename(CollectiveKind kind, int nprocs) {
  return std::string(collective_mpi_name(kind)) + "." + std::to_string(nprocs) +
         ".profile";
}

// ---------------------------------------------------------------------------
// Violation detection
// ---------------------------------------------------------------------------

namespace {

double median_ns(std::vector<Nanos> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return static_cast<double>(values[n / 2]);
  return (static_cast<double>(values[n / 2 - 1]) +
          static_cast<double>(values[n / 2])) /
         2.0;
}

double median_of_doubles(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

// Function-id classification: Default runs of a kind, or one mock-up.
struct FunctionKey {
  bool is_default = false;
  CollectiveKind kind = CollectiveKind::Bcast;
  std::optional<MockupId> mockup;
};

std::optional<FunctionKey> classify(const std::string& function_id) {
  if (const auto mockup = parse_mockup(function_id)) {
    return FunctionKey{false, mockup_lhs(*mockup), mockup};
  }
  for (int k = 0; k < kCollectiveKindCount; ++k) {
    const auto kind = static_cast<CollectiveKind>(k);
    if (function_id == default_function_id(kind)) {
      return FunctionKey{true, kind, std::nullopt};
    }
  }
  return std::nullopt;  // foreign id (e.g. tuned runs); not part of the scan
}

}  // namespace

double run_median_us(const SampleSet& run) {
  if (run.latency_ns.empty()) {
    fail(Errc::EmptyInput,
         "run " + std::to_string(run.mpirun_idx) + " of " + run.function_id +
             " has no samples");
  }
  return median_ns(run.latency_ns) / 1000.0;
}

double median_of_medians(std::span<const SampleSet> runs) {
  if (runs.empty()) {
    fail(Errc::EmptyInput, "median-of-medians needs at least one run");
  }
  std::vector<double> run_medians;
  run_medians.reserve(runs.size());
  for (const SampleSet& run : runs) {
    if (run.latency_ns.empty()) {
      fail(Errc::EmptyInput,
           "run " + std::to_string(run.mpirun_idx) + " of " + run.function_id +
               " has no samples");
    }
    run_medians.push_back(median_ns(run.latency_ns));
  }
  return median_of_doubles(std::move(run_medians)) / 1000.0;
}

DetectResult detect_violations(std::span<const SampleSet> records,
                               double replacement_threshold) {
  if (replacement_threshold < 0.0 || replacement_threshold >= 1.0) {
    fail(Errc::ConfigError, "replacement threshold must lie in [0, 1)");
  }

  // (kind, msize) -> default runs / per-mock-up runs.
  struct Cell {
    std::vector<SampleSet> default_runs;
    std::map<MockupId, std::vector<SampleSet>> mockup_runs;
  };
  std::map<std::pair<int, std::int64_t>, Cell> grid;
  std::optional<int> nprocs;

  for (const SampleSet& record : records) {
    const auto key = classify(record.function_id);
    if (!key) continue;
    if (nprocs && *nprocs != record.nprocs) {
      fail(Errc::KeyMismatch,
           "records span multiple group sizes (" + std::to_string(*nprocs) +
               " and " + std::to_string(record.nprocs) + ")");
    }
    nprocs = record.nprocs;
    Cell& cell = grid[{static_cast<int>(key->kind), record.msize_bytes}];
    if (key->is_default) {
      cell.default_runs.push_back(record);
    } else {
      cell.mockup_runs[*key->mockup].push_back(record);
    }
  }

  DetectResult result;
  std::map<CollectiveKind, std::vector<SizeVerdict>> winners_by_kind;

  for (const auto& [key, cell] : grid) {
    const auto kind = static_cast<CollectiveKind>(key.first);
    const std::int64_t msize = key.second;
    if (cell.default_runs.empty()) {
      fail(Errc::MissingDefault,
           std::string("no Default records for ") + collective_mpi_name(kind) +
               " at " + std::to_string(msize) + " bytes");
    }

    SizeVerdict verdict;
    verdict.kind = kind;
    verdict.msize_bytes = msize;
    verdict.default_median_us = median_of_medians(cell.default_runs);
    for (const auto& [mockup, runs] : cell.mockup_runs) {
      verdict.mockups.push_back({mockup, median_of_medians(runs)});
    }

    const MockupScore* best = nullptr;
    for (const MockupScore& score : verdict.mockups) {
      if (best == nullptr || score.median_us < best->median_us) best = &score;
    }
    if (best != nullptr &&
        best->median_us <=
            (1.0 - replacement_threshold) * verdict.default_median_us) {
      verdict.winner = best->id;
      verdict.improvement = 1.0 - best->median_us / verdict.default_median_us;
      winners_by_kind[kind].push_back(verdict);
    }
    result.report.verdicts.push_back(std::move(verdict));
  }

  for (const auto& [kind, verdicts] : winners_by_kind) {
    Profile profile;
    profile.collective = collective_mpi_name(kind);
    profile.nprocs = nprocs.value_or(1);

    std::set<MockupId> used;
    for (const SizeVerdict& v : verdicts) used.insert(*v.winner);
    std::map<MockupId, int> local_id;
    int next_id = 2;  // id 1 is the Default by convention
    for (MockupId id : used) {
      local_id[id] = next_id;
      profile.impls[next_id] = id;
      ++next_id;
    }
    for (const SizeVerdict& v : verdicts) {
      profile.ranges.push_back({v.msize_bytes, v.msize_bytes,
                                local_id.at(*v.winner)});
    }
    validate_profile(profile);
    result.profiles.push_back(std::move(profile));
  }
  return result;
}

}  // namespace pgtune
