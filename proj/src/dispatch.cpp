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

#include "pgtune/dispatch.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <utility>

#include "pgtune/error.hpp"

namespace pgtune {

const char* dispatch_reason_name(DispatchReason reason) noexcept {
  switch (reason) {
    case DispatchReason::ProfileHit:
      return "profile-hit";
    case DispatchReason::NoProfile:
      return "no-profile";
    case DispatchReason::NprocsMismatch:
      return "nprocs-mismatch";
    case DispatchReason::InsufficientScratch:
      return "insufficient-scratch";
  }
  return "unknown";
}

TunedRuntime make_tuned(std::vector<Profile> profiles, const TunedConfig& config) {
  if (config.nprocs < 1) fail(Errc::ConfigError, "group size must be >= 1");

  TunedRuntime rt;
  rt.config = config;
  for (Profile& profile : profiles) {
    validate_profile(profile);
    const CollectiveKind kind = profile_kind(profile);
    for (const auto& [id, mockup] : profile.impls) {
      (void)id;
      if (mockup_lhs(mockup) != kind) {
        fail(Errc::KindMismatch,
             "profile for " + profile.collective + " names mock-up " +
                 mockup_name(mockup) + ", which replaces " +
                 collective_mpi_name(mockup_lhs(mockup)));
      }
    }
    const std::pair<int, int> key{static_cast<int>(kind), profile.nprocs};
    if (rt.profiles.count(key) != 0) {
      fail(Errc::ConfigError,
           "two profiles for " + profile.collective + " at " +
               std::to_string(profile.nprocs) + " processes are ambiguous");
    }
    rt.profiles.emplace(key, std::move(profile));
  }
  rt.scratch.reserve(static_cast<std::size_t>(config.nprocs));
  for (int r = 0; r < config.nprocs; ++r) {
    rt.scratch.emplace_back(config.msg_arena_bytes, config.int_arena_bytes);
  }
  return rt;
}

TunedRuntime init_tuned(const std::string& profile_dir, const TunedConfig& config) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(profile_dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".profile") {
      files.push_back(entry.path());
    }
  }
  // A missing directory simply provides no profiles.
  std::sort(files.begin(), files.end());

  std::vector<Profile> profiles;
  profiles.reserve(files.size());
  for (const fs::path& file : files) {
    profiles.push_back(parse_profile(file.string()));
  }
  try {
    return make_tuned(std::move(profiles), config);
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError || e.code() == Errc::KindMismatch) {
      fail(e.code(), "loading profiles from '" + profile_dir + "': " + e.what());
    }
    throw;
  }
}

std::int64_t message_size_bytes(const CollectiveCall& call) {
  const std::int64_t e = extent(call.datatype);
  if (kind_irregular(call.kind)) return sum_counts(call) * e;
  switch (call.kind) {
    case CollectiveKind::Scatter:
    case CollectiveKind::ReduceScatterBlock:
      return (call.count / call.nprocs) * e;
    default:
      return call.count * e;
  }
}

void dispatch(TunedRuntime& rt, RankHandle& rh, const CollectiveCall& call,
              std::span<const std::byte> send, std::span<std::byte> recv) {
  const int p = rh.nprocs();
  if (rh.rank() >= static_cast<int>(rt.scratch.size())) {
    fail(Errc::InvariantViolation,
         "tuned runtime initialised for " + std::to_string(rt.scratch.size()) +
             " ranks, dispatched from rank " + std::to_string(rh.rank()));
  }
  const std::int64_t msize = message_size_bytes(call);

  std::optional<MockupId> chosen;
  DispatchReason reason = DispatchReason::NoProfile;
  const auto it = rt.profiles.find({static_cast<int>(call.kind), p});
  if (it != rt.profiles.end()) {
    if (const auto hit = lookup(it->second, msize)) {
      // Memory admission before any work: the requirement is the per-rank
      // group maximum and every arena has the same capacity, so all ranks
      // reach the same verdict and either all run the mock-up or none does.
      const MemoryRequirement need =
          extra_memory_required(*hit, call, rt.config.mockup);
      ScratchBuffers& arenas = rt.scratch[static_cast<std::size_t>(rh.rank())];
      const bool fits =
          std::cmp_less_equal(need.msg_bytes, arenas.msg_capacity()) &&
          std::cmp_less_equal(need.int_elems * kIntSlotBytes,
                              arenas.int_capacity());
      if (fits) {
        chosen = hit;
        reason = DispatchReason::ProfileHit;
      } else {
        reason = DispatchReason::InsufficientScratch;
      }
    } else {
      reason = DispatchReason::NoProfile;
    }
  } else {
    for (const auto& [key, profile] : rt.profiles) {
      (void)profile;
      if (key.first == static_cast<int>(call.kind)) {
        reason = DispatchReason::NprocsMismatch;
        break;
      }
    }
  }

  if (rh.rank() == 0) rt.log.push_back({call.kind, msize, chosen, reason});

  if (chosen) {
    execute_mockup(rh, *chosen, call, send, recv,
                   rt.scratch[static_cast<std::size_t>(rh.rank())],
                   rt.config.mockup);
  } else {
    execute_collective(rh, call, rt.config.mockup.algorithms.variant(call.kind),
                       send, recv);
  }
}

std::vector<std::string> replacement_footer(const TunedRuntime& rt) {
  std::vector<std::string> lines;
  std::set<std::pair<int, std::int64_t>> seen;
  for (const DispatchDecision& d : rt.log) {
    if (!seen.insert({static_cast<int>(d.kind), d.msize_bytes}).second) continue;
    std::string line = "# ";
    line += collective_mpi_name(d.kind);
    line += ' ';
    line += std::to_string(d.msize_bytes);
    line += ' ';
    line += d.chosen ? mockup_name(*d.chosen) : "Default";
    lines.push_back(std::move(line));
  }
  lines.push_back("# msg_buffer_bytes=" +
                  std::to_string(rt.config.msg_arena_bytes));
  lines.push_back("# int_buffer_bytes=" +
                  std::to_string(rt.config.int_arena_bytes));
  return lines;
}

}  // namespace pgtune
