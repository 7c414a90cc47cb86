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

#ifndef PGTUNE_CLI_HPP
#define PGTUNE_CLI_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgtune/bench.hpp"
#include "pgtune/config.hpp"
#include "pgtune/mockups.hpp"

namespace pgtune {

/// One `--module=<collective>:alg=<mockup>` selection: benchmark only this
/// mock-up (plus the Default) for this collective.
struct ModulePin {
  CollectiveKind kind = CollectiveKind::Bcast;
  MockupId alg = MockupId::AllgatherAsGatherBcast;
};

/// Parses "<collective>:alg=<mockup>".  Throws UnknownCollective or
/// UnknownMockup with the valid names listed, and ConfigError when the flag
/// does not match the grammar.  The mock-up must replace the named
/// collective.
ModulePin parse_module_flag(std::string_view flag);

/// The measurement plan: with no pins, the Default and every mock-up of each
/// collective that has replacements; with pins, only the pinned collectives,
/// each with its Default and its pinned mock-ups (duplicates dropped, flag
/// order kept).  Message sizes not divisible by the datatype extent are
/// skipped; an empty surviving grid is a ConfigError.
std::vector<BenchPlanItem> bench_plan(const RunConfig& config,
                                      std::span<const ModulePin> pins);

/// Benchmarks the plan and writes the raw-sample CSV to `out`.
void cmd_bench(const RunConfig& config, std::span<const ModulePin> pins,
               std::ostream& out);

/// Reads benchmark CSVs, scans them for guideline violations, writes one
/// canonical profile per violated collective into config.profile_dir, and
/// prints a per-collective summary to `summary`.
void cmd_tune(const RunConfig& config, std::span<const std::string> csv_paths,
              std::ostream& summary);

/// Re-runs the benchmark plan routed through the tuned runtime (profiles
/// loaded from config.profile_dir) and writes the CSV, with one footer line
/// per distinct routing decision plus the arena capacities, to `out`.
void cmd_run(const RunConfig& config, std::ostream& out);

/// Reads a reference CSV and any further CSVs and writes a relative-latency
/// table: per (collective, msize, function), the median over per-run medians
/// in microseconds, the min and max of those run medians, and the latency
/// relative to the reference Default at the same (collective, msize).
/// Throws KeyMismatch when a record has no matching Default reference or the
/// inputs disagree on the group size.
void cmd_report(const std::string& reference_csv,
                std::span<const std::string> other_csvs, std::ostream& out);

/// Full command-line front end (subcommands bench, tune, run, report).
/// Returns the process exit code: 0 success, 2 configuration or usage error,
/// 3 data error.
int run_cli(int argc, const char* const* argv);

}  // namespace pgtune

#endif  // PGTUNE_CLI_HPP
