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

#include "pgtune/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <utility>

#include "pgtune/dispatch.hpp"
#include "pgtune/error.hpp"
#include "pgtune/profile.hpp"

namespace pgtune {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

/// The collectives that have mock-up replacements, in declaration order.
std::vector<CollectiveKind> replaceable_kinds() {
  std::vector<CollectiveKind> kinds;
  for (int k = 0; k < kCollectiveKindCount; ++k) {
    const auto kind = static_cast<CollectiveKind>(k);
    if (!mockups_of(kind).empty()) kinds.push_back(kind);
  }
  return kinds;
}

std::string replaceable_kind_list() {
  std::string out;
  for (const CollectiveKind kind : replaceable_kinds()) {
    if (!out.empty()) out += ", ";
    out += lowercase(collective_name(kind));
  }
  return out;
}

std::string mockup_list(CollectiveKind kind) {
  std::string out;
  for (const MockupId id : mockups_of(kind)) {
    if (!out.empty()) out += ", ";
    out += mockup_name(id);
  }
  return out;
}

std::string format_double_us(double us) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << us;
  return out.str();
}

PlanOptions plan_options(const RunConfig& config) {
  PlanOptions opt;
  opt.datatype = config.datatype;
  opt.op = config.op;
  opt.mockup.chunk_size_C = config.chunk_size_C;
  opt.mockup.algorithms = config.default_alg;
  opt.msg_arena_bytes = config.size_msg_buffer_bytes;
  opt.int_arena_bytes = config.size_int_buffer_bytes;
  return opt;
}

/// Grid sizes compatible with the configured datatype (whole elements only).
std::vector<std::int64_t> usable_msizes(const RunConfig& config) {
  std::vector<std::int64_t> out;
  const std::int64_t e = extent(config.datatype);
  for (const std::int64_t m : config.msizes) {
    if (m % e == 0) out.push_back(m);
  }
  if (out.empty()) {
    fail(Errc::ConfigError,
         "no configured message size is divisible by the " +
             std::string(datatype_name(config.datatype)) + " extent (" +
             std::to_string(e) + ")");
  }
  return out;
}

CsvData read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail(Errc::ParseError, "cannot read CSV file '" + path + "'");
  }
  try {
    return read_samples_csv(in);
  } catch (const Error& e) {
    fail(e.code(), path + ": " + e.what());
  }
}

/// Keeps the first decision per (collective, msize); the footer dedups the
/// same way, so periodic compaction keeps long measurement runs from
/// accumulating one log entry per repetition without changing the output.
void compact_log(TunedRuntime& rt) {
  std::set<std::pair<int, std::int64_t>> seen;
  std::vector<DispatchDecision> kept;
  for (const DispatchDecision& d : rt.log) {
    if (seen.insert({static_cast<int>(d.kind), d.msize_bytes}).second) {
      kept.push_back(d);
    }
  }
  rt.log = std::move(kept);
}

}  // namespace

ModulePin parse_module_flag(std::string_view flag) {
  const std::size_t colon = flag.find(':');
  constexpr std::string_view kAlgKey = "alg=";
  if (colon == std::string_view::npos ||
      flag.substr(colon + 1, kAlgKey.size()) != kAlgKey) {
    fail(Errc::ConfigError, "module flag '" + std::string(flag) +
                                "' is not of the form <collective>:alg=<name>");
  }
  const std::string_view coll = flag.substr(0, colon);
  const std::string_view alg = flag.substr(colon + 1 + kAlgKey.size());

  const auto kind = parse_collective(coll);
  if (!kind || mockups_of(*kind).empty()) {
    fail(Errc::UnknownCollective,
         "'" + std::string(coll) +
             "' has no mock-up implementations; collectives with mock-ups: " +
             replaceable_kind_list());
  }
  const auto mockup = parse_mockup(alg);
  if (!mockup || mockup_lhs(*mockup) != *kind) {
    fail(Errc::UnknownMockup,
         "'" + std::string(alg) + "' does not replace " +
             lowercase(collective_name(*kind)) + "; its mock-ups are: " +
             mockup_list(*kind));
  }
  return ModulePin{*kind, *mockup};
}

std::vector<BenchPlanItem> bench_plan(const RunConfig& config,
                                      std::span<const ModulePin> pins) {
  const std::vector<std::int64_t> msizes = usable_msizes(config);
  const PlanOptions opt = plan_options(config);
  std::vector<BenchPlanItem> plan;

  if (pins.empty()) {
    for (const CollectiveKind kind : replaceable_kinds()) {
      plan.push_back({make_default_function(kind, config.nprocs, opt), msizes});
      for (const MockupId id : mockups_of(kind)) {
        plan.push_back({make_mockup_function(id, config.nprocs, opt), msizes});
      }
    }
    return plan;
  }

  // Pinned: keep the first-appearance order of collectives and, per
  // collective, the flag order of its mock-ups; drop duplicates.
  std::vector<CollectiveKind> kinds;
  std::map<int, std::vector<MockupId>> picked;
  for (const ModulePin& pin : pins) {
    auto& list = picked[static_cast<int>(pin.kind)];
    if (list.empty()) kinds.push_back(pin.kind);
    if (std::find(list.begin(), list.end(), pin.alg) == list.end()) {
      list.push_back(pin.alg);
    }
  }
  for (const CollectiveKind kind : kinds) {
    plan.push_back({make_default_function(kind, config.nprocs, opt), msizes});
    for (const MockupId id : picked[static_cast<int>(kind)]) {
      plan.push_back({make_mockup_function(id, config.nprocs, opt), msizes});
    }
  }
  return plan;
}

void cmd_bench(const RunConfig& config, std::span<const ModulePin> pins,
               std::ostream& out) {
  validate_config(config);
  const std::vector<BenchPlanItem> plan = bench_plan(config, pins);
  std::vector<SampleSet> sets;
  run_benchmark(plan, config.nprocs, config.nrep, config.model, config.mode,
                [&sets](const SampleSet& set) { sets.push_back(set); });
  write_samples_csv(out, CsvMeta{config.nprocs, config.mode, config.model.seed},
                    sets);
}

void cmd_tune(const RunConfig& config, std::span<const std::string> csv_paths,
              std::ostream& summary) {
  validate_config(config);
  if (csv_paths.empty()) {
    fail(Errc::EmptyInput, "tune needs at least one benchmark CSV");
  }
  std::vector<SampleSet> sets;
  for (const std::string& path : csv_paths) {
    CsvData data = read_csv_file(path);
    for (SampleSet& set : data.sets) sets.push_back(std::move(set));
  }

  const DetectResult result =
      detect_violations(sets, config.replacement_threshold);

  std::map<int, std::string> profile_paths;  // kind -> written file
  if (!result.profiles.empty()) {
    std::filesystem::create_directories(config.profile_dir);
  }
  for (const Profile& profile : result.profiles) {
    const CollectiveKind kind = profile_kind(profile);
    const std::string path =
        (std::filesystem::path(config.profile_dir) /
         profile_filename(kind, profile.nprocs))
            .string();
    write_profile(profile, path);
    profile_paths[static_cast<int>(kind)] = path;
  }

  // Per-collective summary, in verdict order (collective, then msize).
  const auto close_collective = [&](CollectiveKind kind) {
    const auto it = profile_paths.find(static_cast<int>(kind));
    summary << (it == profile_paths.end()
                    ? "  no violations\n"
                    : "  profile written: " + it->second + "\n");
  };
  std::optional<CollectiveKind> current;
  for (const SizeVerdict& v : result.report.verdicts) {
    if (current != v.kind) {
      if (current) close_collective(*current);
      current = v.kind;
      summary << collective_mpi_name(v.kind) << " (p="
              << (sets.empty() ? 0 : sets.front().nprocs) << "):\n";
    }
    summary << "  msize " << v.msize_bytes << ": default "
            << format_double_us(v.default_median_us) << " us";
    if (v.mockups.empty()) {
      summary << ", no mock-ups measured\n";
      continue;
    }
    const MockupScore best = *std::min_element(
        v.mockups.begin(), v.mockups.end(),
        [](const MockupScore& a, const MockupScore& b) {
          return std::tie(a.median_us, a.id) < std::tie(b.median_us, b.id);
        });
    summary << ", best " << mockup_name(best.id) << ' '
            << format_double_us(best.median_us) << " us -> ";
    if (v.winner) {
      summary << "replaced (" << std::fixed << std::setprecision(1)
              << v.improvement * 100.0 << "% faster)\n";
    } else {
      summary << "kept default\n";
    }
  }
  if (current) close_collective(*current);
  if (result.profiles.empty()) {
    summary << "no violations detected; no profiles written\n";
  } else {
    summary << result.profiles.size() << " profile(s) written to "
            << config.profile_dir << "\n";
  }
}

void cmd_run(const RunConfig& config, std::ostream& out) {
  validate_config(config);
  TunedConfig tuned;
  tuned.nprocs = config.nprocs;
  tuned.msg_arena_bytes = config.size_msg_buffer_bytes;
  tuned.int_arena_bytes = config.size_int_buffer_bytes;
  tuned.mockup.chunk_size_C = config.chunk_size_C;
  tuned.mockup.algorithms = config.default_alg;
  TunedRuntime rt = init_tuned(config.profile_dir, tuned);

  const std::vector<std::int64_t> msizes = usable_msizes(config);
  const PlanOptions opt = plan_options(config);
  std::vector<BenchPlanItem> plan;
  for (const CollectiveKind kind : replaceable_kinds()) {
    plan.push_back(
        {make_exec_function(tuned_function_id(kind), kind, config.nprocs, opt,
                            [&rt](RankHandle& rh, const CollectiveCall& call,
                                  std::span<const std::byte> send,
                                  std::span<std::byte> recv) {
                              dispatch(rt, rh, call, send, recv);
                            }),
         msizes});
  }

  std::vector<SampleSet> sets;
  run_benchmark(plan, config.nprocs, config.nrep, config.model, config.mode,
                [&sets, &rt](const SampleSet& set) {
                  sets.push_back(set);
                  compact_log(rt);
                });
  write_samples_csv(out, CsvMeta{config.nprocs, config.mode, config.model.seed},
                    sets, replacement_footer(rt));
}

namespace {

/// What a benchmark function id denotes: which collective, and whether it is
/// the Default, one mock-up, or the tuned (dispatch-routed) path.
struct IdInfo {
  CollectiveKind kind;
  bool is_default;
};

std::optional<IdInfo> classify_report_id(const std::string& id) {
  if (const auto mockup = parse_mockup(id)) {
    return IdInfo{mockup_lhs(*mockup), false};
  }
  for (int k = 0; k < kCollectiveKindCount; ++k) {
    const auto kind = static_cast<CollectiveKind>(k);
    if (id == default_function_id(kind)) return IdInfo{kind, true};
    if (id == tuned_function_id(kind)) return IdInfo{kind, false};
  }
  return std::nullopt;
}

}  // namespace

void cmd_report(const std::string& reference_csv,
                std::span<const std::string> other_csvs, std::ostream& out) {
  std::vector<CsvData> inputs;
  inputs.push_back(read_csv_file(reference_csv));
  for (const std::string& path : other_csvs) {
    inputs.push_back(read_csv_file(path));
  }

  const int nprocs = inputs.front().meta.nprocs;
  for (const CsvData& data : inputs) {
    for (const SampleSet& set : data.sets) {
      if (set.nprocs != nprocs) {
        fail(Errc::KeyMismatch,
             "records disagree on the group size: " + std::to_string(nprocs) +
                 " vs " + std::to_string(set.nprocs) + " (" +
                 set.function_id + ")");
      }
    }
  }

  // Reference denominators: the Default runs of the reference CSV.
  std::map<std::pair<int, std::int64_t>, std::vector<SampleSet>> reference;
  for (const SampleSet& set : inputs.front().sets) {
    const auto info = classify_report_id(set.function_id);
    if (info && info->is_default) {
      reference[{static_cast<int>(info->kind), set.msize_bytes}].push_back(set);
    }
  }

  // All rows: every classifiable function in every input.
  struct RowKey {
    int kind;
    std::int64_t msize;
    int rank;  // 0 = Default, 1 = everything else: Default sorts first
    std::string function;
    bool operator<(const RowKey& o) const {
      return std::tie(kind, msize, rank, function) <
             std::tie(o.kind, o.msize, o.rank, o.function);
    }
  };
  std::map<RowKey, std::vector<SampleSet>> rows;
  for (const CsvData& data : inputs) {
    for (const SampleSet& set : data.sets) {
      const auto info = classify_report_id(set.function_id);
      if (!info) continue;  // foreign id: nothing to attribute it to
      rows[{static_cast<int>(info->kind), set.msize_bytes,
            info->is_default ? 0 : 1, set.function_id}]
          .push_back(set);
    }
  }

  out << "# nprocs=" << nprocs << "\n";
  out << "collective,msize_bytes,function,median_us,run_median_min_us,"
         "run_median_max_us,relative_latency\n";
  for (const auto& [key, runs] : rows) {
    const auto ref = reference.find({key.kind, key.msize});
    if (ref == reference.end()) {
      fail(Errc::KeyMismatch,
           std::string("no Default reference for ") +
               collective_mpi_name(static_cast<CollectiveKind>(key.kind)) +
               " at msize " + std::to_string(key.msize));
    }
    const double denom = median_of_medians(ref->second);
    const double median = median_of_medians(runs);
    double lo = run_median_us(runs.front());
    double hi = lo;
    for (const SampleSet& run : runs) {
      const double m = run_median_us(run);
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    out << collective_mpi_name(static_cast<CollectiveKind>(key.kind)) << ','
        << key.msize << ',' << key.function << ',' << format_double_us(median)
        << ',' << format_double_us(lo) << ',' << format_double_us(hi) << ','
        << std::fixed << std::setprecision(6) << median / denom << "\n";
  }
}

namespace {

RunConfig assemble_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  RunConfig config;
  if (!config_path.empty()) {
    config = load_config_file(config_path);
  } else if (const char* env = std::getenv("PGTUNE_CONFIG");
             env != nullptr && *env != '\0') {
    config = load_config_file(env);
  }
  apply_overrides(config, overrides);
  return config;
}

/// Opens `path` for writing when given, else falls back to stdout.
std::ostream& open_output(const std::string& path, std::ofstream& file,
                          std::ostream& fallback) {
  if (path.empty()) return fallback;
  file.open(path);
  if (!file) {
    fail(Errc::ConfigError, "cannot write output file '" + path + "'");
  }
  return file;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Message-passing collective autotuner: benchmark, tune, "
               "tuned-run and report"};
  app.require_subcommand(1);
  app.fallthrough();  // --config/--set are accepted after the subcommand too

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path,
                 "key=value configuration file (falls back to $PGTUNE_CONFIG)");
  app.add_option("--set", overrides,
                 "configuration override key=value (repeatable)");

  auto* bench = app.add_subcommand(
      "bench", "benchmark the Default and mock-up implementations");
  std::vector<std::string> bench_modules;
  std::string bench_output;
  bench->add_option("--module", bench_modules,
                    "pin one mock-up: <collective>:alg=<name> (repeatable)");
  bench->add_option("--output", bench_output, "output CSV path (default stdout)");

  auto* tune = app.add_subcommand(
      "tune", "scan benchmark CSVs for violations and write profiles");
  std::vector<std::string> tune_inputs;
  std::string tune_output;
  tune->add_option("inputs", tune_inputs, "benchmark CSV files")
      ->required()
      ->expected(-1);
  tune->add_option("--output", tune_output,
                   "summary text path (default stdout)");

  auto* run = app.add_subcommand(
      "run", "re-run the benchmark routed through the tuned profiles");
  std::string run_output;
  run->add_option("--output", run_output, "output CSV path (default stdout)");

  auto* report = app.add_subcommand(
      "report", "relative-latency table against a reference CSV");
  std::vector<std::string> report_inputs;
  std::string report_output;
  report
      ->add_option("inputs", report_inputs,
                   "reference CSV, then CSVs to compare")
      ->required()
      ->expected(-1);
  report->add_option("--output", report_output,
                     "output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    std::cerr << "pgtune: " << e.what() << "\n";
    return 2;
  }

  try {
    const RunConfig config = assemble_config(config_path, overrides);
    std::ofstream file;
    if (bench->parsed()) {
      std::vector<ModulePin> pins;
      pins.reserve(bench_modules.size());
      for (const std::string& flag : bench_modules) {
        pins.push_back(parse_module_flag(flag));
      }
      cmd_bench(config, pins, open_output(bench_output, file, std::cout));
    } else if (tune->parsed()) {
      cmd_tune(config, tune_inputs, open_output(tune_output, file, std::cout));
    } else if (run->parsed()) {
      cmd_run(config, open_output(run_output, file, std::cout));
    } else if (report->parsed()) {
      const std::string reference = report_inputs.front();
      const std::vector<std::string> rest(report_inputs.begin() + 1,
                                          report_inputs.end());
      cmd_report(reference, rest, open_output(report_output, file, std::cout));
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "pgtune: " << e.what() << "\n";
    switch (e.code()) {
      case Errc::ConfigError:
      case Errc::UnknownCollective:
      case Errc::UnknownMockup:
        return 2;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "pgtune: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace pgtune
