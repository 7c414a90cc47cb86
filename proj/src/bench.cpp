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

#include "pgtune/bench.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>
#include <utility>

#include "pgtune/barrier.hpp"
#include "pgtune/error.hpp"

namespace pgtune {

namespace {

// --- deterministic sub-seed derivation ------------------------------------

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

enum : std::uint64_t { kPhaseSmallest = 1, kPhaseBatch = 2, kPhaseMeasure = 3 };

// Every run of the pipeline draws its transport seed from the base seed,
// the pipeline phase, the function/message identity and the run ordinal, so
// "independent run" means an independent (but reproducible) jitter stream.
std::uint64_t sub_seed(std::uint64_t base, std::uint64_t phase,
                       std::string_view function_id, std::int64_t msize,
                       std::uint64_t run) {
  std::uint64_t h = splitmix(base ^ (phase * 0xA24BAED4963EE407ull));
  h = splitmix(h ^ fnv1a(function_id));
  h = splitmix(h ^ static_cast<std::uint64_t>(msize));
  return splitmix(h ^ run);
}

Nanos max_of(const std::vector<std::int64_t>& values) {
  return *std::max_element(values.begin(), values.end());
}

// One barrier-fenced, clock-aligned, timed execution of `body`; returns the
// group's maximum elapsed time (identical on every rank).
Nanos one_observation(RankHandle& rh, const CollectiveBody& body) {
  dissemination_barrier(rh);
  rh.sync_clocks();
  const Nanos t0 = rh.now_ns();
  body(rh);
  return max_of(rh.fence_exchange(rh.now_ns() - t0));
}

// --- per-rank benchmark state ----------------------------------------------

struct RankBuffers {
  std::vector<std::byte> send;
  std::vector<std::byte> recv;
  std::optional<ScratchBuffers> scratch;
};

// Deterministic, reduction-safe payload: small magnitudes keep integer sums
// far from overflow and float sums well conditioned.
void fill_payload(std::span<std::byte> buf, Datatype dt, int rank) {
  const std::int64_t elems = static_cast<std::int64_t>(buf.size()) / extent(dt);
  switch (dt) {
    case Datatype::Byte:
      for (std::int64_t i = 0; i < elems; ++i) {
        buf[static_cast<std::size_t>(i)] =
            static_cast<std::byte>((rank * 131 + i * 7 + 11) & 0xFF);
      }
      break;
    case Datatype::Int32:
      for (std::int64_t i = 0; i < elems; ++i) {
        const std::int32_t v =
            static_cast<std::int32_t>(((rank + 1) * 1009 + i * 17) % 2001 - 1000);
        std::memcpy(buf.data() + i * 4, &v, 4);
      }
      break;
    case Datatype::Float64:
      for (std::int64_t i = 0; i < elems; ++i) {
        const double v = 1.0 + static_cast<double>((rank * 53 + i * 29) % 97) / 97.0;
        std::memcpy(buf.data() + i * 8, &v, 8);
      }
      break;
  }
}

using MakeBuffers = std::function<std::unique_ptr<RankBuffers>(int rank)>;

// Shares one lazily initialised buffer slot per rank across observations and
// runs; ranks touch only their own slot, so concurrent initialisation is safe.
CollectiveBody body_with_state(MakeBuffers make,
                               std::function<void(RankHandle&, RankBuffers&)> run,
                               int nprocs) {
  auto states = std::make_shared<std::vector<std::unique_ptr<RankBuffers>>>(
      static_cast<std::size_t>(nprocs));
  return [states, make = std::move(make), run = std::move(run)](RankHandle& rh) {
    auto& slot = (*states)[static_cast<std::size_t>(rh.rank())];
    if (!slot) slot = make(rh.rank());
    run(rh, *slot);
  };
}

std::unique_ptr<RankBuffers> allocate_buffers(const CollectiveCall& call,
                                              int rank) {
  auto buffers = std::make_unique<RankBuffers>();
  const std::int64_t e = extent(call.datatype);
  buffers->send.resize(static_cast<std::size_t>(send_elems(call, rank) * e));
  buffers->recv.resize(static_cast<std::size_t>(recv_elems(call, rank) * e));
  fill_payload(buffers->send, call.datatype, rank);
  return buffers;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

void validate_nrep_config(const NrepConfig& cfg) {
  const bool ok = cfg.rse_threshold_1byte > 0.0 && cfg.rse_threshold_1byte < 1.0 &&
                  cfg.rse_threshold_batch > 0.0 && cfg.rse_threshold_batch < 1.0 &&
                  cfg.b1 >= 1 && cfg.b2 >= 0 && cfg.min_reps >= 1 &&
                  cfg.nmpiruns >= 1 && cfg.convergence_cap >= 2;
  if (!ok) {
    fail(Errc::ConfigError,
         "repetition-estimation settings out of range (thresholds in (0,1), "
         "b1 >= 1, b2 >= 0, min_reps >= 1, nmpiruns >= 1, cap >= 2)");
  }
}

double rse(std::span<const Nanos> samples) {
  const std::size_t n = samples.size();
  if (n < 2) {
    fail(Errc::DegenerateSamples,
         "relative standard error needs at least two samples");
  }
  double mean = 0.0;
  for (Nanos s : samples) mean += static_cast<double>(s);
  mean /= static_cast<double>(n);
  if (!(mean > 0.0)) {
    fail(Errc::DegenerateSamples,
         "relative standard error needs a positive mean latency");
  }
  double ss = 0.0;
  for (Nanos s : samples) {
    const double d = static_cast<double>(s) - mean;
    ss += d * d;
  }
  const double stddev = std::sqrt(ss / static_cast<double>(n - 1));
  return (stddev / std::sqrt(static_cast<double>(n))) / mean;
}

std::vector<Nanos> timed_observations(RankHandle& rh, const CollectiveBody& body,
                                      std::int64_t nrep) {
  if (nrep < 1) fail(Errc::ConfigError, "observation count must be >= 1");
  std::vector<Nanos> out;
  out.reserve(static_cast<std::size_t>(nrep));
  for (std::int64_t i = 0; i < nrep; ++i) out.push_back(one_observation(rh, body));
  return out;
}

Nanos estimate_t1(const BenchFunction& fn, int nprocs, const NrepConfig& cfg,
                  const CostModel& model, Mode mode) {
  validate_nrep_config(cfg);
  if (!fn.make_body) fail(Errc::ConfigError, "benchmark function has no body");
  const CollectiveBody body = fn.make_body(fn.min_msize_bytes);

  Nanos t1 = 0;
  for (int run = 0; run < cfg.nmpiruns; ++run) {
    CostModel sub = model;
    sub.seed = sub_seed(model.seed, kPhaseSmallest, fn.id, fn.min_msize_bytes,
                        static_cast<std::uint64_t>(run));
    Nanos cumulative = 0;
    run_spmd(nprocs, sub, mode, [&](RankHandle& rh) {
      const Nanos start = rh.now_ns();
      std::vector<Nanos> samples;
      for (std::int64_t i = 0; i < cfg.convergence_cap; ++i) {
        samples.push_back(one_observation(rh, body));
        if (samples.size() >= 2 && rse(samples) < cfg.rse_threshold_1byte) {
          const Nanos spent = max_of(rh.fence_exchange(rh.now_ns() - start));
          if (rh.rank() == 0) cumulative = spent;
          return;
        }
      }
      fail(Errc::NonConvergence,
           "smallest-message estimation did not reach the target relative "
           "standard error within " + std::to_string(cfg.convergence_cap) +
           " observations");
    });
    t1 = std::max(t1, cumulative);
  }
  return t1;
}

std::int64_t nrep_from_estimates(Nanos t1_ns, Nanos t_msize_ns,
                                 std::int64_t min_reps) {
  if (min_reps < 1) fail(Errc::ConfigError, "minimum repetition count must be >= 1");
  if (t1_ns <= 0) {
    fail(Errc::ConfigError, "smallest-message run time must be positive");
  }
  if (t_msize_ns <= 0) {
    fail(Errc::DegenerateSamples,
         "minimum batch latency is zero; repetitions cannot be sized");
  }
  const std::int64_t needed = (t1_ns + t_msize_ns - 1) / t_msize_ns;
  return std::max(needed, min_reps);
}

std::int64_t estimate_nrep(const BenchFunction& fn, std::int64_t msize_bytes,
                           Nanos t1_ns, int nprocs, const NrepConfig& cfg,
                           const CostModel& model, Mode mode) {
  validate_nrep_config(cfg);
  if (!fn.make_body) fail(Errc::ConfigError, "benchmark function has no body");
  const CollectiveBody body = fn.make_body(msize_bytes);

  CostModel sub = model;
  sub.seed = sub_seed(model.seed, kPhaseBatch, fn.id, msize_bytes, 0);
  Nanos t_min = 0;
  run_spmd(nprocs, sub, mode, [&](RankHandle& rh) {
    std::vector<Nanos> samples = timed_observations(rh, body, cfg.b1);
    if (cfg.b2 > 0 && rse(samples) >= cfg.rse_threshold_batch) {
      std::vector<Nanos> more = timed_observations(rh, body, cfg.b2);
      samples.insert(samples.end(), more.begin(), more.end());
    }
    const Nanos mn = *std::min_element(samples.begin(), samples.end());
    if (rh.rank() == 0) t_min = mn;
  });
  return nrep_from_estimates(t1_ns, t_min, cfg.min_reps);
}

void run_benchmark(std::span<const BenchPlanItem> plan, int nprocs,
                   const NrepConfig& cfg, const CostModel& model, Mode mode,
                   const SampleSink& sink) {
  validate_nrep_config(cfg);
  if (plan.empty()) fail(Errc::EmptyInput, "benchmark plan is empty");
  if (!sink) fail(Errc::ConfigError, "benchmark sink is not callable");

  for (const BenchPlanItem& item : plan) {
    if (item.msizes.empty()) {
      fail(Errc::EmptyInput,
           "no message sizes for function " + item.function.id);
    }
    const Nanos t1 = estimate_t1(item.function, nprocs, cfg, model, mode);
    for (std::int64_t msize : item.msizes) {
      const std::int64_t nrep =
          estimate_nrep(item.function, msize, t1, nprocs, cfg, model, mode);
      const CollectiveBody body = item.function.make_body(msize);
      for (int run = 0; run < cfg.nmpiruns; ++run) {
        CostModel sub = model;
        sub.seed = sub_seed(model.seed, kPhaseMeasure, item.function.id, msize,
                            static_cast<std::uint64_t>(run));
        SampleSet set;
        set.function_id = item.function.id;
        set.msize_bytes = msize;
        set.nprocs = nprocs;
        set.mpirun_idx = run;
        run_spmd(nprocs, sub, mode, [&](RankHandle& rh) {
          std::vector<Nanos> samples = timed_observations(rh, body, nrep);
          if (rh.rank() == 0) set.latency_ns = std::move(samples);
        });
        sink(set);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Plan construction
// ---------------------------------------------------------------------------

CollectiveCall call_for_msize(CollectiveKind kind, int nprocs,
                              std::int64_t msize_bytes, Datatype datatype,
                              ReduceOp op) {
  if (nprocs < 1) fail(Errc::ConfigError, "group size must be >= 1");
  if (msize_bytes < 1) fail(Errc::ConfigError, "message size must be positive");
  if (kind_irregular(kind)) {
    fail(Errc::ConfigError,
         std::string(collective_name(kind)) +
             " takes per-rank counts and has no single-size benchmark mapping");
  }
  const std::int64_t e = extent(datatype);
  if (msize_bytes % e != 0) {
    fail(Errc::ConfigError,
         "message size " + std::to_string(msize_bytes) +
             " is not a multiple of the datatype extent " + std::to_string(e));
  }
  const std::int64_t n = msize_bytes / e;

  CollectiveCall call;
  call.kind = kind;
  call.nprocs = nprocs;
  call.datatype = datatype;
  call.op = op;
  call.root = 0;
  switch (kind) {
    case CollectiveKind::Scatter:
    case CollectiveKind::ReduceScatterBlock:
      // Total at the root / in the reduced vector; each rank's share is
      // msize bytes.
      call.count = n * nprocs;
      break;
    default:
      call.count = n;
      break;
  }
  return call;
}

std::string default_function_id(CollectiveKind kind) {
  return lowercase(collective_name(kind)) + "_default";
}

std::string tuned_function_id(CollectiveKind kind) {
  return lowercase(collective_name(kind)) + "_tuned";
}

BenchFunction make_default_function(CollectiveKind kind, int nprocs,
                                    const PlanOptions& opt) {
  BenchFunction fn;
  fn.id = default_function_id(kind);
  fn.min_msize_bytes = extent(opt.datatype);
  const std::string variant = opt.mockup.algorithms.variant(kind);
  validate_algorithm(kind, variant);
  const Datatype dt = opt.datatype;
  const ReduceOp op = opt.op;
  fn.make_body = [kind, nprocs, variant, dt, op](std::int64_t msize) {
    const CollectiveCall call = call_for_msize(kind, nprocs, msize, dt, op);
    validate_call(call);
    return body_with_state(
        [call](int rank) { return allocate_buffers(call, rank); },
        [call, variant](RankHandle& rh, RankBuffers& b) {
          execute_collective(rh, call, variant, b.send, b.recv);
        },
        nprocs);
  };
  return fn;
}

BenchFunction make_mockup_function(MockupId id, int nprocs,
                                   const PlanOptions& opt) {
  BenchFunction fn;
  fn.id = mockup_name(id);
  fn.min_msize_bytes = extent(opt.datatype);
  const CollectiveKind kind = mockup_lhs(id);
  const Datatype dt = opt.datatype;
  const ReduceOp op = opt.op;
  const MockupConfig cfg = opt.mockup;
  const std::size_t msg_cap = opt.msg_arena_bytes;
  const std::size_t int_cap = opt.int_arena_bytes;
  fn.make_body = [id, kind, nprocs, dt, op, cfg, msg_cap,
                  int_cap](std::int64_t msize) {
    const CollectiveCall call = call_for_msize(kind, nprocs, msize, dt, op);
    validate_call(call);
    return body_with_state(
        [call, msg_cap, int_cap](int rank) {
          auto buffers = allocate_buffers(call, rank);
          buffers->scratch.emplace(msg_cap, int_cap);
          return buffers;
        },
        [id, call, cfg](RankHandle& rh, RankBuffers& b) {
          execute_mockup(rh, id, call, b.send, b.recv, *b.scratch, cfg);
        },
        nprocs);
  };
  return fn;
}

BenchFunction make_exec_function(std::string id, CollectiveKind kind,
                                 int nprocs, const PlanOptions& opt,
                                 CollectiveExec exec) {
  BenchFunction fn;
  fn.id = std::move(id);
  fn.min_msize_bytes = extent(opt.datatype);
  const Datatype dt = opt.datatype;
  const ReduceOp op = opt.op;
  fn.make_body = [kind, nprocs, dt, op,
                  exec = std::move(exec)](std::int64_t msize) {
    const CollectiveCall call = call_for_msize(kind, nprocs, msize, dt, op);
    validate_call(call);
    return body_with_state(
        [call](int rank) { return allocate_buffers(call, rank); },
        [call, exec](RankHandle& rh, RankBuffers& b) {
          exec(rh, call, b.send, b.recv);
        },
        nprocs);
  };
  return fn;
}

// ---------------------------------------------------------------------------
// CSV interface
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kColumnHeader =
    "function,msize_bytes,nprocs,mpirun_idx,rep_idx,latency_us";

const char* mode_token(Mode mode) {
  return mode == Mode::Virtual ? "virtual" : "wallclock";
}

const char* clock_token(Mode mode) {
  return mode == Mode::Virtual ? "virtual" : "monotonic";
}

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

template <typename T>
T parse_int_field(std::string_view field, std::size_t line_no, const char* what) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    parse_fail(line_no, std::string("malformed ") + what + " '" +
                            std::string(field) + "'");
  }
  return value;
}

// Exact microsecond-with-decimals to nanoseconds conversion: three decimal
// digits are one nanosecond, so parsing stays integer all the way.
Nanos parse_latency_us(std::string_view field, std::size_t line_no) {
  const std::size_t dot = field.find('.');
  std::string_view whole = field.substr(0, dot);
  std::string_view frac =
      dot == std::string_view::npos ? std::string_view{} : field.substr(dot + 1);
  if (whole.empty() && frac.empty()) parse_fail(line_no, "empty latency field");
  if (frac.size() > 3) {
    parse_fail(line_no, "latency '" + std::string(field) +
                            "' has sub-nanosecond digits");
  }
  std::int64_t whole_us = 0;
  if (!whole.empty()) whole_us = parse_int_field<std::int64_t>(whole, line_no, "latency");
  std::int64_t frac_ns = 0;
  if (!frac.empty()) {
    frac_ns = parse_int_field<std::int64_t>(frac, line_no, "latency fraction");
    for (std::size_t i = frac.size(); i < 3; ++i) frac_ns *= 10;
  }
  if (whole_us < 0 || frac_ns < 0) parse_fail(line_no, "negative latency");
  return whole_us * 1000 + frac_ns;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

void write_samples_csv(std::ostream& out, const CsvMeta& meta,
                       std::span<const SampleSet> sets,
                       std::span<const std::string> footer_lines) {
  out << "# nprocs=" << meta.nprocs << "\n";
  out << "# mode=" << mode_token(meta.mode) << "\n";
  out << "# seed=" << meta.seed << "\n";
  out << "# clock=" << clock_token(meta.mode) << "\n";
  out << "# barrier=dissemination\n";
  out << kColumnHeader << "\n";
  for (const SampleSet& set : sets) {
    for (std::size_t i = 0; i < set.latency_ns.size(); ++i) {
      out << set.function_id << ',' << set.msize_bytes << ',' << set.nprocs
          << ',' << set.mpirun_idx << ',' << i << ','
          << format_us(set.latency_ns[i]) << "\n";
    }
  }
  for (const std::string& line : footer_lines) out << line << "\n";
}

CsvData read_samples_csv(std::istream& in) {
  CsvData data;
  std::string raw;
  std::size_t line_no = 0;
  bool saw_header = false;
  bool in_footer = false;
  SampleSet* current = nullptr;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (!saw_header) {
      if (line.front() == '#') {
        const std::string_view body = trim(line.substr(1));
        const std::size_t eq = body.find('=');
        if (eq != std::string_view::npos) {
          data.raw_meta[std::string(trim(body.substr(0, eq)))] =
              std::string(trim(body.substr(eq + 1)));
        }
        continue;
      }
      if (line != kColumnHeader) {
        parse_fail(line_no, "expected column header '" +
                                std::string(kColumnHeader) + "'");
      }
      saw_header = true;
      continue;
    }

    if (line.front() == '#') {
      in_footer = true;
      data.footer_lines.emplace_back(line);
      continue;
    }
    if (in_footer) parse_fail(line_no, "data row after footer lines");

    const std::vector<std::string_view> fields = split_fields(line);
    if (fields.size() != 6) {
      parse_fail(line_no, "expected 6 comma-separated fields, got " +
                              std::to_string(fields.size()));
    }
    const std::string function_id(trim(fields[0]));
    const auto msize = parse_int_field<std::int64_t>(trim(fields[1]), line_no, "msize_bytes");
    const auto nprocs = parse_int_field<int>(trim(fields[2]), line_no, "nprocs");
    const auto run = parse_int_field<int>(trim(fields[3]), line_no, "mpirun_idx");
    const auto rep = parse_int_field<std::int64_t>(trim(fields[4]), line_no, "rep_idx");
    const Nanos latency = parse_latency_us(trim(fields[5]), line_no);

    const bool continues = current != nullptr &&
                           current->function_id == function_id &&
                           current->msize_bytes == msize &&
                           current->nprocs == nprocs &&
                           current->mpirun_idx == run;
    if (!continues) {
      if (rep != 0) {
        parse_fail(line_no, "new sample group must start at rep_idx 0");
      }
      data.sets.emplace_back();
      current = &data.sets.back();
      current->function_id = function_id;
      current->msize_bytes = msize;
      current->nprocs = nprocs;
      current->mpirun_idx = run;
    } else if (rep != static_cast<std::int64_t>(current->latency_ns.size())) {
      parse_fail(line_no, "rep_idx " + std::to_string(rep) +
                              " breaks the consecutive numbering of its group");
    }
    current->latency_ns.push_back(latency);
  }

  if (!saw_header) fail(Errc::ParseError, "missing column header");

  if (auto it = data.raw_meta.find("nprocs"); it != data.raw_meta.end()) {
    data.meta.nprocs = parse_int_field<int>(it->second, 0, "nprocs metadata");
  }
  if (auto it = data.raw_meta.find("seed"); it != data.raw_meta.end()) {
    data.meta.seed =
        parse_int_field<std::uint64_t>(it->second, 0, "seed metadata");
  }
  if (auto it = data.raw_meta.find("mode"); it != data.raw_meta.end()) {
    if (it->second == "virtual") {
      data.meta.mode = Mode::Virtual;
    } else if (it->second == "wallclock") {
      data.meta.mode = Mode::Wallclock;
    } else {
      fail(Errc::ParseError, "unknown mode '" + it->second + "' in metadata");
    }
  }
  return data;
}

}  // namespace pgtune
