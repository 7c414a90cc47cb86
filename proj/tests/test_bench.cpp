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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdint>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pgtune/barrier.hpp"
#include "pgtune/bench.hpp"
#include "pgtune/collectives.hpp"
#include "pgtune/error.hpp"
#include "pgtune/transport.hpp"

using namespace pgtune;

namespace {

CostModel quiet_model(std::uint64_t seed = 1) {
  CostModel m;
  m.alpha_us = 100.0;
  m.beta_us_per_byte = 0.01;
  m.gamma_us_per_byte = 0.0;
  m.jitter_fraction = 0.0;
  m.seed = seed;
  return m;
}

CostModel noisy_model(std::uint64_t seed) {
  CostModel m = quiet_model(seed);
  m.jitter_fraction = 0.4;
  return m;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc{static_cast<Errc>(-1)};
}

// Barrier makespan from an aligned start: every round costs one zero-byte hop
// along the longest signal chain.
Nanos aligned_barrier_cost(int p, const CostModel& m) {
  return static_cast<Nanos>(barrier_rounds(p)) * hop_cost_ns(m, 0);
}

// A body with a fixed, message-free virtual cost; `counter` tallies total
// invocations across ranks.
BenchFunction constant_cost_function(Nanos cost,
                                     std::shared_ptr<std::atomic<std::int64_t>> counter) {
  BenchFunction fn;
  fn.id = "constant_cost";
  fn.min_msize_bytes = 1;
  fn.make_body = [cost, counter](std::int64_t) -> CollectiveBody {
    return [cost, counter](RankHandle& rh) {
      counter->fetch_add(1, std::memory_order_relaxed);
      rh.charge_ns(cost);
    };
  };
  return fn;
}

BenchFunction counted(const BenchFunction& inner,
                      std::shared_ptr<std::atomic<std::int64_t>> counter) {
  BenchFunction fn = inner;
  fn.make_body = [make = inner.make_body, counter](std::int64_t msize) {
    CollectiveBody body = make(msize);
    return [body, counter](RankHandle& rh) {
      counter->fetch_add(1, std::memory_order_relaxed);
      body(rh);
    };
  };
  return fn;
}

}  // namespace

TEST_CASE("relative standard error matches hand computations") {
  std::vector<Nanos> flat{10, 10, 10, 10};
  CHECK(rse(flat) == doctest::Approx(0.0));

  // mean 10, sample stddev sqrt(2), N=2: (sqrt(2)/sqrt(2)) / 10.
  std::vector<Nanos> pair{9, 11};
  CHECK(rse(pair) == doctest::Approx(0.1).epsilon(1e-12));

  std::vector<Nanos> one{42};
  CHECK(code_of([&] { rse(one); }) == Errc::DegenerateSamples);
  std::vector<Nanos> zeros{0, 0, 0};
  CHECK(code_of([&] { rse(zeros); }) == Errc::DegenerateSamples);
  std::vector<Nanos> none;
  CHECK(code_of([&] { rse(none); }) == Errc::DegenerateSamples);
}

TEST_CASE("nrep settings are validated") {
  NrepConfig good;
  CHECK_NOTHROW(validate_nrep_config(good));

  NrepConfig bad = good;
  bad.rse_threshold_1byte = 0.0;
  CHECK(code_of([&] { validate_nrep_config(bad); }) == Errc::ConfigError);
  bad = good;
  bad.rse_threshold_batch = 1.0;
  CHECK(code_of([&] { validate_nrep_config(bad); }) == Errc::ConfigError);
  bad = good;
  bad.b1 = 0;
  CHECK(code_of([&] { validate_nrep_config(bad); }) == Errc::ConfigError);
  bad = good;
  bad.b2 = -1;
  CHECK(code_of([&] { validate_nrep_config(bad); }) == Errc::ConfigError);
  bad = good;
  bad.min_reps = 0;
  CHECK(code_of([&] { validate_nrep_config(bad); }) == Errc::ConfigError);
  bad = good;
  bad.nmpiruns = 0;
  CHECK(code_of([&] { validate_nrep_config(bad); }) == Errc::ConfigError);
  bad = good;
  bad.convergence_cap = 1;
  CHECK(code_of([&] { validate_nrep_config(bad); }) == Errc::ConfigError);
}

TEST_CASE("timed observations equal the analytic schedule without jitter") {
  const int p = 4;
  const CostModel model = quiet_model();
  PlanOptions opt;
  const BenchFunction fn = make_default_function(CollectiveKind::Allgather, p, opt);
  const std::int64_t msize = 5;
  const CollectiveBody body = fn.make_body(msize);

  const CollectiveCall call =
      call_for_msize(CollectiveKind::Allgather, p, msize, opt.datatype, opt.op);
  const Nanos expected = algorithm_cost_schedule(call, "ring", model);

  std::vector<Nanos> samples;
  run_spmd(p, model, Mode::Virtual, [&](RankHandle& rh) {
    auto s = timed_observations(rh, body, 3);
    CHECK(s.size() == 3);
    for (Nanos v : s) CHECK(v == expected);  // barrier cost stays outside
    if (rh.rank() == 0) samples = s;
  });
  REQUIRE(samples.size() == 3);
  CHECK(samples[0] == expected);

  // nrep=1 yields exactly one sample.
  run_spmd(p, model, Mode::Virtual, [&](RankHandle& rh) {
    CHECK(timed_observations(rh, body, 1).size() == 1);
  });
}

TEST_CASE("smallest-message estimation converges in two jitter-free observations") {
  const int p = 4;
  const CostModel model = quiet_model();
  PlanOptions opt;
  const BenchFunction fn = make_default_function(CollectiveKind::Allgather, p, opt);

  const CollectiveCall probe =
      call_for_msize(CollectiveKind::Allgather, p, 1, opt.datatype, opt.op);
  const Nanos body_cost = algorithm_cost_schedule(probe, "ring", model);
  const Nanos per_observation = aligned_barrier_cost(p, model) + body_cost;

  NrepConfig cfg;
  const Nanos t1 = estimate_t1(fn, p, cfg, model, Mode::Virtual);
  // Two identical samples reach RSE 0 immediately; cumulative time counts
  // the two barriers as well as the two timed windows.
  CHECK(t1 == 2 * per_observation);
}

TEST_CASE("smallest-message estimation reports non-convergence at the cap") {
  const int p = 4;
  PlanOptions opt;
  const BenchFunction fn = make_default_function(CollectiveKind::Allgather, p, opt);
  NrepConfig cfg;
  cfg.rse_threshold_1byte = 1e-9;  // unreachable under jitter
  cfg.convergence_cap = 50;
  CHECK(code_of([&] {
          estimate_t1(fn, p, cfg, noisy_model(3), Mode::Virtual);
        }) == Errc::NonConvergence);
}

TEST_CASE("smallest-message estimation is reproducible under jitter") {
  const int p = 4;
  PlanOptions opt;
  const BenchFunction fn = make_default_function(CollectiveKind::Bcast, p, opt);
  NrepConfig cfg;
  const Nanos a = estimate_t1(fn, p, cfg, noisy_model(7), Mode::Virtual);
  const Nanos b = estimate_t1(fn, p, cfg, noisy_model(7), Mode::Virtual);
  CHECK(a == b);
  CHECK(a > 0);
  // A different seed gives a different (still valid) estimate.
  const Nanos c = estimate_t1(fn, p, cfg, noisy_model(8), Mode::Virtual);
  CHECK(c > 0);
}

TEST_CASE("repetition formula takes the ceiling with a floor of min_reps") {
  const Nanos us = 1000;  // ns per µs
  CHECK(nrep_from_estimates(2000 * us, 40 * us, 10) == 50);
  CHECK(nrep_from_estimates(100 * us, 400 * us, 10) == 10);
  CHECK(nrep_from_estimates(100 * us, 400 * us, 1) == 1);
  CHECK(nrep_from_estimates(1000 * us, 1000 * us, 1) == 1);
  CHECK(nrep_from_estimates(1001 * us, 1000 * us, 1) == 2);

  CHECK(code_of([&] { nrep_from_estimates(1000, 0, 1); }) ==
        Errc::DegenerateSamples);
  CHECK(code_of([&] { nrep_from_estimates(0, 1000, 1); }) == Errc::ConfigError);
  CHECK(code_of([&] { nrep_from_estimates(1000, 1000, 0); }) ==
        Errc::ConfigError);

  // Property sweep: result >= K always; equals ceil(t1/t) when that wins;
  // nonincreasing in t for fixed t1.
  std::mt19937_64 gen(42);
  std::uniform_int_distribution<Nanos> t1_dist(1, 50'000'000);
  std::uniform_int_distribution<Nanos> t_dist(1, 2'000'000);
  std::uniform_int_distribution<std::int64_t> k_dist(1, 1000);
  for (int i = 0; i < 10'000; ++i) {
    const Nanos t1 = t1_dist(gen);
    const Nanos t = t_dist(gen);
    const std::int64_t k = k_dist(gen);
    const std::int64_t nrep = nrep_from_estimates(t1, t, k);
    const std::int64_t ceiling = (t1 + t - 1) / t;
    CHECK(nrep >= k);
    if (ceiling > k) CHECK(nrep == ceiling);
    if (t + 1 <= 2'000'000) {
      CHECK(nrep_from_estimates(t1, t + 1, k) <= nrep);
    }
  }
}

TEST_CASE("batch estimation stops after b1 when samples are flat") {
  const int p = 3;
  auto counter = std::make_shared<std::atomic<std::int64_t>>(0);
  const Nanos cost = ns_from_us(50.0);
  const BenchFunction fn = constant_cost_function(cost, counter);

  NrepConfig cfg;
  cfg.b1 = 5;
  cfg.b2 = 5;
  cfg.min_reps = 1;
  const Nanos t1 = ns_from_us(1000.0);
  const std::int64_t nrep =
      estimate_nrep(fn, 1, t1, p, cfg, quiet_model(), Mode::Virtual);
  CHECK(nrep == 20);  // ceil(1000 / 50)
  CHECK(counter->load() == cfg.b1 * p);  // second batch skipped
}

TEST_CASE("batch estimation adds b2 under jitter and honors b2=0") {
  const int p = 4;
  PlanOptions opt;
  auto counter = std::make_shared<std::atomic<std::int64_t>>(0);
  const BenchFunction fn =
      counted(make_default_function(CollectiveKind::Allgather, p, opt), counter);

  NrepConfig cfg;
  cfg.b1 = 5;
  cfg.b2 = 5;
  cfg.min_reps = 1;
  cfg.rse_threshold_batch = 1e-9;  // always triggers the second batch
  const Nanos t1 = ns_from_us(500.0);
  estimate_nrep(fn, 4, t1, p, cfg, noisy_model(11), Mode::Virtual);
  CHECK(counter->load() == (cfg.b1 + cfg.b2) * p);

  counter->store(0);
  cfg.b2 = 0;  // second batch disabled outright
  estimate_nrep(fn, 4, t1, p, cfg, noisy_model(11), Mode::Virtual);
  CHECK(counter->load() == cfg.b1 * p);
}

TEST_CASE("batch estimation rejects zero-cost bodies") {
  const int p = 2;
  BenchFunction fn;
  fn.id = "noop";
  fn.make_body = [](std::int64_t) -> CollectiveBody {
    return [](RankHandle&) {};
  };
  NrepConfig cfg;
  CHECK(code_of([&] {
          estimate_nrep(fn, 1, ns_from_us(100.0), p, cfg, quiet_model(),
                        Mode::Virtual);
        }) == Errc::DegenerateSamples);
  cfg.b2 = 0;  // without the RSE probe the zero minimum is caught instead
  CHECK(code_of([&] {
          estimate_nrep(fn, 1, ns_from_us(100.0), p, cfg, quiet_model(),
                        Mode::Virtual);
        }) == Errc::DegenerateSamples);
}

TEST_CASE("benchmark pipeline emits ordered raw sample sets deterministically") {
  const int p = 4;
  const CostModel model = quiet_model();
  PlanOptions opt;
  NrepConfig cfg;
  cfg.nmpiruns = 3;
  cfg.min_reps = 4;

  BenchPlanItem item;
  item.function = make_default_function(CollectiveKind::Allgather, p, opt);
  item.msizes = {4, 16};
  const std::vector<BenchPlanItem> plan{item};

  auto collect = [&] {
    std::vector<SampleSet> sets;
    run_benchmark(plan, p, cfg, model, Mode::Virtual,
                  [&](const SampleSet& s) { sets.push_back(s); });
    return sets;
  };
  const std::vector<SampleSet> sets = collect();

  REQUIRE(sets.size() == 6);  // 2 sizes x 3 runs
  const Nanos t1 = estimate_t1(item.function, p, cfg, model, Mode::Virtual);
  std::size_t idx = 0;
  for (std::int64_t msize : item.msizes) {
    const std::int64_t nrep =
        estimate_nrep(item.function, msize, t1, p, cfg, model, Mode::Virtual);
    CHECK(nrep >= cfg.min_reps);
    const CollectiveCall call = call_for_msize(CollectiveKind::Allgather, p,
                                               msize, opt.datatype, opt.op);
    const Nanos expected = algorithm_cost_schedule(call, "ring", model);
    for (int run = 0; run < cfg.nmpiruns; ++run, ++idx) {
      const SampleSet& set = sets[idx];
      CHECK(set.function_id == "allgather_default");
      CHECK(set.msize_bytes == msize);
      CHECK(set.nprocs == p);
      CHECK(set.mpirun_idx == run);
      CHECK(static_cast<std::int64_t>(set.latency_ns.size()) == nrep);
      for (Nanos v : set.latency_ns) CHECK(v == expected);
    }
  }

  // Same settings, same output — including under jitter.
  const std::vector<SampleSet> again = collect();
  REQUIRE(again.size() == sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    CHECK(again[i].latency_ns == sets[i].latency_ns);
  }
}

TEST_CASE("benchmark pipeline rejects empty plans") {
  NrepConfig cfg;
  const std::vector<BenchPlanItem> empty;
  CHECK(code_of([&] {
          run_benchmark(empty, 2, cfg, quiet_model(), Mode::Virtual,
                        [](const SampleSet&) {});
        }) == Errc::EmptyInput);

  BenchPlanItem item;
  item.function = make_default_function(CollectiveKind::Bcast, 2, PlanOptions{});
  const std::vector<BenchPlanItem> sizeless{item};
  CHECK(code_of([&] {
          run_benchmark(sizeless, 2, cfg, quiet_model(), Mode::Virtual,
                        [](const SampleSet&) {});
        }) == Errc::EmptyInput);
}

TEST_CASE("mock-up bodies cost the sum of their stages") {
  // Gather (binomial) into the root followed by a broadcast (linear) of the
  // assembled vector: the broadcast's critical path starts at the gather's
  // completion point (the root), so the virtual makespans add exactly.
  const int p = 4;
  const CostModel model = quiet_model();
  PlanOptions opt;
  opt.msg_arena_bytes = 1 << 20;
  opt.int_arena_bytes = 1 << 12;
  const BenchFunction fn =
      make_mockup_function(MockupId::AllgatherAsGatherBcast, p, opt);
  CHECK(fn.id == "allgather_as_gather_bcast");

  const std::int64_t msize = 8;
  const CollectiveBody body = fn.make_body(msize);

  CollectiveCall gather = call_for_msize(CollectiveKind::Gather, p, msize,
                                         opt.datatype, opt.op);
  CollectiveCall bcast;
  bcast.kind = CollectiveKind::Bcast;
  bcast.nprocs = p;
  bcast.count = msize * p;  // the gathered vector
  bcast.datatype = opt.datatype;
  bcast.root = 0;
  const Nanos expected = algorithm_cost_schedule(gather, "binomial", model) +
                         algorithm_cost_schedule(bcast, "linear", model);

  run_spmd(p, model, Mode::Virtual, [&](RankHandle& rh) {
    auto s = timed_observations(rh, body, 2);
    for (Nanos v : s) CHECK(v == expected);
  });
}

TEST_CASE("message sizes map onto call conventions") {
  const CollectiveCall scatter =
      call_for_msize(CollectiveKind::Scatter, 4, 16, Datatype::Byte, ReduceOp::Bor);
  CHECK(scatter.count == 64);  // 16 bytes per receiver

  const CollectiveCall rsb = call_for_msize(CollectiveKind::ReduceScatterBlock,
                                            4, 16, Datatype::Byte, ReduceOp::Bor);
  CHECK(rsb.count == 64);

  const CollectiveCall a2a =
      call_for_msize(CollectiveKind::Alltoall, 4, 16, Datatype::Byte, ReduceOp::Bor);
  CHECK(a2a.count == 16);  // per peer

  const CollectiveCall reduce = call_for_msize(CollectiveKind::Reduce, 4, 16,
                                               Datatype::Int32, ReduceOp::Sum);
  CHECK(reduce.count == 4);  // 16 bytes / 4-byte elements

  CHECK(code_of([&] {
          call_for_msize(CollectiveKind::Gatherv, 4, 16, Datatype::Byte,
                         ReduceOp::Bor);
        }) == Errc::ConfigError);
  CHECK(code_of([&] {
          call_for_msize(CollectiveKind::Reduce, 4, 6, Datatype::Int32,
                         ReduceOp::Sum);
        }) == Errc::ConfigError);
  CHECK(code_of([&] {
          call_for_msize(CollectiveKind::Bcast, 4, 0, Datatype::Byte,
                         ReduceOp::Bor);
        }) == Errc::ConfigError);

  CHECK(default_function_id(CollectiveKind::ReduceScatterBlock) ==
        "reduce_scatter_block_default");
  CHECK(tuned_function_id(CollectiveKind::Allgather) == "allgather_tuned");
  const BenchFunction f64 = make_default_function(
      CollectiveKind::Reduce, 4,
      PlanOptions{Datatype::Float64, ReduceOp::Sum, {}, 1 << 20, 1 << 12});
  CHECK(f64.min_msize_bytes == 8);
}

TEST_CASE("sample sets round-trip through csv bytes") {
  std::vector<SampleSet> sets;
  SampleSet a;
  a.function_id = "allgather_default";
  a.msize_bytes = 16;
  a.nprocs = 4;
  a.mpirun_idx = 0;
  a.latency_ns = {1234567, 1000, 0, 999};  // 1234.567, 1.000, 0.000, 0.999 µs
  sets.push_back(a);
  SampleSet b = a;
  b.mpirun_idx = 1;
  b.latency_ns = {5000000000000, 1};
  sets.push_back(b);
  SampleSet c;
  c.function_id = "allgather_as_gather_bcast";
  c.msize_bytes = 100;
  c.nprocs = 4;
  c.mpirun_idx = 0;
  c.latency_ns = {770000};
  sets.push_back(c);

  CsvMeta meta;
  meta.nprocs = 4;
  meta.mode = Mode::Virtual;
  meta.seed = 99;
  const std::vector<std::string> footer{"# MPI_Allgather 100 allgather_as_gather_bcast",
                                        "# msg_buffer_bytes=1048576"};

  std::ostringstream out;
  write_samples_csv(out, meta, sets, footer);
  const std::string text = out.str();
  CHECK(text.find("# nprocs=4\n") != std::string::npos);
  CHECK(text.find("# mode=virtual\n") != std::string::npos);
  CHECK(text.find("# seed=99\n") != std::string::npos);
  CHECK(text.find("# clock=virtual\n") != std::string::npos);
  CHECK(text.find("# barrier=dissemination\n") != std::string::npos);
  CHECK(text.find("function,msize_bytes,nprocs,mpirun_idx,rep_idx,latency_us\n") !=
        std::string::npos);
  CHECK(text.find("allgather_default,16,4,0,0,1234.567\n") != std::string::npos);
  CHECK(text.find("allgather_default,16,4,0,2,0.000\n") != std::string::npos);

  std::istringstream in(text);
  const CsvData parsed = read_samples_csv(in);
  CHECK(parsed.meta.nprocs == 4);
  CHECK(parsed.meta.mode == Mode::Virtual);
  CHECK(parsed.meta.seed == 99);
  CHECK(parsed.raw_meta.at("barrier") == "dissemination");
  REQUIRE(parsed.sets.size() == sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    CHECK(parsed.sets[i].function_id == sets[i].function_id);
    CHECK(parsed.sets[i].msize_bytes == sets[i].msize_bytes);
    CHECK(parsed.sets[i].nprocs == sets[i].nprocs);
    CHECK(parsed.sets[i].mpirun_idx == sets[i].mpirun_idx);
    CHECK(parsed.sets[i].latency_ns == sets[i].latency_ns);
  }
  REQUIRE(parsed.footer_lines.size() == 2);
  CHECK(parsed.footer_lines[0] == footer[0]);
  CHECK(parsed.footer_lines[1] == footer[1]);

  // Rewriting the parsed data reproduces the bytes exactly.
  std::ostringstream out2;
  write_samples_csv(out2, parsed.meta, parsed.sets, parsed.footer_lines);
  CHECK(out2.str() == text);
}

TEST_CASE("csv parser rejects malformed input with line numbers") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_samples_csv(in);
  };
  const std::string header =
      "function,msize_bytes,nprocs,mpirun_idx,rep_idx,latency_us\n";

  CHECK(code_of([&] { parse(""); }) == Errc::ParseError);
  CHECK(code_of([&] { parse("# nprocs=4\nnot,a,header\n"); }) == Errc::ParseError);
  CHECK(code_of([&] { parse(header + "f,1,2,0,1,5.000\n"); }) ==
        Errc::ParseError);  // group starting at rep 1
  CHECK(code_of([&] { parse(header + "f,1,2,0,0,5.000\nf,1,2,0,2,5.000\n"); }) ==
        Errc::ParseError);  // skipped rep
  CHECK(code_of([&] { parse(header + "f,1,2,0,0\n"); }) == Errc::ParseError);
  CHECK(code_of([&] { parse(header + "f,1,2,0,0,1.2345\n"); }) ==
        Errc::ParseError);  // sub-nanosecond digits
  CHECK(code_of([&] { parse(header + "f,1,2,0,0,abc\n"); }) == Errc::ParseError);
  CHECK(code_of([&] { parse(header + "f,1,2,0,0,5.000\n# footer\nf,1,2,1,0,5.000\n"); }) ==
        Errc::ParseError);  // data after footer
  CHECK(code_of([&] { parse("# mode=sometimes\n" + header); }) == Errc::ParseError);

  // Tolerated: blank lines, padded metadata, integer-valued latencies.
  const CsvData ok = parse("#  nprocs = 8 \n\n" + header + "f,1,8,0,0,5\n");
  CHECK(ok.meta.nprocs == 8);
  REQUIRE(ok.sets.size() == 1);
  CHECK(ok.sets[0].latency_ns == std::vector<Nanos>{5000});
}

TEST_CASE("wallclock benchmarking takes real samples") {
  const int p = 3;
  CostModel model = quiet_model();
  PlanOptions opt;
  const BenchFunction fn = make_default_function(CollectiveKind::Bcast, p, opt);
  const CollectiveBody body = fn.make_body(4);

  run_spmd(p, model, Mode::Wallclock, [&](RankHandle& rh) {
    auto s = timed_observations(rh, body, 3);
    CHECK(s.size() == 3);
    for (Nanos v : s) CHECK(v >= 0);
  });

  NrepConfig cfg;
  cfg.rse_threshold_1byte = 0.8;  // generous: wallclock noise is real
  cfg.nmpiruns = 2;
  cfg.convergence_cap = 5000;
  const Nanos t1 = estimate_t1(fn, p, cfg, model, Mode::Wallclock);
  CHECK(t1 > 0);
}
