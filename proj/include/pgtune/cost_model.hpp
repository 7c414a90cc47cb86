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

#ifndef PGTUNE_COST_MODEL_HPP
#define PGTUNE_COST_MODEL_HPP

#include <cstdint>

#include "pgtune/time_units.hpp"

namespace pgtune {

/// Linear (latency + bandwidth) cost model for simulated message passing.
///
/// A message of L bytes costs alpha_us * (1 + jitter) + beta_us_per_byte * L
/// on the wire; a local reduction of L bytes costs gamma_us_per_byte * L of
/// compute.  Jitter is a multiplicative perturbation on alpha only, drawn
/// deterministically per message from (seed, src, dst, per-pair ordinal), so
/// a run is a pure function of the model regardless of scheduling.
struct CostModel {
  double alpha_us = 100.0;
  double beta_us_per_byte = 0.01;
  double gamma_us_per_byte = 0.0;
  double jitter_fraction = 0.0;  // >= 0; 0 disables jitter entirely
  std::uint64_t seed = 1;
};

enum class Mode { Virtual, Wallclock };

/// Uniform [0,1) deviate for message `ordinal` on the (src,dst) pair.
/// Pure hash of its arguments: independent of send order between pairs.
double jitter_unit(std::uint64_t seed, int src, int dst,
                   std::uint64_t ordinal);

/// Jitter-free wire cost of one L-byte message, quantized to nanoseconds the
/// same way the transport quantizes it.  Shared by the simulator and the
/// analytic cost schedules so "exactly equal" is well defined.
inline Nanos hop_cost_ns(const CostModel& m, std::int64_t bytes) {
  return ns_from_us(m.alpha_us) +
         ns_from_us(m.beta_us_per_byte * static_cast<double>(bytes));
}

/// Wire cost with a concrete jitter deviate u in [0,1).
inline Nanos hop_cost_jittered_ns(const CostModel& m, std::int64_t bytes,
                                  double u) {
  return ns_from_us(m.alpha_us * (1.0 + u * m.jitter_fraction)) +
         ns_from_us(m.beta_us_per_byte * static_cast<double>(bytes));
}

/// Compute cost of reducing L bytes locally.
inline Nanos local_reduce_cost_ns(const CostModel& m, std::int64_t bytes) {
  return ns_from_us(m.gamma_us_per_byte * static_cast<double>(bytes));
}

}  // namespace pgtune

#endif  // PGTUNE_COST_MODEL_HPP
