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

#ifndef PGTUNE_TIME_UNITS_HPP
#define PGTUNE_TIME_UNITS_HPP

#include <cmath>
#include <cstdint>
#include <string>

namespace pgtune {

// All timekeeping is integer nanoseconds internally; microseconds are a
// reporting unit only.  This keeps repeated runs bit-identical (no float
// accumulation) while the model parameters stay in familiar us units.
using Nanos = std::int64_t;

inline Nanos ns_from_us(double us) {
  return static_cast<Nanos>(std::llround(us * 1000.0));
}

inline double us_from_ns(Nanos ns) { return static_cast<double>(ns) / 1000.0; }

/// Render integer nanoseconds as a fixed-point microsecond string with three
/// decimals ("700070 ns" -> "700.070").  Pure integer math: the exact same
/// bytes on every platform, which the deterministic-output tests rely on.
std::string format_us(Nanos ns);

}  // namespace pgtune

#endif  // PGTUNE_TIME_UNITS_HPP
