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

#include "pgtune/time_units.hpp"

#include <cstdio>

namespace pgtune {

std::string format_us(Nanos ns) {
  // Fixed three decimals via pure integer math so the text is an exact
  // rendering of the nanosecond value, with no float rounding in between.
  const bool neg = ns < 0;
  const unsigned long long mag =
      neg ? (0ULL - static_cast<unsigned long long>(ns))
          : static_cast<unsigned long long>(ns);
  const unsigned long long whole = mag / 1000ULL;
  const unsigned long long frac = mag % 1000ULL;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%s%llu.%03llu", neg ? "-" : "", whole,
                frac);
  return std::string(buf);
}

}  // namespace pgtune
