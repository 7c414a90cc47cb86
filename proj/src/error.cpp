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

#include "pgtune/error.hpp"

namespace pgtune {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UnknownRank:
      return "UnknownRank";
    case Errc::Deadlock:
      return "Deadlock";
    case Errc::RankPanic:
      return "RankPanic";
    case Errc::OpDatatypeMismatch:
      return "OpDatatypeMismatch";
    case Errc::SizeMismatch:
      return "SizeMismatch";
    case Errc::RootOutOfRange:
      return "RootOutOfRange";
    case Errc::KindMismatch:
      return "KindMismatch";
    case Errc::InsufficientScratch:
      return "InsufficientScratch";
    case Errc::DegenerateSamples:
      return "DegenerateSamples";
    case Errc::NonConvergence:
      return "NonConvergence";
    case Errc::EmptyInput:
      return "EmptyInput";
    case Errc::MissingDefault:
      return "MissingDefault";
    case Errc::ParseError:
      return "ParseError";
    case Errc::InvariantViolation:
      return "InvariantViolation";
    case Errc::KeyMismatch:
      return "KeyMismatch";
    case Errc::ConfigError:
      return "ConfigError";
    case Errc::UnknownCollective:
      return "UnknownCollective";
    case Errc::UnknownMockup:
      return "UnknownMockup";
  }
  return "UnknownError";
}

}  // namespace pgtune
