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

#ifndef PGTUNE_ERROR_HPP
#define PGTUNE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pgtune {

/// Every failure the library reports carries one of these codes so callers
/// (and the CLI exit-code mapping) can react without string matching.
enum class Errc {
  UnknownRank,
  Deadlock,
  RankPanic,
  OpDatatypeMismatch,
  SizeMismatch,
  RootOutOfRange,
  KindMismatch,
  InsufficientScratch,
  DegenerateSamples,
  NonConvergence,
  EmptyInput,
  MissingDefault,
  ParseError,
  InvariantViolation,
  KeyMismatch,
  ConfigError,
  UnknownCollective,
  UnknownMockup,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pgtune

#endif  // PGTUNE_ERROR_HPP
