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

#ifndef PGTUNE_DATATYPE_HPP
#define PGTUNE_DATATYPE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "pgtune/error.hpp"

namespace pgtune {

enum class Datatype { Byte, Int32, Float64 };

inline int extent(Datatype dt) noexcept {
  switch (dt) {
    case Datatype::Byte:
      return 1;
    case Datatype::Int32:
      return 4;
    case Datatype::Float64:
      return 8;
  }
  return 1;
}

const char* datatype_name(Datatype dt) noexcept;

/// Reduction operators.  All three are commutative and associative; BOR is
/// defined byte-wise on any datatype, SUM/MAX require an arithmetic type.
enum class ReduceOp { Sum, Max, Bor };

const char* reduce_op_name(ReduceOp op) noexcept;

inline bool op_valid_for(ReduceOp op, Datatype dt) noexcept {
  if (op == ReduceOp::Bor) return true;
  return dt == Datatype::Int32 || dt == Datatype::Float64;
}

inline void require_op_datatype(ReduceOp op, Datatype dt) {
  if (!op_valid_for(op, dt))
    fail(Errc::OpDatatypeMismatch,
         std::string(reduce_op_name(op)) + " is not defined on " +
             datatype_name(dt));
}

/// inout[i] := op(in[i], inout[i]) for `count` elements of `dt`.
///
/// Buffers are raw byte views and may be arbitrarily aligned (scratch arenas
/// pack allocations tightly), so elements are moved with memcpy.  Throws
/// OpDatatypeMismatch for invalid (op, dt) pairs before touching any data.
void apply_reduce(ReduceOp op, Datatype dt, std::span<const std::byte> in,
                  std::span<std::byte> inout, std::int64_t count);

}  // namespace pgtune

#endif  // PGTUNE_DATATYPE_HPP
