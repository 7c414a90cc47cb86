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

#include "pgtune/datatype.hpp"

#include <algorithm>
#include <cstring>
#include <utility>

namespace pgtune {

const char* datatype_name(Datatype dt) noexcept {
  switch (dt) {
    case Datatype::Byte:
      return "BYTE";
    case Datatype::Int32:
      return "INT32";
    case Datatype::Float64:
      return "FLOAT64";
  }
  return "BYTE";
}

const char* reduce_op_name(ReduceOp op) noexcept {
  switch (op) {
    case ReduceOp::Sum:
      return "SUM";
    case ReduceOp::Max:
      return "MAX";
    case ReduceOp::Bor:
      return "BOR";
  }
  return "SUM";
}

namespace {

template <typename T, typename F>
void combine_elems(std::span<const std::byte> in, std::span<std::byte> inout,
                   std::int64_t count, F op) {
  for (std::int64_t i = 0; i < count; ++i) {
    T a, b;
    std::memcpy(&a, in.data() + i * static_cast<std::int64_t>(sizeof(T)),
                sizeof(T));
    std::memcpy(&b, inout.data() + i * static_cast<std::int64_t>(sizeof(T)),
                sizeof(T));
    const T r = op(a, b);
    std::memcpy(inout.data() + i * static_cast<std::int64_t>(sizeof(T)), &r,
                sizeof(T));
  }
}

}  // namespace

void apply_reduce(ReduceOp op, Datatype dt, std::span<const std::byte> in,
                  std::span<std::byte> inout, std::int64_t count) {
  require_op_datatype(op, dt);
  const std::int64_t bytes = count * extent(dt);
  if (count < 0 || std::cmp_less(in.size(), bytes) ||
      std::cmp_less(inout.size(), bytes))
    fail(Errc::SizeMismatch, "reduction buffers shorter than count * extent");

  if (op == ReduceOp::Bor) {
    // Byte-wise OR regardless of the element type.
    for (std::int64_t i = 0; i < bytes; ++i)
      inout[static_cast<std::size_t>(i)] |= in[static_cast<std::size_t>(i)];
    return;
  }

  switch (dt) {
    case Datatype::Int32:
      if (op == ReduceOp::Sum)
        combine_elems<std::int32_t>(in, inout, count, [](auto a, auto b) {
          return static_cast<std::int32_t>(
              static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
        });
      else
        combine_elems<std::int32_t>(
            in, inout, count, [](auto a, auto b) { return std::max(a, b); });
      break;
    case Datatype::Float64:
      if (op == ReduceOp::Sum)
        combine_elems<double>(in, inout, count,
                              [](auto a, auto b) { return a + b; });
      else
        combine_elems<double>(in, inout, count,
                              [](auto a, auto b) { return std::max(a, b); });
      break;
    case Datatype::Byte:
      // require_op_datatype rejected SUM/MAX on BYTE already.
      break;
  }
}

}  // namespace pgtune
