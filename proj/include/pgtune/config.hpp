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

#ifndef PGTUNE_CONFIG_HPP
#define PGTUNE_CONFIG_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgtune/bench.hpp"
#include "pgtune/collectives.hpp"
#include "pgtune/cost_model.hpp"
#include "pgtune/datatype.hpp"

namespace pgtune {

/// The message-size grid used when none is configured: powers of two from
/// 1 B to 64 KiB, plus 100 and 10000 to land between the powers.
std::vector<std::int64_t> default_msize_grid();

/// Everything a pipeline run needs, assembled from built-in defaults, an
/// optional key=value configuration file, and command-line overrides (which
/// take precedence over file values).
///
/// Keys: alpha_us, beta_us_per_byte, gamma_us_per_byte, jitter_fraction,
/// seed, mode (virtual|wallclock); nprocs; msizes (comma-separated bytes);
/// datatype (byte|int32|float64); op (sum|max|bor); rse_threshold_1byte,
/// rse_threshold_batch, b1, b2, min_reps, nmpiruns, convergence_cap;
/// size_msg_buffer_bytes, size_int_buffer_bytes; profile_dir;
/// replacement_threshold; chunk_size_C; default_alg.<collective>=<variant>.
struct RunConfig {
  CostModel model{};
  Mode mode = Mode::Virtual;
  int nprocs = 4;
  std::vector<std::int64_t> msizes = default_msize_grid();
  Datatype datatype = Datatype::Byte;
  ReduceOp op = ReduceOp::Bor;
  NrepConfig nrep{};
  std::size_t size_msg_buffer_bytes = 104857600;
  std::size_t size_int_buffer_bytes = 10240;
  std::string profile_dir = "profiles";
  double replacement_threshold = 0.10;
  std::int64_t chunk_size_C = 1;
  AlgorithmTable default_alg = default_algorithms();
};

/// Applies one `key=value` assignment.  Throws ConfigError for unknown keys
/// and unparsable or out-of-domain values; the message names the key.
/// The msizes list is normalised (sorted, duplicates dropped) on assignment.
void set_config_key(RunConfig& config, std::string_view key,
                    std::string_view value);

/// Parses key=value lines ('#' comments and blank lines ignored; '=' required
/// elsewhere).  `source` names the input in error messages.
RunConfig parse_config_text(std::string_view text, const std::string& source);

/// Reads and parses a configuration file.  Throws ConfigError when the file
/// cannot be read.
RunConfig load_config_file(const std::string& path);

/// Applies `key=value` override strings in order (later wins).
void apply_overrides(RunConfig& config,
                     std::span<const std::string> overrides);

/// Cross-field validation: group size and chunk size positive, a nonempty
/// positive message grid, thresholds in range, a defined (op, datatype)
/// pair, valid repetition-estimation knobs and a fully valid algorithm
/// table.  Throws ConfigError (or the knob/table-specific error).
void validate_config(const RunConfig& config);

}  // namespace pgtune

#endif  // PGTUNE_CONFIG_HPP
