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

#include "pgtune/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pgtune/error.hpp"

namespace pgtune {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                         s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            const std::string& expected) {
  fail(Errc::ConfigError, "key '" + std::string(key) + "': value '" +
                              std::string(value) + "' is not " + expected);
}

template <typename Int>
Int parse_integer(std::string_view key, std::string_view value) {
  Int out{};
  const char* begin = value.data();
  const char* end = begin + value.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end) bad_value(key, value, "an integer");
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string buf(value);
  errno = 0;
  char* end = nullptr;
  const double out = std::strtod(buf.c_str(), &end);
  if (errno != 0 || end != buf.c_str() + buf.size() || buf.empty()) {
    bad_value(key, value, "a number");
  }
  return out;
}

std::vector<std::int64_t> parse_msizes(std::string_view key,
                                       std::string_view value) {
  std::vector<std::int64_t> out;
  std::string_view rest = value;
  while (!rest.empty()) {
    const std::size_t comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    if (item.empty()) bad_value(key, value, "a comma-separated size list");
    out.push_back(parse_integer<std::int64_t>(key, item));
    rest = comma == std::string_view::npos ? std::string_view{}
                                           : rest.substr(comma + 1);
  }
  if (out.empty()) bad_value(key, value, "a comma-separated size list");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Mode parse_mode(std::string_view key, std::string_view value) {
  if (value == "virtual") return Mode::Virtual;
  if (value == "wallclock") return Mode::Wallclock;
  bad_value(key, value, "'virtual' or 'wallclock'");
}

Datatype parse_datatype(std::string_view key, std::string_view value) {
  if (value == "byte") return Datatype::Byte;
  if (value == "int32") return Datatype::Int32;
  if (value == "float64") return Datatype::Float64;
  bad_value(key, value, "'byte', 'int32' or 'float64'");
}

ReduceOp parse_op(std::string_view key, std::string_view value) {
  if (value == "sum") return ReduceOp::Sum;
  if (value == "max") return ReduceOp::Max;
  if (value == "bor") return ReduceOp::Bor;
  bad_value(key, value, "'sum', 'max' or 'bor'");
}

}  // namespace

std::vector<std::int64_t> default_msize_grid() {
  std::vector<std::int64_t> grid;
  for (std::int64_t m = 1; m <= 65536; m *= 2) grid.push_back(m);
  grid.push_back(100);
  grid.push_back(10000);
  std::sort(grid.begin(), grid.end());
  return grid;
}

void set_config_key(RunConfig& config, std::string_view key,
                    std::string_view value) {
  constexpr std::string_view kAlgPrefix = "default_alg.";
  if (key.rfind(kAlgPrefix, 0) == 0) {
    const std::string_view name = key.substr(kAlgPrefix.size());
    const auto kind = parse_collective(name);
    if (!kind) {
      fail(Errc::ConfigError, "key '" + std::string(key) + "': '" +
                                  std::string(name) +
                                  "' is not a collective");
    }
    validate_algorithm(*kind, value);
    config.default_alg.variant(*kind) = std::string(value);
    return;
  }

  if (key == "alpha_us") {
    config.model.alpha_us = parse_double(key, value);
  } else if (key == "beta_us_per_byte") {
    config.model.beta_us_per_byte = parse_double(key, value);
  } else if (key == "gamma_us_per_byte") {
    config.model.gamma_us_per_byte = parse_double(key, value);
  } else if (key == "jitter_fraction") {
    config.model.jitter_fraction = parse_double(key, value);
  } else if (key == "seed") {
    config.model.seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "mode") {
    config.mode = parse_mode(key, value);
  } else if (key == "nprocs") {
    config.nprocs = parse_integer<int>(key, value);
  } else if (key == "msizes") {
    config.msizes = parse_msizes(key, value);
  } else if (key == "datatype") {
    config.datatype = parse_datatype(key, value);
  } else if (key == "op") {
    config.op = parse_op(key, value);
  } else if (key == "rse_threshold_1byte") {
    config.nrep.rse_threshold_1byte = parse_double(key, value);
  } else if (key == "rse_threshold_batch") {
    config.nrep.rse_threshold_batch = parse_double(key, value);
  } else if (key == "b1") {
    config.nrep.b1 = parse_integer<std::int64_t>(key, value);
  } else if (key == "b2") {
    config.nrep.b2 = parse_integer<std::int64_t>(key, value);
  } else if (key == "min_reps") {
    config.nrep.min_reps = parse_integer<std::int64_t>(key, value);
  } else if (key == "nmpiruns") {
    config.nrep.nmpiruns = parse_integer<int>(key, value);
  } else if (key == "convergence_cap") {
    config.nrep.convergence_cap = parse_integer<std::int64_t>(key, value);
  } else if (key == "size_msg_buffer_bytes") {
    config.size_msg_buffer_bytes = parse_integer<std::size_t>(key, value);
  } else if (key == "size_int_buffer_bytes") {
    config.size_int_buffer_bytes = parse_integer<std::size_t>(key, value);
  } else if (key == "profile_dir") {
    if (value.empty()) bad_value(key, value, "a directory path");
    config.profile_dir = std::string(value);
  } else if (key == "replacement_threshold") {
    config.replacement_threshold = parse_double(key, value);
  } else if (key == "chunk_size_C") {
    config.chunk_size_C = parse_integer<std::int64_t>(key, value);
  } else {
    fail(Errc::ConfigError, "unknown configuration key '" + std::string(key) +
                                "'");
  }
}

RunConfig parse_config_text(std::string_view text, const std::string& source) {
  RunConfig config;
  std::size_t line_no = 0;
  std::string_view rest = text;
  while (!rest.empty()) {
    ++line_no;
    const std::size_t nl = rest.find('\n');
    std::string_view line = trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{}
                                        : rest.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(Errc::ConfigError, source + " line " + std::to_string(line_no) +
                                  ": expected key=value, got '" +
                                  std::string(line) + "'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) {
      fail(Errc::ConfigError, source + " line " + std::to_string(line_no) +
                                  ": empty key");
    }
    try {
      set_config_key(config, key, value);
    } catch (const Error& e) {
      fail(e.code(), source + " line " + std::to_string(line_no) + ": " +
                         e.what());
    }
  }
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail(Errc::ConfigError, "cannot read configuration file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

void apply_overrides(RunConfig& config,
                     std::span<const std::string> overrides) {
  for (const std::string& assignment : overrides) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
      fail(Errc::ConfigError,
           "override '" + assignment + "' is not of the form key=value");
    }
    set_config_key(config,
                   trim(std::string_view(assignment).substr(0, eq)),
                   trim(std::string_view(assignment).substr(eq + 1)));
  }
}

void validate_config(const RunConfig& config) {
  if (config.nprocs < 1) {
    fail(Errc::ConfigError, "nprocs must be >= 1");
  }
  if (config.msizes.empty()) {
    fail(Errc::ConfigError, "the message-size grid is empty");
  }
  for (const std::int64_t m : config.msizes) {
    if (m < 1) {
      fail(Errc::ConfigError,
           "message size " + std::to_string(m) + " must be >= 1");
    }
  }
  if (config.model.jitter_fraction < 0.0) {
    fail(Errc::ConfigError, "jitter_fraction must be >= 0");
  }
  if (config.model.alpha_us < 0.0 || config.model.beta_us_per_byte < 0.0 ||
      config.model.gamma_us_per_byte < 0.0) {
    fail(Errc::ConfigError, "cost-model coefficients must be >= 0");
  }
  if (config.replacement_threshold < 0.0 ||
      config.replacement_threshold >= 1.0) {
    fail(Errc::ConfigError, "replacement_threshold must lie in [0, 1)");
  }
  if (config.chunk_size_C < 1) {
    fail(Errc::ConfigError, "chunk_size_C must be >= 1");
  }
  if (!op_valid_for(config.op, config.datatype)) {
    fail(Errc::ConfigError,
         std::string(reduce_op_name(config.op)) + " is not defined on " +
             datatype_name(config.datatype));
  }
  validate_nrep_config(config.nrep);
  for (int k = 0; k < kCollectiveKindCount; ++k) {
    const auto kind = static_cast<CollectiveKind>(k);
    validate_algorithm(kind, config.default_alg.variant(kind));
  }
}

}  // namespace pgtune
