// Copyright 2026 The pmmh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pmmh/common.hpp"
#include "pmmh/harness/config.hpp"
#include "pmmh/trace.hpp"

namespace pmmh {

// ---------------------------------------------------------------------------
// Numeric round-trip formatting: shortest decimal that parses back to the
// same double; infinities and missing values get fixed tokens.

inline std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  if (x == kPosInf) return "inf";
  if (x == kNegInf) return "-inf";
  char buffer[32];
  const auto result =
      std::to_chars(buffer, buffer + sizeof(buffer), x);
  return std::string(buffer, result.ptr);
}

inline double parse_trace_double(const std::string& token) {
  if (token == "NA") return kNaN;
  if (token == "inf") return kPosInf;
  if (token == "-inf") return kNegInf;
  char* end = nullptr;
  const double x = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size()) {
    throw ConfigError("malformed numeric token: '" + token + "'");
  }
  return x;
}

// ---------------------------------------------------------------------------
// Trace file: commented header carrying run identity and counters, then
// one delimited row per sweep. Coordinates are padded to the widest model
// dimension with NA.

inline void write_trace_csv(const std::string& path, const ChainTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open trace file for writing: " + path);
  Eigen::Index coord_columns = 0;
  for (const auto& record : trace.records) {
    coord_columns = std::max(coord_columns, record.theta.coords.size());
  }
  out << "# pmmh trace v1\n";
  out << "# seed = " << trace.seed << "\n";
  out << "# config_fingerprint = " << trace.config_fingerprint << "\n";
  out << "# block_draws = " << trace.block_draws << "\n";
  out << "# refresh_attempts = " << trace.refresh_attempts << "\n";
  out << "# refresh_accepts = " << trace.refresh_accepts << "\n";
  out << "# rw_attempts = " << trace.rw_attempts << "\n";
  out << "# rw_accepts = " << trace.rw_accepts << "\n";
  out << "# coord_columns = " << coord_columns << "\n";
  out << "sweep,model_id";
  for (Eigen::Index j = 0; j < coord_columns; ++j) out << ",coord" << (j + 1);
  out << ",accepted,log_ratio,log_gamma\n";
  for (const auto& record : trace.records) {
    out << record.sweep << "," << record.theta.model_id;
    for (Eigen::Index j = 0; j < coord_columns; ++j) {
      out << ",";
      out << (j < record.theta.coords.size()
                  ? format_double(record.theta.coords[j])
                  : "NA");
    }
    out << "," << (record.accepted ? 1 : 0) << ","
        << format_double(record.log_ratio) << ","
        << format_double(record.log_gamma) << "\n";
  }
  if (!out) throw ConfigError("failed writing trace file: " + path);
}

inline ChainTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  ChainTrace trace;
  std::string line;
  Eigen::Index coord_columns = 0;
  bool header_seen = false;
  auto parse_header_u64 = [&line](const std::string& key) {
    return std::stoull(line.substr(line.find('=') + 1));
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("seed =") != std::string::npos) {
        trace.seed = parse_header_u64("seed");
      } else if (line.find("config_fingerprint =") != std::string::npos) {
        std::string value = line.substr(line.find('=') + 1);
        trace.config_fingerprint = detail::trim(value);
      } else if (line.find("block_draws =") != std::string::npos) {
        trace.block_draws = parse_header_u64("block_draws");
      } else if (line.find("refresh_attempts =") != std::string::npos) {
        trace.refresh_attempts = parse_header_u64("refresh_attempts");
      } else if (line.find("refresh_accepts =") != std::string::npos) {
        trace.refresh_accepts = parse_header_u64("refresh_accepts");
      } else if (line.find("rw_attempts =") != std::string::npos) {
        trace.rw_attempts = parse_header_u64("rw_attempts");
      } else if (line.find("rw_accepts =") != std::string::npos) {
        trace.rw_accepts = parse_header_u64("rw_accepts");
      } else if (line.find("coord_columns =") != std::string::npos) {
        coord_columns =
            static_cast<Eigen::Index>(parse_header_u64("coord_columns"));
      }
      continue;
    }
    if (!header_seen) {  // column header row
      header_seen = true;
      continue;
    }
    std::stringstream row(line);
    std::string tok;
    std::vector<std::string> cells;
    while (std::getline(row, tok, ',')) cells.push_back(tok);
    if (static_cast<Eigen::Index>(cells.size()) != 5 + coord_columns) {
      throw ConfigError("trace row has wrong arity: " + line);
    }
    StepRecord record;
    record.sweep = std::stoull(cells[0]);
    record.theta.model_id = std::stoi(cells[1]);
    std::vector<double> coords;
    for (Eigen::Index j = 0; j < coord_columns; ++j) {
      const std::string& cell = cells[static_cast<std::size_t>(2 + j)];
      if (cell != "NA") coords.push_back(parse_trace_double(cell));
    }
    record.theta.coords =
        Eigen::Map<Vector>(coords.data(),
                           static_cast<Eigen::Index>(coords.size()));
    const std::size_t base = static_cast<std::size_t>(2 + coord_columns);
    record.accepted = cells[base] == "1";
    record.log_ratio = parse_trace_double(cells[base + 1]);
    record.log_gamma = parse_trace_double(cells[base + 2]);
    trace.records.push_back(std::move(record));
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Generic key-value block used by summary files.

inline void write_key_value_file(const std::string& path,
                                 const std::string& title,
                                 const std::vector<std::pair<std::string,
                                                             std::string>>&
                                     entries) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open file for writing: " + path);
  out << "# " << title << "\n";
  for (const auto& [key, value] : entries) {
    out << key << " = " << value << "\n";
  }
  if (!out) throw ConfigError("failed writing file: " + path);
}

inline KeyValueMap read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  return parse_key_values(in);
}

inline void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory " + dir + ": " +
                      ec.message());
  }
}

}  // namespace pmmh
