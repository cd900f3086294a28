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

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pmmh/common.hpp"

namespace pmmh {

// ---------------------------------------------------------------------------
// Flat key-value config file: one `key = value` per line, `#` comments,
// blank lines ignored. Unknown and duplicate keys are errors; misspelled
// parameters must never pass silently.

using KeyValueMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace detail

inline KeyValueMap parse_key_values(std::istream& in) {
  KeyValueMap kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key or value");
    }
    if (!kv.emplace(key, value).second) {
      throw ConfigError("duplicate config key: " + key);
    }
  }
  return kv;
}

inline KeyValueMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_key_values(in);
}

/// FNV-1a 64-bit over the sorted canonical "key=value\n" lines; names a
/// config in trace headers so files can be matched back to their inputs.
inline std::string config_fingerprint(const KeyValueMap& kv) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  auto mix = [&hash](const std::string& s) {
    for (unsigned char c : s) {
      hash ^= c;
      hash *= 0x100000001b3ull;
    }
  };
  for (const auto& [key, value] : kv) {
    mix(key);
    mix("=");
    mix(value);
    mix("\n");
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << hash;
  return out.str();
}

// ---------------------------------------------------------------------------
// Typed experiment configuration.

struct ExperimentConfig {
  std::string experiment;  // toy | glm | weight-diagnostic
  std::string kernel;      // marginal | gimh | mcwm
  std::uint64_t seed = 0;
  std::uint64_t sweeps = 0;
  std::size_t n = 0;
  int init_model = 0;
  std::string output_dir;

  double step_variance = 0.0;
  double truncation_radius = 0.0;
  Vector init_mean;
  double init_sd = 0.0;
  double init_spread = 0.0;

  std::uint64_t refresh_moves = 0;
  std::uint64_t rw_updates = 0;
  double rw_step_sd = 0.0;
  std::optional<std::uint64_t> burn_in;

  double lambda = 0.0;
  std::optional<std::uint64_t> dataset_seed;
  std::string dataset_path;
  bool scale_precision = false;

  double epsilon = 0.0;
  std::vector<std::size_t> n_list;
  std::uint64_t n_samples = 0;
  int theta_model = 0;

  std::vector<std::size_t> grid_n;
  std::vector<std::uint64_t> grid_sweeps;
  std::size_t workers = 1;

  std::string fingerprint;
  KeyValueMap raw;
};

namespace detail {

inline std::uint64_t parse_u64(const std::string& key,
                               const std::string& value) {
  try {
    std::size_t pos = 0;
    const auto parsed = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" +
                      value + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double parsed = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

inline std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) parts.push_back(trim(tok));
  return parts;
}

/// Tracks which keys a schema consumed so leftovers can be rejected.
class SchemaReader {
 public:
  explicit SchemaReader(const KeyValueMap& kv) : kv_(kv) {}

  bool has(const std::string& key) {
    if (kv_.count(key)) {
      used_.insert(key);
      return true;
    }
    return false;
  }
  std::string required(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required config key: " + key);
    return kv_.at(key);
  }
  std::optional<std::string> optional(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return kv_.at(key);
  }
  void finish() const {
    std::vector<std::string> unknown;
    for (const auto& [key, value] : kv_) {
      if (!used_.count(key)) unknown.push_back(key);
    }
    if (!unknown.empty()) {
      std::string what = "unknown config keys:";
      for (const auto& key : unknown) what += " " + key;
      throw ConfigError(what);
    }
  }

 private:
  const KeyValueMap& kv_;
  std::set<std::string> used_;
};

inline void read_toy_estimator_fields(SchemaReader& reader,
                                      ExperimentConfig& config) {
  config.step_variance =
      parse_double("step_variance", reader.required("step_variance"));
  config.truncation_radius =
      parse_double("truncation_radius", reader.required("truncation_radius"));
  const auto mean_parts = split_commas(reader.required("init_mean"));
  if (mean_parts.size() != 2) {
    throw ConfigError("init_mean: expected two comma-separated numbers");
  }
  config.init_mean.resize(2);
  config.init_mean[0] = parse_double("init_mean", mean_parts[0]);
  config.init_mean[1] = parse_double("init_mean", mean_parts[1]);
  config.init_sd = parse_double("init_sd", reader.required("init_sd"));
  if (config.step_variance <= 0.0 || config.truncation_radius <= 0.0 ||
      config.init_sd <= 0.0) {
    throw ConfigError("step_variance, truncation_radius, init_sd must be > 0");
  }
}

inline void read_glm_estimator_fields(SchemaReader& reader,
                                      ExperimentConfig& config) {
  config.step_variance =
      parse_double("step_variance", reader.required("step_variance"));
  config.truncation_radius =
      parse_double("truncation_radius", reader.required("truncation_radius"));
  config.init_spread =
      parse_double("init_spread", reader.required("init_spread"));
  if (config.step_variance <= 0.0 || config.truncation_radius <= 0.0 ||
      config.init_spread <= 0.0) {
    throw ConfigError(
        "step_variance, truncation_radius, init_spread must be > 0");
  }
  config.lambda = parse_double("lambda", reader.required("lambda"));
  if (config.lambda <= 0.0) throw ConfigError("lambda must be > 0");
  const bool has_seed = reader.has("dataset_seed");
  const bool has_path = reader.has("dataset_path");
  if (has_seed == has_path) {
    throw ConfigError("exactly one of dataset_seed, dataset_path is required");
  }
  if (has_seed) {
    config.dataset_seed =
        parse_u64("dataset_seed", reader.required("dataset_seed"));
  } else {
    config.dataset_path = reader.required("dataset_path");
  }
  if (const auto reading = reader.optional("prior_reading")) {
    if (*reading == "scale_covariance") {
      config.scale_precision = false;
    } else if (*reading == "scale_precision") {
      config.scale_precision = true;
    } else {
      throw ConfigError(
          "prior_reading: expected scale_covariance or scale_precision");
    }
  }
}

inline void read_schedule_fields(SchemaReader& reader,
                                 ExperimentConfig& config) {
  if (const auto v = reader.optional("refresh_moves")) {
    if (config.kernel != "gimh") {
      throw ConfigError("refresh_moves requires kernel = gimh");
    }
    config.refresh_moves = parse_u64("refresh_moves", *v);
  }
  if (const auto v = reader.optional("rw_updates")) {
    config.rw_updates = parse_u64("rw_updates", *v);
    if (config.rw_updates > 0) {
      // In grid mode the updates apply to the n = 1 entries only; grid
      // expansion strips the keys from the larger entries.
      const bool has_unit_n =
          config.grid_n.empty()
              ? config.n == 1
              : std::count(config.grid_n.begin(), config.grid_n.end(), 1) > 0;
      if (config.experiment != "glm" || config.kernel != "gimh" ||
          !has_unit_n) {
        throw ConfigError(
            "rw_updates requires experiment = glm, kernel = gimh, n = 1");
      }
      config.rw_step_sd =
          parse_double("rw_step_sd", reader.required("rw_step_sd"));
      if (config.rw_step_sd <= 0.0) {
        throw ConfigError("rw_step_sd must be > 0");
      }
    }
  }
  if (const auto v = reader.optional("burn_in")) {
    config.burn_in = parse_u64("burn_in", *v);
  }
}

}  // namespace detail

/// Validates a raw key-value map against the per-experiment schema and
/// returns the typed config. grid_mode swaps the single (n, sweeps) pair
/// for parallel grid_n / grid_sweeps lists and accepts a workers count.
inline ExperimentConfig parse_experiment_config(const KeyValueMap& kv,
                                                bool grid_mode = false) {
  detail::SchemaReader reader(kv);
  ExperimentConfig config;
  config.raw = kv;
  config.fingerprint = config_fingerprint(kv);
  config.experiment = reader.required("experiment");
  config.seed = detail::parse_u64("seed", reader.required("seed"));
  config.output_dir = reader.required("output_dir");

  if (config.experiment == "weight-diagnostic") {
    if (grid_mode) {
      throw ConfigError("weight-diagnostic does not support grid runs");
    }
    config.epsilon = detail::parse_double("epsilon", reader.required("epsilon"));
    if (config.epsilon <= 0.0) throw ConfigError("epsilon must be > 0");
    for (const auto& part :
         detail::split_commas(reader.required("n_list"))) {
      const auto n = detail::parse_u64("n_list", part);
      if (n == 0) throw ConfigError("n_list entries must be >= 1");
      config.n_list.push_back(static_cast<std::size_t>(n));
    }
    if (config.n_list.empty()) throw ConfigError("n_list must be nonempty");
    config.n_samples =
        detail::parse_u64("n_samples", reader.required("n_samples"));
    if (config.n_samples < 100) {
      throw ConfigError("n_samples must be at least 100");
    }
    config.theta_model =
        static_cast<int>(detail::parse_u64("theta_model",
                                           reader.required("theta_model")));
    detail::read_toy_estimator_fields(reader, config);
    reader.finish();
    return config;
  }

  if (config.experiment != "toy" && config.experiment != "glm") {
    throw ConfigError("experiment must be toy, glm, or weight-diagnostic");
  }
  config.kernel = reader.required("kernel");
  if (config.kernel != "marginal" && config.kernel != "gimh" &&
      config.kernel != "mcwm") {
    throw ConfigError("kernel must be marginal, gimh, or mcwm");
  }
  if (config.experiment == "glm" && config.kernel == "marginal") {
    throw ConfigError("the glm target has no exact marginal; use the toy "
                      "target for marginal runs");
  }

  if (grid_mode) {
    for (const auto& part : detail::split_commas(reader.required("grid_n"))) {
      config.grid_n.push_back(
          static_cast<std::size_t>(detail::parse_u64("grid_n", part)));
    }
    for (const auto& part :
         detail::split_commas(reader.required("grid_sweeps"))) {
      config.grid_sweeps.push_back(detail::parse_u64("grid_sweeps", part));
    }
    if (config.grid_n.size() != config.grid_sweeps.size() ||
        config.grid_n.empty()) {
      throw ConfigError("grid_n and grid_sweeps must be nonempty lists of "
                        "equal length");
    }
    // Per-entry output directories are keyed by n.
    if (std::set<std::size_t>(config.grid_n.begin(), config.grid_n.end())
            .size() != config.grid_n.size()) {
      throw ConfigError("grid_n entries must be distinct");
    }
    for (auto sweeps : config.grid_sweeps) {
      if (sweeps == 0) throw ConfigError("grid_sweeps entries must be >= 1");
    }
    if (const auto v = reader.optional("workers")) {
      config.workers =
          static_cast<std::size_t>(detail::parse_u64("workers", *v));
      if (config.workers == 0) throw ConfigError("workers must be >= 1");
    }
    config.n = config.grid_n.front();
    config.sweeps = config.grid_sweeps.front();
  } else {
    config.sweeps = detail::parse_u64("sweeps", reader.required("sweeps"));
    if (config.sweeps == 0) throw ConfigError("sweeps must be >= 1");
  }

  config.init_model = static_cast<int>(
      detail::parse_u64("init_model", reader.required("init_model")));

  const bool needs_estimator = config.kernel != "marginal";
  if (needs_estimator && !grid_mode) {
    config.n = static_cast<std::size_t>(
        detail::parse_u64("n", reader.required("n")));
    if (config.n == 0) throw ConfigError("n must be >= 1");
  }
  if (config.grid_n.size() > 0 && config.kernel == "marginal") {
    throw ConfigError("grid runs need a pseudo-marginal kernel");
  }

  if (config.experiment == "toy") {
    if (config.init_model != 1 && config.init_model != 2) {
      throw ConfigError("toy init_model must be 1 or 2");
    }
    if (needs_estimator) detail::read_toy_estimator_fields(reader, config);
  } else {
    detail::read_glm_estimator_fields(reader, config);
  }
  detail::read_schedule_fields(reader, config);
  reader.finish();
  return config;
}

/// Applies CLI overrides to the raw map (so the fingerprint reflects the
/// effective configuration) and re-validates.
inline ExperimentConfig load_experiment_config(
    const std::string& path, bool grid_mode,
    const std::optional<std::uint64_t>& seed_override,
    const std::optional<std::string>& out_override,
    const std::optional<std::size_t>& workers_override) {
  KeyValueMap kv = read_config_file(path);
  if (seed_override) kv["seed"] = std::to_string(*seed_override);
  if (out_override) kv["output_dir"] = *out_override;
  if (workers_override) kv["workers"] = std::to_string(*workers_override);
  return parse_experiment_config(kv, grid_mode);
}

}  // namespace pmmh
