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

#include <cstdint>
#include <string>
#include <vector>

#include "pmmh/core.hpp"

namespace pmmh {

/// One sweep of a chain: the post-sweep parameter point and the outcome of
/// the sweep's parameter move. log_gamma is the weighed value of the block
/// held after the sweep; NaN for kernels without a persistent block, and
/// written as NA on disk.
struct StepRecord {
  std::uint64_t sweep = 0;  // 1-based
  ParameterPoint theta;
  bool accepted = false;
  double log_ratio = kNegInf;
  double log_gamma = kNaN;
};

struct ChainTrace {
  std::vector<StepRecord> records;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  std::uint64_t block_draws = 0;       // candidate blocks drawn, all kernels
  std::uint64_t refresh_attempts = 0;
  std::uint64_t refresh_accepts = 0;
  std::uint64_t rw_attempts = 0;
  std::uint64_t rw_accepts = 0;
};

}  // namespace pmmh
