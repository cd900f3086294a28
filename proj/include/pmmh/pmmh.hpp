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

// Umbrella header for the whole library.

#include "pmmh/common.hpp"
#include "pmmh/core.hpp"
#include "pmmh/diagnostics.hpp"
#include "pmmh/estimators.hpp"
#include "pmmh/harness/checks.hpp"
#include "pmmh/harness/config.hpp"
#include "pmmh/harness/experiment.hpp"
#include "pmmh/harness/io.hpp"
#include "pmmh/kernels.hpp"
#include "pmmh/math.hpp"
#include "pmmh/rng.hpp"
#include "pmmh/targets/glm.hpp"
#include "pmmh/targets/toy.hpp"
#include "pmmh/trace.hpp"
