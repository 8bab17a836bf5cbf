/* Copyright 2026 The tierkv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tierkv {

inline constexpr int kOracleMaxLayers = 6;
inline constexpr int kOracleMaxHorizon = 4;

// One decision point of a witness schedule. Times are in the same units as
// the oracle inputs.
struct OracleStep {
  int64_t time = 0;
  int layer = 0;
  bool stalled = false;
  std::optional<int> swap_in;
  std::optional<int> swap_out;
};

struct OracleResult {
  int64_t min_stall = 0;
  int64_t min_swaps = 0;
  std::vector<OracleStep> schedule;
};

// Exhaustive search over every per-decision swap-in/swap-out choice for a
// `horizon`-token run of an n-layer model with m layers offloaded. Shares no
// code with the FIFO policy or the mapping table. Minimises total stall time
// and then the swap count; ties resolve to the first option in (no-op,
// ascending layer) order. Throws Error{kInstanceTooLarge} beyond
// kOracleMaxLayers layers or kOracleMaxHorizon tokens.
OracleResult BruteForceSchedule(int n, int m, int64_t t_compute, int64_t t_swap,
                                int horizon);

// {min_stall, min_swaps, schedule[]}.
std::string OracleResultJson(const OracleResult& result);

}  // namespace tierkv
