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
#include <string>
#include <utility>
#include <vector>

#include "tierkv/controller.h"
#include "tierkv/cost_model.h"
#include "tierkv/modes.h"
#include "tierkv/units.h"
#include "tierkv/workload.h"

namespace tierkv {

struct ModelConfig {
  int n_layers = 40;
  // Whole-model KV bytes per token, all layers together.
  Bytes kv_bytes_per_token = 819200;
};

struct MemoryConfig {
  Bytes gpu_kv_bytes = 3'000'000'000;
  // Zero leaves host memory unbounded.
  Bytes cpu_cap_bytes = 0;
  int block_size_tokens = 16;
};

struct PolicyConfig {
  bool adaptive = false;
  // Offloaded layers when not adaptive; starting point when adaptive.
  int fixed_m = 0;
  // Next-token layers that may be prefetched. Negative leaves it unbounded.
  int lookahead = -1;
  ControllerConfig controller;
  // Layers kept on the host by the on-demand baseline.
  int static_cpu_layers = 0;
  // Passes after a resize trigger before layers that have not swapped are
  // migrated in place.
  int force_migrate_passes = 2;
};

struct TraceConfig {
  bool layer_events = true;
};

struct RunConfig {
  ModelConfig model;
  MemoryConfig memory;
  EngineMode mode = EngineMode::kTransparentSwap;
  PolicyConfig policy;
  CostModel cost_model;
  WorkloadSpec workload;
  TraceConfig trace;
  std::string output_dir = "out";
  uint64_t seed = 1;
  // Summary steady-state statistics ignore time before this point.
  Nanos warmup_ns = 0;

  // Checks cross-field constraints. Throws ConfigError.
  void Validate() const;
};

// Named model shapes: "opt13b" and "opt30b".
bool ApplyModelPreset(const std::string& name, ModelConfig* model);
// Named cost calibrations: "gh200_opt13b" and "gh200_opt30b".
bool ApplyCostPreset(const std::string& name, CostModel* model);

// Builds a RunConfig from JSON text. Each override is "dotted.key=value";
// the value is parsed as JSON and falls back to a plain string. Unknown keys
// are rejected. Throws ConfigError naming the key.
RunConfig ParseRunConfig(const std::string& json_text,
                         const std::vector<std::string>& overrides = {});
RunConfig LoadRunConfig(const std::string& path,
                        const std::vector<std::string>& overrides = {});

// Fully expanded configuration; ParseRunConfig(EffectiveConfigJson(c))
// reproduces c.
std::string EffectiveConfigJson(const RunConfig& config);

}  // namespace tierkv
