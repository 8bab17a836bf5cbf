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
#include <vector>

#include "tierkv/config.h"
#include "tierkv/metrics.h"

namespace tierkv {

// Seed of grid point `index` on `axis`: splitmix64(base ^ splitmix64(
// fnv1a64(axis) + index)), where fnv1a64 is 64-bit FNV-1a over the axis
// name's bytes and splitmix64 is the standard finalizer of the SplitMix64
// generator.
uint64_t DerivePointSeed(uint64_t base_seed, const std::string& axis, int64_t index);

enum class SweepAxis : uint8_t { kM, kGpuKvGb, kReqRate };

const char* sweep_axis_name(SweepAxis axis);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kM;
  std::vector<double> values;
  int jobs = 1;
  // Every point reuses the base seed instead of its derived seed, so all
  // points see the same requests.
  bool shared_seed = false;
  // Keep each point's trace in the result.
  bool keep_traces = false;
};

// Parses "m=0,1,2", "gpu_kv_gb=2.5,3" or "req_rate=1,2". Throws ConfigError.
SweepSpec ParseSweepAxis(const std::string& text);

struct SweepRow {
  int64_t run_id = 0;
  EngineMode mode = EngineMode::kTransparentSwap;
  double m_or_expansion = 0.0;
  double gpu_kv_gb = 0.0;
  double req_rate = 0.0;
  MetricsSummary summary;
};

struct SweepFailure {
  int64_t run_id = 0;
  double value = 0.0;
  std::string message;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepFailure> failures;
  // One JSONL trace per point when requested; empty for failed points.
  std::vector<std::string> traces;
};

// The config for grid point `index`.
RunConfig SweepPointConfig(const RunConfig& base, const SweepSpec& spec,
                           size_t index);

// Runs every point, up to `spec.jobs` at a time. Results do not depend on
// `jobs`. Throws ConfigError for an empty grid.
SweepResult RunSweep(const RunConfig& base, const SweepSpec& spec);

// run_id,mode,m_or_expansion,gpu_kv_gb,req_rate,throughput_tps,
// queuing_ms_per_token,compute_ms_per_token,stall_ms_total,swaps,preemptions
std::string SweepCsv(const std::vector<SweepRow>& rows);
std::string SweepFailuresCsv(const std::vector<SweepFailure>& failures);

}  // namespace tierkv
