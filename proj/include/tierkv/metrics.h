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

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tierkv/trace.h"
#include "tierkv/units.h"

namespace tierkv {

struct SummaryOptions {
  // Passes ending before first arrival + warmup are left out of the
  // steady-state throughput.
  Nanos warmup_ns = 0;
  // When positive, the steady-state window ends this long after the first
  // arrival instead of at the last finish.
  Nanos steady_end_ns = 0;
};

struct MetricsSummary {
  // First arrival to last finish.
  Nanos duration = 0;
  int64_t requests = 0;
  int64_t output_tokens = 0;
  double throughput_tps = 0.0;
  double steady_throughput_tps = 0.0;
  // Wait time and pass time per output token, in nanoseconds. Pass time
  // includes stalls.
  double queuing_latency_per_token = 0.0;
  double compute_latency_per_token = 0.0;
  // Per-request end-to-end latency divided by its output tokens.
  double p50_token_latency = 0.0;
  double p99_token_latency = 0.0;
  Nanos stall_time_total = 0;
  int64_t stall_events = 0;
  int64_t swaps_in = 0;
  int64_t swaps_out = 0;
  Bytes bytes_in = 0;
  Bytes bytes_out = 0;
  // Fraction of the duration each direction of the link was busy.
  double utilization_in = 0.0;
  double utilization_out = 0.0;
  std::vector<std::pair<Nanos, int>> expansion_timeline;
  int64_t preemptions = 0;
  int64_t recomputed_tokens = 0;
  int64_t truncated = 0;

  bool operator==(const MetricsSummary&) const = default;
};

// Pure function of the trace.
MetricsSummary Summarize(const Trace& trace, const SummaryOptions& options = {});

nlohmann::ordered_json SummaryToJson(const MetricsSummary& s);
MetricsSummary SummaryFromJson(const nlohmann::json& j);
std::string SummaryJson(const MetricsSummary& s);
// Header line plus one row; the timeline is left out.
std::string SummaryCsv(const MetricsSummary& s);

// Formats a double with 9 significant digits.
std::string FormatDouble(double v);

// Writes `content` to `path` through a temporary file and a rename.
void WriteFileAtomic(const std::string& path, const std::string& content);

}  // namespace tierkv
