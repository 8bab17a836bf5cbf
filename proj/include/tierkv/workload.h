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

#include "tierkv/units.h"

namespace tierkv {

// Lognormal token-count distribution clamped to [min, max].
struct LengthDist {
  double mu = 0.0;
  double sigma = 0.0;
  int64_t min = 1;
  int64_t max = 1;
};

struct LengthPreset {
  LengthDist prompt;
  LengthDist output;
};

// Short prompts and short answers.
LengthPreset alpaca_like();
// Long conversational prompts and long answers.
LengthPreset sharegpt_like();
std::optional<LengthPreset> length_preset(const std::string& name);

struct WorkloadSpec {
  // Poisson arrivals at this rate unless `trace_file` is set.
  double poisson_rate = 1.0;
  std::string trace_file;
  LengthPreset lengths = alpaca_like();
  Bytes kv_bytes_per_token = 819200;
  // Generation stops at whichever bound is hit first; zero disables a bound.
  Nanos horizon_ns = 0;
  int64_t max_requests = 0;
  uint64_t seed = 0;

  // Throws ConfigError.
  void Validate() const;
};

struct RequestSpec {
  RequestId id = 0;
  Nanos arrival = 0;
  int64_t prompt_tokens = 1;
  int64_t output_tokens = 1;
};

// Deterministic in `spec`. Random numbers come from std::mt19937_64 seeded
// with `spec.seed`; uniforms take the top 53 bits of each draw, exponential
// gaps are -ln(1 - u) / rate and lognormals use the Box-Muller transform, so
// streams reproduce across standard libraries.
std::vector<RequestSpec> Generate(const WorkloadSpec& spec);

// CSV with header arrival_s,prompt_tokens,output_tokens. Throws
// Error{kParseError} naming the line, or Error{kNonMonotoneArrivals}.
std::vector<RequestSpec> LoadTrace(const std::string& path);
std::vector<RequestSpec> ParseTraceCsv(const std::string& text);

// Whole-model KV bytes of a request after `generated` output tokens.
Bytes kv_bytes(const RequestSpec& request, int64_t generated,
               Bytes kv_bytes_per_token);

}  // namespace tierkv
