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

#include <vector>

#include "tierkv/units.h"

namespace tierkv {

// Interval [start, end) during which only `fraction` of the interconnect
// bandwidth is available to the simulator.
struct BackgroundWindow {
  Nanos start = 0;
  Nanos end = 0;
  double fraction = 1.0;
};

// Per-layer compute cost and interconnect bandwidth model. Compute latency is
// affine in the number of tokens; bandwidth follows a saturating ramp in the
// transfer size.
struct CostModel {
  Nanos compute_base_ns = 500'000;
  double compute_per_token_ns = 100.0;
  double prefill_per_token_ns = 200.0;
  double peak_bw_c2g_bps = 419e9;
  double peak_bw_g2c_bps = 371e9;
  // Size at which the ramp reaches half of peak. The default puts a 16 MiB
  // transfer at 95% of peak.
  double bw_half_size_bytes = 16.0 * kMiB / 19.0;
  std::vector<BackgroundWindow> background;

  // Throws ConfigError naming the offending field.
  void Validate() const;

  double peak(Direction d) const {
    return d == Direction::kCpuToGpu ? peak_bw_c2g_bps : peak_bw_g2c_bps;
  }
};

struct TransferSpec {
  Bytes size = 0;
  Direction direction = Direction::kCpuToGpu;
  Nanos start_time = 0;
};

// Fraction of bandwidth left to the simulator at time `t`.
double background_fraction(const CostModel& model, Nanos t);

// Bytes per second seen by a transfer of `size` bytes at `at_time`.
double effective_bandwidth(const CostModel& model, Bytes size, Direction dir,
                           Nanos at_time);

// Transfer duration in fractional nanoseconds, integrated piecewise across
// background windows.
double transfer_duration(const CostModel& model, const TransferSpec& spec);

// transfer_duration rounded up to whole nanoseconds.
Nanos transfer_latency(const CostModel& model, const TransferSpec& spec);

Nanos decode_layer_latency(const CostModel& model, int64_t active_tokens);

Nanos prefill_layer_latency(const CostModel& model, int64_t prompt_tokens);

}  // namespace tierkv
