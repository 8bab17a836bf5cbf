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

#include "tierkv/cost_model.h"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tierkv/error.h"

namespace tierkv {

void CostModel::Validate() const {
  if (compute_base_ns <= 0) {
    throw ConfigError("compute_base_ns must be positive",
                      "cost_model.compute_base_ns");
  }
  if (!(compute_per_token_ns >= 0.0)) {
    throw ConfigError("compute_per_token_ns must be non-negative",
                      "cost_model.compute_per_token_ns");
  }
  if (!(prefill_per_token_ns >= 0.0)) {
    throw ConfigError("prefill_per_token_ns must be non-negative",
                      "cost_model.prefill_per_token_ns");
  }
  if (!(peak_bw_c2g_bps > 0.0)) {
    throw ConfigError("peak_bw_c2g_bps must be positive",
                      "cost_model.peak_bw_c2g_bps");
  }
  if (!(peak_bw_g2c_bps > 0.0)) {
    throw ConfigError("peak_bw_g2c_bps must be positive",
                      "cost_model.peak_bw_g2c_bps");
  }
  if (!(bw_half_size_bytes > 0.0)) {
    throw ConfigError("bw_half_size_bytes must be positive",
                      "cost_model.bw_half_size_bytes");
  }
  Nanos prev_end = std::numeric_limits<Nanos>::min();
  for (size_t i = 0; i < background.size(); ++i) {
    const BackgroundWindow& w = background[i];
    const std::string key = fmt::format("cost_model.background[{}]", i);
    if (w.end <= w.start) throw ConfigError("window end must follow start", key);
    if (!(w.fraction > 0.0 && w.fraction <= 1.0)) {
      throw ConfigError("fraction must lie in (0, 1]", key);
    }
    if (w.start < prev_end) {
      throw ConfigError("windows must be sorted and non-overlapping", key);
    }
    prev_end = w.end;
  }
}

double background_fraction(const CostModel& model, Nanos t) {
  for (const BackgroundWindow& w : model.background) {
    if (t < w.start) break;
    if (t < w.end) return w.fraction;
  }
  return 1.0;
}

double effective_bandwidth(const CostModel& model, Bytes size, Direction dir,
                           Nanos at_time) {
  const double s = static_cast<double>(size);
  return model.peak(dir) * s / (s + model.bw_half_size_bytes) *
         background_fraction(model, at_time);
}

double transfer_duration(const CostModel& model, const TransferSpec& spec) {
  if (spec.size <= 0) return 0.0;
  const double s = static_cast<double>(spec.size);
  // Unimpeded rate in bytes per nanosecond.
  const double base_rate = model.peak(spec.direction) * s /
                           (s + model.bw_half_size_bytes) / kNanosPerSecond;
  double remaining = s;
  double t = static_cast<double>(spec.start_time);
  for (const BackgroundWindow& w : model.background) {
    const double ws = static_cast<double>(w.start);
    const double we = static_cast<double>(w.end);
    if (we <= t) continue;
    if (ws > t) {
      // Full-rate segment before this window.
      const double need = remaining / base_rate;
      if (t + need <= ws) return t + need - spec.start_time;
      remaining -= (ws - t) * base_rate;
      t = ws;
    }
    const double rate = base_rate * w.fraction;
    const double need = remaining / rate;
    if (t + need <= we) return t + need - spec.start_time;
    remaining -= (we - t) * rate;
    t = we;
  }
  return t + remaining / base_rate - spec.start_time;
}

Nanos transfer_latency(const CostModel& model, const TransferSpec& spec) {
  // The tiny slack absorbs rounding noise from the piecewise sum so that an
  // exact integer duration is not bumped up by one nanosecond.
  return static_cast<Nanos>(std::ceil(transfer_duration(model, spec) - 1e-6));
}

Nanos decode_layer_latency(const CostModel& model, int64_t active_tokens) {
  return model.compute_base_ns +
         std::llround(model.compute_per_token_ns *
                      static_cast<double>(active_tokens));
}

Nanos prefill_layer_latency(const CostModel& model, int64_t prompt_tokens) {
  return model.compute_base_ns +
         std::llround(model.prefill_per_token_ns *
                      static_cast<double>(prompt_tokens));
}

}  // namespace tierkv
