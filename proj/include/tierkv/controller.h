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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tierkv/modes.h"
#include "tierkv/units.h"

namespace tierkv {

struct ControllerConfig {
  // Share of swap decisions that found spare interconnect capacity above
  // which m grows.
  double violation_ratio_threshold = 0.05;
  // Stall-bearing tokens tolerated per window before m shrinks.
  int stall_tolerance = 0;
  int window_tokens = 64;
  // Relative throughput gain below which a larger m counts as a plateau.
  double plateau_epsilon = 0.02;
  int probe_interval_tokens = 4096;
  // Windows after a change before growth or probing is considered again.
  int cooldown_windows = 2;

  // Throws ConfigError.
  void Validate() const;
};

// What one token iteration looked like to the controller.
struct TokenReport {
  Nanos stall_time = 0;
  // Some swap-in fetched a layer of the next token.
  bool next_token_prefetch_used = false;
  // Swap decisions taken, and how many of them found no on-CPU layer left to
  // fetch for the current token while the in-channel was free.
  int decisions = 0;
  int violations = 0;
  int64_t output_tokens = 0;
  Nanos elapsed = 0;
};

struct WindowRecord {
  int64_t index = 0;
  // m in force while the window was measured.
  int m = 0;
  double violation_ratio = 0.0;
  int stall_events = 0;
  double throughput = 0.0;
  ControllerAction action = ControllerAction::kHold;
  // m after the action.
  int new_m = 0;
};

// Adaptive expansion feedback loop. Grows m while swap decisions keep finding
// idle bandwidth, shrinks it as soon as compute stalls on a swap, and uses
// throughput history to stop growing on a plateau and to probe upwards now
// and then.
class ExpansionController {
 public:
  ExpansionController(const ControllerConfig& config, int n_layers, int initial_m);

  // Returns true when this token closed a window.
  bool ObserveToken(const TokenReport& report);

  // Action for the window that just closed.
  ControllerAction DecideAdjustment() const;

  // Records the action and returns the new m. Boundary actions become holds.
  // The caller resizes the KV state to the returned m.
  int ApplyAdjustment(ControllerAction action);

  // Closes the window without acting, e.g. while a resize is still pending.
  void Defer();

  int m() const { return m_; }
  const std::vector<WindowRecord>& history() const { return history_; }
  const ControllerConfig& config() const { return config_; }

  // window_index,m,violation_ratio,stall_events,throughput,action
  std::string HistoryCsv() const;

 private:
  struct Window {
    int tokens = 0;
    int decisions = 0;
    int violations = 0;
    int next_token_prefetches = 0;
    int stall_events = 0;
    Nanos stall_time = 0;
    int64_t output_tokens = 0;
    Nanos elapsed = 0;
  };

  double window_ratio() const;
  double window_throughput() const;
  void CloseWindow(ControllerAction action, int new_m);

  ControllerConfig config_;
  int n_layers_;
  int m_;
  Window window_;
  std::vector<WindowRecord> history_;
  // Throughput of settled windows, by m.
  std::map<int, double> settled_;
  int windows_since_change_ = 0;
  int64_t tokens_since_adjust_ = 0;
  std::optional<ControllerAction> last_change_;
  // Growth is capped below this m until the next upward probe.
  std::optional<int> ceiling_;
  // m the last downward probe started from.
  std::optional<int> probe_from_;
};

}  // namespace tierkv
