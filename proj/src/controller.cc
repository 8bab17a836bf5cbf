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

#include "tierkv/controller.h"

#include <fmt/format.h>

#include "tierkv/error.h"

namespace tierkv {

void ControllerConfig::Validate() const {
  const std::string p = "policy.controller.";
  if (!(violation_ratio_threshold > 0.0 && violation_ratio_threshold <= 1.0)) {
    throw ConfigError("must lie in (0, 1]", p + "violation_ratio_threshold");
  }
  if (stall_tolerance < 0) throw ConfigError("must be >= 0", p + "stall_tolerance");
  if (window_tokens < 1) throw ConfigError("must be >= 1", p + "window_tokens");
  if (!(plateau_epsilon >= 0.0 && plateau_epsilon < 1.0)) {
    throw ConfigError("must lie in [0, 1)", p + "plateau_epsilon");
  }
  if (probe_interval_tokens < 1) {
    throw ConfigError("must be >= 1", p + "probe_interval_tokens");
  }
  if (cooldown_windows < 0) throw ConfigError("must be >= 0", p + "cooldown_windows");
}

ExpansionController::ExpansionController(const ControllerConfig& config,
                                         int n_layers, int initial_m)
    : config_(config), n_layers_(n_layers), m_(initial_m) {
  config_.Validate();
}

bool ExpansionController::ObserveToken(const TokenReport& report) {
  ++window_.tokens;
  window_.decisions += report.decisions;
  window_.violations += report.violations;
  window_.next_token_prefetches += report.next_token_prefetch_used ? 1 : 0;
  if (report.stall_time > 0) {
    ++window_.stall_events;
    window_.stall_time += report.stall_time;
  }
  window_.output_tokens += report.output_tokens;
  window_.elapsed += report.elapsed;
  ++tokens_since_adjust_;
  return window_.tokens >= config_.window_tokens;
}

double ExpansionController::window_ratio() const {
  return window_.decisions == 0
             ? 0.0
             : static_cast<double>(window_.violations) / window_.decisions;
}

double ExpansionController::window_throughput() const {
  return window_.elapsed == 0 ? 0.0
                              : static_cast<double>(window_.output_tokens) /
                                    to_seconds(window_.elapsed);
}

ControllerAction ExpansionController::DecideAdjustment() const {
  // Windows right after a change still carry the resize transition.
  if (windows_since_change_ < config_.cooldown_windows) {
    return ControllerAction::kHold;
  }
  if (window_.stall_events > config_.stall_tolerance) {
    return m_ > 0 ? ControllerAction::kDecreaseM : ControllerAction::kHold;
  }
  const double eps = config_.plateau_epsilon;
  if (probe_from_) {
    // Settle a downward probe: go back up if the smaller m lost throughput.
    auto it = settled_.find(*probe_from_);
    if (it != settled_.end() && window_throughput() < (1.0 - eps) * it->second) {
      return ControllerAction::kIncreaseM;
    }
    return ControllerAction::kHold;
  }
  const bool may_grow =
      m_ < n_layers_ - 1 && (!ceiling_ || m_ + 1 < *ceiling_);
  if (may_grow && window_ratio() >= config_.violation_ratio_threshold) {
    return ControllerAction::kIncreaseM;
  }
  if (last_change_ == ControllerAction::kIncreaseM && m_ > 0) {
    auto here = settled_.find(m_);
    auto below = settled_.find(m_ - 1);
    if (here != settled_.end() && below != settled_.end() &&
        here->second <= (1.0 + eps) * below->second) {
      return ControllerAction::kProbeDown;
    }
  }
  if (tokens_since_adjust_ >= config_.probe_interval_tokens &&
      m_ < n_layers_ - 1) {
    return ControllerAction::kProbeUp;
  }
  return ControllerAction::kHold;
}

int ExpansionController::ApplyAdjustment(ControllerAction action) {
  int new_m = m_;
  switch (action) {
    case ControllerAction::kIncreaseM:
    case ControllerAction::kProbeUp:
      if (m_ < n_layers_ - 1) new_m = m_ + 1;
      break;
    case ControllerAction::kDecreaseM:
    case ControllerAction::kProbeDown:
      if (m_ > 0) new_m = m_ - 1;
      break;
    case ControllerAction::kHold:
      break;
  }
  if (new_m == m_) action = ControllerAction::kHold;

  const bool probe_settled =
      probe_from_ && windows_since_change_ >= config_.cooldown_windows;
  bool reverted = false;
  switch (action) {
    case ControllerAction::kDecreaseM:
      ceiling_ = m_;
      probe_from_.reset();
      break;
    case ControllerAction::kProbeDown:
      probe_from_ = m_;
      break;
    case ControllerAction::kProbeUp:
      ceiling_.reset();
      break;
    case ControllerAction::kIncreaseM:
      if (probe_from_) {
        ceiling_ = *probe_from_ + 1;
        probe_from_.reset();
        reverted = true;
      }
      break;
    case ControllerAction::kHold:
      if (probe_settled) {
        ceiling_ = m_ + 1;
        probe_from_.reset();
      }
      break;
  }
  CloseWindow(action, new_m);
  // A reverted probe is not fresh growth and must not re-arm the plateau test.
  if (reverted) last_change_.reset();
  return m_;
}

void ExpansionController::Defer() { CloseWindow(ControllerAction::kHold, m_); }

void ExpansionController::CloseWindow(ControllerAction action, int new_m) {
  WindowRecord rec;
  rec.index = static_cast<int64_t>(history_.size());
  rec.m = m_;
  rec.violation_ratio = window_ratio();
  rec.stall_events = window_.stall_events;
  rec.throughput = window_throughput();
  rec.action = action;
  rec.new_m = new_m;
  history_.push_back(rec);
  if (windows_since_change_ >= 1 && window_.stall_events == 0) {
    settled_[m_] = rec.throughput;
  }
  if (new_m != m_) {
    last_change_ = action;
    m_ = new_m;
    windows_since_change_ = 0;
    tokens_since_adjust_ = 0;
  } else {
    ++windows_since_change_;
  }
  window_ = Window{};
}

std::string ExpansionController::HistoryCsv() const {
  std::string out = "window_index,m,violation_ratio,stall_events,throughput,action\n";
  for (const WindowRecord& r : history_) {
    fmt::format_to(std::back_inserter(out), "{},{},{:.9g},{},{:.9g},{}\n",
                   r.index, r.m, r.violation_ratio, r.stall_events,
                   r.throughput, controller_action_name(r.action));
  }
  return out;
}

}  // namespace tierkv
