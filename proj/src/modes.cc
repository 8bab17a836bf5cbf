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

#include "tierkv/modes.h"

#include <array>

namespace tierkv {
namespace {

constexpr std::array<const char*, 3> kModeNames = {
    "transparent_swap", "preempt_recompute", "on_demand_swap"};
constexpr std::array<const char*, 5> kActionNames = {
    "hold", "increase_m", "decrease_m", "probe_up", "probe_down"};

}  // namespace

const char* engine_mode_name(EngineMode mode) {
  return kModeNames[static_cast<size_t>(mode)];
}

std::optional<EngineMode> parse_engine_mode(std::string_view name) {
  for (size_t i = 0; i < kModeNames.size(); ++i) {
    if (name == kModeNames[i]) return static_cast<EngineMode>(i);
  }
  return std::nullopt;
}

const char* controller_action_name(ControllerAction action) {
  return kActionNames[static_cast<size_t>(action)];
}

std::optional<ControllerAction> parse_controller_action(std::string_view name) {
  for (size_t i = 0; i < kActionNames.size(); ++i) {
    if (name == kActionNames[i]) return static_cast<ControllerAction>(i);
  }
  return std::nullopt;
}

}  // namespace tierkv
