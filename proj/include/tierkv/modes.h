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
#include <string_view>

namespace tierkv {

enum class EngineMode : uint8_t {
  kTransparentSwap,
  kPreemptRecompute,
  kOnDemandSwap,
};

enum class ControllerAction : uint8_t {
  kHold,
  kIncreaseM,
  kDecreaseM,
  kProbeUp,
  kProbeDown,
};

const char* engine_mode_name(EngineMode mode);
std::optional<EngineMode> parse_engine_mode(std::string_view name);

const char* controller_action_name(ControllerAction action);
std::optional<ControllerAction> parse_controller_action(std::string_view name);

}  // namespace tierkv
