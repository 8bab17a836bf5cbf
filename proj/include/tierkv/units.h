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

namespace tierkv {

// Simulated time and durations are integer nanoseconds so that runs are
// bit-exact across platforms.
using Nanos = int64_t;
using Bytes = int64_t;
using LayerId = int;
using RequestId = int64_t;

inline constexpr Nanos kNanosPerSecond = 1'000'000'000;
inline constexpr Nanos kNanosPerMilli = 1'000'000;
inline constexpr Bytes kMiB = 1024 * 1024;
inline constexpr Bytes kGiB = 1024 * kMiB;

enum class Direction : uint8_t { kCpuToGpu, kGpuToCpu };

inline const char* direction_name(Direction d) {
  return d == Direction::kCpuToGpu ? "c2g" : "g2c";
}

inline double to_seconds(Nanos t) {
  return static_cast<double>(t) / static_cast<double>(kNanosPerSecond);
}

inline double to_millis(Nanos t) {
  return static_cast<double>(t) / static_cast<double>(kNanosPerMilli);
}

}  // namespace tierkv
