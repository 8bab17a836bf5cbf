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

#include "tierkv/kv_state.h"
#include "tierkv/units.h"

namespace tierkv {

// n / (n - m): logical KV capacity over physical GPU capacity.
double expansion_ratio(int n, int m);

// (n + 4) / (n - m + 2): expansion counting the four swap buffers.
double buffered_expansion_ratio(int n, int m);

// A fraction in lowest terms with a positive denominator.
struct Rational {
  int64_t num = 0;
  int64_t den = 1;

  bool operator==(const Rational&) const = default;
};

Rational MakeRational(int64_t num, int64_t den);
Rational ExactExpansionRatio(int n, int m);
Rational ExactBufferedExpansionRatio(int n, int m);

// Largest m with t_swap * m <= t_compute * n, capped at n - 1.
int max_transparent_m(int n, Nanos t_compute, Nanos t_swap);

// Layer steps until `layer` is next computed, given `current` is computing.
inline int forward_distance(LayerId layer, LayerId current, int n) {
  return ((layer - current) % n + n) % n;
}

std::optional<LayerId> hottest_cpu_layer(const MappingTable& table,
                                         LayerId current);

// Coldest GPU-resident layer other than `current`, unless every CPU-resident
// layer (except `ignore`) is strictly colder than it.
std::optional<LayerId> coldest_layer_for_swap_out(
    const MappingTable& table, LayerId current,
    std::optional<LayerId> ignore = std::nullopt);

struct PolicyOptions {
  // Layers of the next token that may be prefetched during this one.
  int lookahead = 2;
  // Layer steps left in a finite replay, counting the current one. Layers
  // that will not be accessed again are never fetched.
  std::optional<int64_t> steps_remaining;
};

struct SwapDecision {
  std::optional<LayerId> swap_in;
  std::optional<LayerId> swap_out;
  // The chosen swap-in belongs to the next token.
  bool next_token_prefetch = false;
  // The in-channel was free but no layer of the current token was fetched:
  // either nothing is offloaded or a GPU slot sat free with no current-token
  // layer left on the CPU.
  bool spare_bandwidth = false;
};

// FIFO swap decision taken when layer `current` starts computing. Pure: the
// caller applies the result.
SwapDecision Decide(const MappingTable& table, LayerId current,
                    const PolicyOptions& options);

}  // namespace tierkv
