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

#include "tierkv/swap_policy.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tierkv {

double expansion_ratio(int n, int m) {
  return static_cast<double>(n) / static_cast<double>(n - m);
}

double buffered_expansion_ratio(int n, int m) {
  return static_cast<double>(n + 4) / static_cast<double>(n - m + 2);
}

Rational MakeRational(int64_t num, int64_t den) {
  if (den == 0) throw std::invalid_argument("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const int64_t g = std::gcd(num, den);
  return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
}

Rational ExactExpansionRatio(int n, int m) { return MakeRational(n, n - m); }

Rational ExactBufferedExpansionRatio(int n, int m) {
  return MakeRational(n + 4, n - m + 2);
}

int max_transparent_m(int n, Nanos t_compute, Nanos t_swap) {
  const int64_t m = t_compute * static_cast<int64_t>(n) / t_swap;
  return static_cast<int>(std::min<int64_t>(m, n - 1));
}

std::optional<LayerId> hottest_cpu_layer(const MappingTable& table,
                                         LayerId current) {
  const int n = table.n_layers();
  std::optional<LayerId> best;
  int best_d = n;
  for (LayerId l = 0; l < n; ++l) {
    if (table.Lookup(l).state != Residency::kResidentCpu) continue;
    const int d = forward_distance(l, current, n);
    if (d < best_d) {
      best_d = d;
      best = l;
    }
  }
  return best;
}

std::optional<LayerId> coldest_layer_for_swap_out(const MappingTable& table,
                                                  LayerId current,
                                                  std::optional<LayerId> ignore) {
  const int n = table.n_layers();
  std::optional<LayerId> coldest;
  int coldest_d = -1;
  int min_cpu_d = n;
  bool any_cpu = false;
  for (LayerId l = 0; l < n; ++l) {
    const Residency s = table.Lookup(l).state;
    const int d = forward_distance(l, current, n);
    if (s == Residency::kResidentGpu && l != current && d > coldest_d) {
      coldest_d = d;
      coldest = l;
    } else if (s == Residency::kResidentCpu && l != ignore) {
      any_cpu = true;
      min_cpu_d = std::min(min_cpu_d, d);
    }
  }
  // Nothing on the CPU means no layer is waiting for the freed space.
  if (!coldest || !any_cpu || min_cpu_d > coldest_d) return std::nullopt;
  return coldest;
}

SwapDecision Decide(const MappingTable& table, LayerId current,
                    const PolicyOptions& options) {
  const int n = table.n_layers();
  const int remaining_in_token = n - current;
  auto accessed_again = [&](int d) {
    return !options.steps_remaining || d < *options.steps_remaining;
  };

  SwapDecision out;
  int gpu_free = table.gpu_pool().free_count();
  const bool in_idle = table.channel_idle(Direction::kCpuToGpu);
  if (in_idle && gpu_free > 0) {
    std::optional<LayerId> hot = hottest_cpu_layer(table, current);
    if (hot) {
      const int d = forward_distance(*hot, current, n);
      if (d < remaining_in_token + options.lookahead && accessed_again(d)) {
        out.swap_in = hot;
        out.next_token_prefetch = d >= remaining_in_token;
        --gpu_free;
      }
    }
  }
  if (in_idle && (!out.swap_in || out.next_token_prefetch)) {
    const bool offloaded = table.CountState(Residency::kResidentGpu) < n;
    out.spare_bandwidth = !offloaded || table.gpu_pool().free_count() > 0;
  }

  if (table.channel_idle(Direction::kGpuToCpu) &&
      table.cpu_pool().free_count() > 0) {
    if (table.gpu_pool().retire_pending() > 0) {
      // The GPU pool shrank under a resize: evict regardless of CPU contents.
      int coldest_d = -1;
      for (LayerId l = 0; l < n; ++l) {
        const int d = forward_distance(l, current, n);
        if (table.Lookup(l).state == Residency::kResidentGpu && l != current &&
            d > coldest_d) {
          coldest_d = d;
          out.swap_out = l;
        }
      }
      return out;
    }
    out.swap_out = coldest_layer_for_swap_out(table, current, out.swap_in);
    if (out.swap_out) {
      // Skip the eviction when free GPU space already covers every off-GPU
      // layer still to be computed.
      int need = 0;
      for (LayerId l = 0; l < n; ++l) {
        const Residency s = table.Lookup(l).state;
        if ((s == Residency::kResidentCpu || s == Residency::kSwappingOut) &&
            l != out.swap_in && accessed_again(forward_distance(l, current, n))) {
          ++need;
        }
      }
      if (need <= gpu_free) out.swap_out.reset();
    }
  }
  return out;
}

}  // namespace tierkv
