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

#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "tierkv/kv_state.h"
#include "tierkv/swap_policy.h"
#include "tierkv/trace.h"
#include "tierkv/units.h"

namespace tierkv {

// Virtual clock with a pending-event queue. Simultaneous events run in kind
// order (transfer ends, then layer compute ends, then arrivals), then by
// caller rank, then by scheduling order.
class Clock {
 public:
  enum class EventKind : uint8_t { kTransferEnd, kLayerComputeEnd, kArrival };
  using Handler = std::function<void(Nanos time, int64_t payload)>;

  void SetHandler(EventKind kind, Handler handler);
  void Schedule(Nanos time, EventKind kind, int64_t payload, int rank = 0);

  // Runs every event ordered at or before (time, through) and sets now to
  // `time`.
  void AdvanceTo(Nanos time, EventKind through);

  std::optional<Nanos> NextEventTime() const;
  Nanos now() const { return now_; }

 private:
  struct Event {
    Nanos time;
    EventKind kind;
    int rank;
    uint64_t seq;
    int64_t payload;
    bool operator>(const Event& o) const;
  };

  Nanos now_ = 0;
  uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  Handler handlers_[3];
};

struct PassReport {
  Nanos compute = 0;
  Nanos stall = 0;
  int swaps_in = 0;
  int swaps_out = 0;
  // Some swap-in of this pass fetched a layer of the next token.
  bool next_token_prefetch = false;
  int decisions = 0;
  // Decisions that found spare interconnect capacity.
  int spare_decisions = 0;
  std::vector<Nanos> layer_stall;
};

// Runs one token's layer loop over the mapping table: at each layer start it
// takes a FIFO swap decision, stalls until the layer is on the GPU (deciding
// again at every transfer completion in between), then computes the layer.
class LayerPipeline {
 public:
  // Latency of moving `bytes` of `layer` in `dir` starting at `start`.
  using TransferCost =
      std::function<Nanos(LayerId layer, Direction dir, Bytes bytes, Nanos start)>;
  // Called after a transfer has been started.
  using TransferHook = std::function<void(LayerId layer, Direction dir)>;

  LayerPipeline(int n_layers, int m, Bytes slot_bytes, Clock* clock,
                Trace* trace, TransferCost cost);

  void set_transfer_hook(TransferHook hook) { hook_ = std::move(hook); }

  // Computes all n layers, each taking `layer_latency`. A set
  // `options.steps_remaining` counts from the first layer of this pass.
  PassReport RunPass(Nanos layer_latency, const PolicyOptions& options);

  MappingTable& table() { return table_; }
  const MappingTable& table() const { return table_; }
  Bytes layer_bytes(LayerId layer) const { return layer_bytes_[layer]; }
  void set_layer_bytes(LayerId layer, Bytes bytes) { layer_bytes_[layer] = bytes; }

  // Layer steps taken so far across all passes.
  int64_t steps() const { return steps_; }

 private:
  void DecideAndApply(LayerId current, const PolicyOptions& options,
                      PassReport* report);
  void StartTransfer(LayerId layer, Direction dir);
  void OnTransferEnd(Nanos time, int64_t payload);

  MappingTable table_;
  Clock* clock_;
  Trace* trace_;
  TransferCost cost_;
  TransferHook hook_;
  std::vector<Bytes> layer_bytes_;
  int64_t steps_ = 0;
};

// Outcome of a fixed-latency replay in abstract time units.
struct ReplayResult {
  int64_t total_stall = 0;
  int64_t swaps = 0;
  // Stall before each layer step.
  std::vector<int64_t> stall_per_step;
  Trace trace;
};

// Replays `tokens` tokens of an n-layer model with m layers offloaded, a
// constant compute time per layer and a constant transfer time per swap.
// With `finite_horizon`, layers with no access left are never fetched.
ReplayResult RunUnitReplay(int n, int m, Nanos t_compute, Nanos t_swap,
                           int tokens, int lookahead, bool finite_horizon);

}  // namespace tierkv
