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

#include <optional>
#include <string>
#include <vector>

#include "tierkv/units.h"

namespace tierkv {

enum class Tier : uint8_t { kGpu, kCpu };

enum class Residency : uint8_t {
  kResidentGpu,
  kResidentCpu,
  kSwappingOut,
  kSwappingIn,
};

const char* residency_name(Residency r);

using SlotHandle = int32_t;

// Fixed-capacity pool of per-layer KV slots on one tier. Shrinking retires a
// free slot immediately or, if none is free, the next slot to be released.
class SlotPool {
 public:
  SlotPool(Tier tier, int total_slots, Bytes slot_capacity);

  // Returns nullopt when no slot is free.
  std::optional<SlotHandle> Acquire();
  void Release(SlotHandle slot);

  void Grow();
  void Shrink();

  Tier tier() const { return tier_; }
  int total_slots() const { return assigned_ + free_count(); }
  int free_count() const { return static_cast<int>(free_.size()); }
  int assigned_count() const { return assigned_; }
  int retire_pending() const { return retire_pending_; }
  Bytes slot_capacity() const { return slot_capacity_; }
  void set_slot_capacity(Bytes bytes) { slot_capacity_ = bytes; }

 private:
  Tier tier_;
  Bytes slot_capacity_;
  std::vector<SlotHandle> free_;
  int assigned_ = 0;
  int retire_pending_ = 0;
  SlotHandle next_handle_ = 0;
};

struct MappingEntry {
  LayerId layer = 0;
  std::optional<SlotHandle> gpu_slot;
  std::optional<SlotHandle> cpu_slot;
  Residency state = Residency::kResidentGpu;
  std::optional<Nanos> transfer_end;
  Nanos last_update = 0;
};

struct InFlight {
  LayerId layer = 0;
  Nanos end = 0;
};

// Logical layer to physical slot directory. Transfers follow a two-phase
// protocol: BeginTransfer claims the destination slot and keeps the source
// valid; CompleteTransfer releases the source. One transfer may be in flight
// per direction.
//
// With m layers offloaded the GPU pool holds n - m slots and the CPU pool
// m + 2. Layers [0, n - m) start on the GPU and the remaining m on the CPU.
class MappingTable {
 public:
  MappingTable(int n_layers, int m, Bytes gpu_slot_bytes, Bytes cpu_slot_bytes);

  const MappingEntry& Lookup(LayerId layer) const;

  // Throws Error{kNoFreeSlot, kChannelBusy, kWrongState}.
  Nanos BeginTransfer(LayerId layer, Direction dir, Nanos now, Nanos latency);

  // Throws Error{kNotInFlight, kTooEarly}.
  void CompleteTransfer(LayerId layer, Nanos now);

  bool IsComputeReady(LayerId layer, Nanos now) const;

  const std::optional<InFlight>& in_flight(Direction dir) const {
    return dir == Direction::kCpuToGpu ? in_flight_in_ : in_flight_out_;
  }
  bool channel_idle(Direction dir) const { return !in_flight(dir).has_value(); }

  int n_layers() const { return static_cast<int>(entries_.size()); }
  SlotPool& gpu_pool() { return gpu_; }
  SlotPool& cpu_pool() { return cpu_; }
  const SlotPool& gpu_pool() const { return gpu_; }
  const SlotPool& cpu_pool() const { return cpu_; }

  // Number of layers in the given state.
  int CountState(Residency state) const;

  // JSON object {time, entries[], gpu_free, cpu_free}.
  std::string SnapshotJson(Nanos now) const;

 private:
  MappingEntry& mutable_entry(LayerId layer);

  std::vector<MappingEntry> entries_;
  SlotPool gpu_;
  SlotPool cpu_;
  std::optional<InFlight> in_flight_in_;
  std::optional<InFlight> in_flight_out_;
};

}  // namespace tierkv
