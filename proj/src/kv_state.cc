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

#include "tierkv/kv_state.h"

#include <algorithm>
#include <functional>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tierkv/error.h"

namespace tierkv {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kNoFreeSlot: return "NoFreeSlot";
    case ErrorCode::kChannelBusy: return "ChannelBusy";
    case ErrorCode::kWrongState: return "WrongState";
    case ErrorCode::kNotInFlight: return "NotInFlight";
    case ErrorCode::kTooEarly: return "TooEarly";
    case ErrorCode::kOutOfBlocks: return "OutOfBlocks";
    case ErrorCode::kResizeInProgress: return "ResizeInProgress";
    case ErrorCode::kInstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonMonotoneArrivals: return "NonMonotoneArrivals";
    case ErrorCode::kMalformedTrace: return "MalformedTrace";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

const char* residency_name(Residency r) {
  switch (r) {
    case Residency::kResidentGpu: return "ResidentGpu";
    case Residency::kResidentCpu: return "ResidentCpu";
    case Residency::kSwappingOut: return "SwappingOut";
    case Residency::kSwappingIn: return "SwappingIn";
  }
  return "Unknown";
}

SlotPool::SlotPool(Tier tier, int total_slots, Bytes slot_capacity)
    : tier_(tier), slot_capacity_(slot_capacity) {
  for (int i = 0; i < total_slots; ++i) Grow();
}

std::optional<SlotHandle> SlotPool::Acquire() {
  if (free_.empty()) return std::nullopt;
  // free_ is kept in descending order so the lowest handle is reused first.
  SlotHandle slot = free_.back();
  free_.pop_back();
  ++assigned_;
  return slot;
}

void SlotPool::Release(SlotHandle slot) {
  --assigned_;
  if (retire_pending_ > 0) {
    --retire_pending_;
    return;
  }
  free_.insert(std::upper_bound(free_.begin(), free_.end(), slot,
                                std::greater<SlotHandle>()),
               slot);
}

void SlotPool::Grow() {
  if (retire_pending_ > 0) {
    --retire_pending_;
    return;
  }
  free_.insert(free_.begin(), next_handle_++);
}

void SlotPool::Shrink() {
  if (free_.empty()) {
    ++retire_pending_;
    return;
  }
  free_.erase(free_.begin());
}

MappingTable::MappingTable(int n_layers, int m, Bytes gpu_slot_bytes,
                           Bytes cpu_slot_bytes)
    : gpu_(Tier::kGpu, n_layers - m, gpu_slot_bytes),
      cpu_(Tier::kCpu, m + 2, cpu_slot_bytes) {
  if (n_layers < 1 || m < 0 || m >= n_layers) {
    throw ConfigError(fmt::format("invalid layer split n={} m={}", n_layers, m),
                      "policy.fixed_m");
  }
  entries_.resize(n_layers);
  for (LayerId l = 0; l < n_layers; ++l) {
    MappingEntry& e = entries_[l];
    e.layer = l;
    if (l < n_layers - m) {
      e.state = Residency::kResidentGpu;
      e.gpu_slot = *gpu_.Acquire();
    } else {
      e.state = Residency::kResidentCpu;
      e.cpu_slot = *cpu_.Acquire();
    }
  }
}

const MappingEntry& MappingTable::Lookup(LayerId layer) const {
  return entries_.at(layer);
}

MappingEntry& MappingTable::mutable_entry(LayerId layer) {
  return entries_.at(layer);
}

Nanos MappingTable::BeginTransfer(LayerId layer, Direction dir, Nanos now,
                                  Nanos latency) {
  MappingEntry& e = mutable_entry(layer);
  const bool in = dir == Direction::kCpuToGpu;
  if (e.state != (in ? Residency::kResidentCpu : Residency::kResidentGpu)) {
    throw Error(ErrorCode::kWrongState,
                fmt::format("layer {} is {}, cannot start {}", layer,
                            residency_name(e.state), direction_name(dir)));
  }
  std::optional<InFlight>& channel = in ? in_flight_in_ : in_flight_out_;
  if (channel) {
    throw Error(ErrorCode::kChannelBusy,
                fmt::format("{} channel busy with layer {}",
                            direction_name(dir), channel->layer));
  }
  SlotPool& dest = in ? gpu_ : cpu_;
  std::optional<SlotHandle> slot = dest.Acquire();
  if (!slot) {
    throw Error(ErrorCode::kNoFreeSlot,
                fmt::format("no free {} slot for layer {}",
                            in ? "GPU" : "CPU", layer));
  }
  (in ? e.gpu_slot : e.cpu_slot) = *slot;
  e.state = in ? Residency::kSwappingIn : Residency::kSwappingOut;
  e.transfer_end = now + latency;
  e.last_update = now;
  channel = InFlight{layer, now + latency};
  return now + latency;
}

void MappingTable::CompleteTransfer(LayerId layer, Nanos now) {
  MappingEntry& e = mutable_entry(layer);
  if (e.state != Residency::kSwappingIn && e.state != Residency::kSwappingOut) {
    throw Error(ErrorCode::kNotInFlight,
                fmt::format("layer {} has no transfer in flight", layer));
  }
  if (now < *e.transfer_end) {
    throw Error(ErrorCode::kTooEarly,
                fmt::format("layer {} transfer ends at {}, now {}", layer,
                            *e.transfer_end, now));
  }
  if (e.state == Residency::kSwappingIn) {
    cpu_.Release(*e.cpu_slot);
    e.cpu_slot.reset();
    e.state = Residency::kResidentGpu;
    in_flight_in_.reset();
  } else {
    gpu_.Release(*e.gpu_slot);
    e.gpu_slot.reset();
    e.state = Residency::kResidentCpu;
    in_flight_out_.reset();
  }
  e.transfer_end.reset();
  e.last_update = now;
}

bool MappingTable::IsComputeReady(LayerId layer, Nanos now) const {
  const MappingEntry& e = Lookup(layer);
  if (e.state == Residency::kResidentGpu) return true;
  return e.state == Residency::kSwappingIn && *e.transfer_end <= now;
}

int MappingTable::CountState(Residency state) const {
  return static_cast<int>(std::count_if(
      entries_.begin(), entries_.end(),
      [state](const MappingEntry& e) { return e.state == state; }));
}

std::string MappingTable::SnapshotJson(Nanos now) const {
  nlohmann::ordered_json j;
  j["time"] = now;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const MappingEntry& e : entries_) {
    nlohmann::ordered_json je;
    je["layer"] = e.layer;
    je["state"] = residency_name(e.state);
    je["gpu_slot"] = e.gpu_slot ? nlohmann::ordered_json(*e.gpu_slot) : nlohmann::ordered_json(nullptr);
    je["cpu_slot"] = e.cpu_slot ? nlohmann::ordered_json(*e.cpu_slot) : nlohmann::ordered_json(nullptr);
    je["transfer_end"] =
        e.transfer_end ? nlohmann::ordered_json(*e.transfer_end) : nlohmann::ordered_json(nullptr);
    je["last_update"] = e.last_update;
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);
  j["gpu_free"] = gpu_.free_count();
  j["cpu_free"] = cpu_.free_count();
  return j.dump();
}

}  // namespace tierkv
