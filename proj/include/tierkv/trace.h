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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tierkv/units.h"

namespace tierkv {

enum class TraceKind : uint8_t {
  kInit,
  kArrival,
  kAdmit,
  kPreempt,
  kFinish,
  kPrefillStart,
  kPrefillEnd,
  kDecodeStart,
  kDecodeEnd,
  kLayerStart,
  kLayerEnd,
  kStallStart,
  kStallEnd,
  kXferBegin,
  kXferEnd,
  kSwapDecision,
  kResizeTrigger,
  kResizeComplete,
  kControllerAction,
};

const char* trace_kind_name(TraceKind kind);

// What a transfer moves.
enum class XferKind : uint8_t { kSwap, kFetch, kWriteBack };

// Compact simulation event. The meaning of v0..v2 depends on `kind`:
//   init               v0=n_layers v1=m v2=EngineMode
//   arrival            v0=prompt_tokens v1=output_tokens
//   admit              v0=tokens recomputed on this admission
//   preempt            v0=output tokens done so far
//   finish             v0=output tokens v1=1 if cut short
//   prefill_start      v0=tokens processed v1=tokens recomputed, members
//   decode_start       v0=context tokens, members
//   prefill_end/decode_end  v0=compute ns v1=stall ns v2=output tokens
//   xfer_begin         v0=bytes v1=end time v2=XferKind
//   swap_decision      v0=swap-in layer or -1 v1=swap-out layer or -1
//                      v2=1 if the swap-in is a next-token prefetch
//   resize_trigger     v0=old m v1=new m
//   resize_complete    v0=new m v1=requests evicted
//   controller_action  v0=window v1=m after the action v2=ControllerAction
struct TraceEvent {
  Nanos t = 0;
  TraceKind kind = TraceKind::kInit;
  int8_t direction = -1;
  int32_t layer = -1;
  RequestId request = -1;
  int64_t v0 = 0;
  int64_t v1 = 0;
  int64_t v2 = 0;
  uint32_t members_begin = 0;
  uint32_t members_count = 0;
};

class Trace {
 public:
  explicit Trace(bool layer_events = true) : layer_events_(layer_events) {}

  void Add(const TraceEvent& e) { events_.push_back(e); }
  // Adds an event carrying a list of participating requests.
  void AddWithMembers(TraceEvent e, std::span<const RequestId> members);

  // Layer-granularity events (layer_start/end, swap_decision) are optional
  // to keep long runs small.
  bool layer_events() const { return layer_events_; }

  const std::vector<TraceEvent>& events() const { return events_; }
  std::span<const RequestId> members(const TraceEvent& e) const {
    return {members_.data() + e.members_begin, e.members_count};
  }

  // One JSON object per line: {t, kind, layer?, request?, direction?, detail}.
  void WriteJsonl(std::ostream& os) const;
  std::string ToJsonl() const;

  // Inverse of WriteJsonl. Throws Error{kMalformedTrace} with a line number.
  static Trace ParseJsonl(std::istream& is);

 private:
  bool layer_events_;
  std::vector<TraceEvent> events_;
  std::vector<RequestId> members_;
};

}  // namespace tierkv
