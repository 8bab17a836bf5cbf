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

#include "tierkv/layer_loop.h"

#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace tierkv {

bool Clock::Event::operator>(const Event& o) const {
  return std::tie(time, kind, rank, seq) > std::tie(o.time, o.kind, o.rank, o.seq);
}

void Clock::SetHandler(EventKind kind, Handler handler) {
  handlers_[static_cast<int>(kind)] = std::move(handler);
}

void Clock::Schedule(Nanos time, EventKind kind, int64_t payload, int rank) {
  queue_.push(Event{time, kind, rank, seq_++, payload});
}

void Clock::AdvanceTo(Nanos time, EventKind through) {
  while (!queue_.empty()) {
    const Event& top = queue_.top();
    if (top.time > time || (top.time == time && top.kind > through)) break;
    Event e = top;
    queue_.pop();
    now_ = e.time;
    if (const Handler& h = handlers_[static_cast<int>(e.kind)]) h(e.time, e.payload);
  }
  if (time > now_) now_ = time;
}

std::optional<Nanos> Clock::NextEventTime() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().time;
}

LayerPipeline::LayerPipeline(int n_layers, int m, Bytes slot_bytes,
                             Clock* clock, Trace* trace, TransferCost cost)
    : table_(n_layers, m, slot_bytes, slot_bytes),
      clock_(clock),
      trace_(trace),
      cost_(std::move(cost)),
      layer_bytes_(n_layers, slot_bytes) {
  clock_->SetHandler(Clock::EventKind::kTransferEnd,
                     [this](Nanos t, int64_t p) { OnTransferEnd(t, p); });
  clock_->SetHandler(Clock::EventKind::kLayerComputeEnd,
                     [this](Nanos t, int64_t layer) {
                       if (trace_->layer_events()) {
                         TraceEvent e;
                         e.t = t;
                         e.kind = TraceKind::kLayerEnd;
                         e.layer = static_cast<int32_t>(layer);
                         trace_->Add(e);
                       }
                     });
}

void LayerPipeline::StartTransfer(LayerId layer, Direction dir) {
  const Nanos now = clock_->now();
  const Bytes bytes = layer_bytes_[layer];
  const Nanos latency = cost_(layer, dir, bytes, now);
  const Nanos end = table_.BeginTransfer(layer, dir, now, latency);
  TraceEvent e;
  e.t = now;
  e.kind = TraceKind::kXferBegin;
  e.layer = layer;
  e.direction = static_cast<int8_t>(dir);
  e.v0 = bytes;
  e.v1 = end;
  e.v2 = static_cast<int64_t>(XferKind::kSwap);
  trace_->Add(e);
  // Evictions complete before fetches that end at the same instant.
  clock_->Schedule(end, Clock::EventKind::kTransferEnd,
                   static_cast<int64_t>(layer) * 2 + static_cast<int>(dir),
                   dir == Direction::kGpuToCpu ? 0 : 1);
  if (hook_) hook_(layer, dir);
}

void LayerPipeline::OnTransferEnd(Nanos time, int64_t payload) {
  const LayerId layer = static_cast<LayerId>(payload / 2);
  const Direction dir = static_cast<Direction>(payload % 2);
  table_.CompleteTransfer(layer, time);
  TraceEvent e;
  e.t = time;
  e.kind = TraceKind::kXferEnd;
  e.layer = layer;
  e.direction = static_cast<int8_t>(dir);
  trace_->Add(e);
}

void LayerPipeline::DecideAndApply(LayerId current, const PolicyOptions& options,
                                   PassReport* report) {
  const SwapDecision d = Decide(table_, current, options);
  if (trace_->layer_events()) {
    TraceEvent e;
    e.t = clock_->now();
    e.kind = TraceKind::kSwapDecision;
    e.layer = current;
    e.v0 = d.swap_in.value_or(-1);
    e.v1 = d.swap_out.value_or(-1);
    e.v2 = d.next_token_prefetch ? 1 : 0;
    trace_->Add(e);
  }
  report->next_token_prefetch |= d.next_token_prefetch;
  ++report->decisions;
  report->spare_decisions += d.spare_bandwidth ? 1 : 0;
  if (d.swap_out) {
    StartTransfer(*d.swap_out, Direction::kGpuToCpu);
    ++report->swaps_out;
  }
  if (d.swap_in) {
    StartTransfer(*d.swap_in, Direction::kCpuToGpu);
    ++report->swaps_in;
  }
}

PassReport LayerPipeline::RunPass(Nanos layer_latency,
                                  const PolicyOptions& options) {
  const int n = table_.n_layers();
  PassReport report;
  report.layer_stall.assign(n, 0);
  PolicyOptions opts = options;
  for (LayerId k = 0; k < n; ++k) {
    const Nanos start = clock_->now();
    if (trace_->layer_events()) {
      TraceEvent e;
      e.t = start;
      e.kind = TraceKind::kLayerStart;
      e.layer = k;
      trace_->Add(e);
    }
    if (options.steps_remaining) opts.steps_remaining = *options.steps_remaining - k;
    DecideAndApply(k, opts, &report);
    if (!table_.IsComputeReady(k, clock_->now())) {
      TraceEvent stall;
      stall.t = start;
      stall.kind = TraceKind::kStallStart;
      stall.layer = k;
      trace_->Add(stall);
      while (!table_.IsComputeReady(k, clock_->now())) {
        std::optional<Nanos> next;
        for (Direction dir : {Direction::kGpuToCpu, Direction::kCpuToGpu}) {
          if (const auto& f = table_.in_flight(dir)) {
            if (!next || f->end < *next) next = f->end;
          }
        }
        if (!next) {
          throw std::logic_error(fmt::format(
              "layer {} is off the GPU with no transfer in flight", k));
        }
        clock_->AdvanceTo(*next, Clock::EventKind::kTransferEnd);
        DecideAndApply(k, opts, &report);
      }
      stall.t = clock_->now();
      stall.kind = TraceKind::kStallEnd;
      trace_->Add(stall);
      report.layer_stall[k] = clock_->now() - start;
      report.stall += report.layer_stall[k];
    }
    const Nanos end = clock_->now() + layer_latency;
    clock_->Schedule(end, Clock::EventKind::kLayerComputeEnd, k);
    clock_->AdvanceTo(end, Clock::EventKind::kLayerComputeEnd);
    report.compute += layer_latency;
    ++steps_;
  }
  return report;
}

ReplayResult RunUnitReplay(int n, int m, Nanos t_compute, Nanos t_swap,
                           int tokens, int lookahead, bool finite_horizon) {
  ReplayResult result;
  Clock clock;
  LayerPipeline pipeline(
      n, m, 1, &clock, &result.trace,
      [t_swap](LayerId, Direction, Bytes, Nanos) { return t_swap; });
  TraceEvent init;
  init.kind = TraceKind::kInit;
  init.v0 = n;
  init.v1 = m;
  result.trace.Add(init);
  for (int token = 0; token < tokens; ++token) {
    PolicyOptions options;
    options.lookahead = lookahead;
    if (finite_horizon) {
      options.steps_remaining = static_cast<int64_t>(tokens - token) * n;
    }
    PassReport r = pipeline.RunPass(t_compute, options);
    result.total_stall += r.stall;
    result.swaps += r.swaps_in + r.swaps_out;
    result.stall_per_step.insert(result.stall_per_step.end(),
                                 r.layer_stall.begin(), r.layer_stall.end());
  }
  return result;
}

}  // namespace tierkv
