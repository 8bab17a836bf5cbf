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

#include "tierkv/engine.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>

#include <fmt/format.h>

#include "tierkv/block_manager.h"
#include "tierkv/error.h"
#include "tierkv/layer_loop.h"

namespace tierkv {

Bytes BlockBytesPerLayer(const RunConfig& config) {
  return static_cast<Bytes>(config.memory.block_size_tokens) *
         config.model.kv_bytes_per_token / config.model.n_layers;
}

int BlocksPerLayer(const RunConfig& config, int cpu_layers, bool staging_slot) {
  const int gpu_slots =
      config.model.n_layers - cpu_layers + (staging_slot ? 1 : 0);
  return static_cast<int>(config.memory.gpu_kv_bytes / gpu_slots /
                          BlockBytesPerLayer(config));
}

namespace {

enum class RequestState : uint8_t {
  kPending,
  kQueued,
  kPrefilling,
  kDecoding,
  kPreempted,
  kFinished,
};

struct Request {
  RequestSpec spec;
  RequestState state = RequestState::kPending;
  int64_t done = 0;
};

class Simulation {
 public:
  Simulation(const RunConfig& config, const std::vector<RequestSpec>& requests)
      : cfg_(config),
        n_(config.model.n_layers),
        mode_(config.mode),
        trace_(config.trace.layer_events),
        block_bytes_(BlockBytesPerLayer(config)) {
    cfg_.Validate();
    if (mode_ == EngineMode::kTransparentSwap) {
      m_ = cfg_.policy.fixed_m;
    } else if (mode_ == EngineMode::kOnDemandSwap) {
      m_ = cfg_.policy.static_cpu_layers;
    }
    const bool staging = mode_ == EngineMode::kOnDemandSwap && m_ > 0;
    const int blocks_per_layer = BlocksPerLayer(cfg_, m_, staging);
    if (blocks_per_layer < 1) {
      throw ConfigError("GPU KV memory holds less than one block per layer",
                        "memory.gpu_kv_bytes");
    }
    CheckCpuCap(m_);
    blocks_ = std::make_unique<BlockManager>(n_, cfg_.memory.block_size_tokens,
                                             blocks_per_layer);
    if (mode_ != EngineMode::kOnDemandSwap) {
      pipeline_ = std::make_unique<LayerPipeline>(
          n_, m_, SlotBytes(m_), &clock_, &trace_,
          [this](LayerId, Direction dir, Bytes bytes, Nanos start) {
            return transfer_latency(cfg_.cost_model, {bytes, dir, start});
          });
      pipeline_->set_transfer_hook(
          [this](LayerId layer, Direction) { OnTransferBegin(layer); });
    } else {
      clock_.SetHandler(Clock::EventKind::kTransferEnd,
                        [this](Nanos t, int64_t payload) {
                          TraceEvent e;
                          e.t = t;
                          e.kind = TraceKind::kXferEnd;
                          e.layer = static_cast<int32_t>(payload / 2);
                          e.direction = static_cast<int8_t>(payload % 2);
                          trace_.Add(e);
                        });
      clock_.SetHandler(Clock::EventKind::kLayerComputeEnd,
                        [this](Nanos t, int64_t layer) {
                          if (!trace_.layer_events()) return;
                          TraceEvent e;
                          e.t = t;
                          e.kind = TraceKind::kLayerEnd;
                          e.layer = static_cast<int32_t>(layer);
                          trace_.Add(e);
                        });
    }
    if (mode_ == EngineMode::kTransparentSwap && cfg_.policy.adaptive) {
      controller_.emplace(cfg_.policy.controller, n_, m_);
    }
    clock_.SetHandler(Clock::EventKind::kArrival,
                      [this](Nanos t, int64_t idx) { OnArrival(t, idx); });
    requests_.reserve(requests.size());
    for (const RequestSpec& r : requests) {
      clock_.Schedule(r.arrival, Clock::EventKind::kArrival,
                      static_cast<int64_t>(requests_.size()));
      requests_.push_back(Request{r});
    }
  }

  RunOutput Run() {
    TraceEvent init;
    init.kind = TraceKind::kInit;
    init.v0 = n_;
    init.v1 = m_;
    init.v2 = static_cast<int64_t>(mode_);
    trace_.Add(init);
    clock_.AdvanceTo(0, Clock::EventKind::kArrival);

    while (finished_ < requests_.size()) {
      Admit();
      if (running_.empty()) {
        std::optional<Nanos> next = clock_.NextEventTime();
        if (!next) break;
        clock_.AdvanceTo(*next, Clock::EventKind::kArrival);
        continue;
      }
      const bool prefill = std::any_of(
          running_.begin(), running_.end(), [this](size_t i) {
            return requests_[i].state == RequestState::kPrefilling;
          });
      if (prefill) {
        RunPrefill();
      } else {
        RunDecode();
      }
    }

    RunOutput out;
    out.final_m = m_;
    if (controller_) {
      out.controller_history = controller_->history();
      out.controller_csv = controller_->HistoryCsv();
    }
    out.trace = std::move(trace_);
    return out;
  }

 private:
  Bytes SlotBytes(int m) const {
    return static_cast<Bytes>(BlocksPerLayer(cfg_, m, false)) * block_bytes_;
  }

  bool FitsCpuCap(int m) const {
    if (cfg_.memory.cpu_cap_bytes == 0 || m == 0) return true;
    const bool staging = mode_ == EngineMode::kOnDemandSwap;
    const int slots = staging ? m : m + 2;
    const Bytes slot = static_cast<Bytes>(BlocksPerLayer(cfg_, m, staging)) *
                       block_bytes_;
    return slots * slot <= cfg_.memory.cpu_cap_bytes;
  }

  void CheckCpuCap(int m) const {
    if (!FitsCpuCap(m)) {
      throw ConfigError(fmt::format("{} offloaded layers exceed the host cap", m),
                        "memory.cpu_cap_bytes");
    }
  }

  void Emit(TraceKind kind, RequestId request, int64_t v0 = 0, int64_t v1 = 0) {
    TraceEvent e;
    e.t = clock_.now();
    e.kind = kind;
    e.request = request;
    e.v0 = v0;
    e.v1 = v1;
    trace_.Add(e);
  }

  void OnArrival(Nanos, int64_t idx) {
    Request& r = requests_[idx];
    r.state = RequestState::kQueued;
    queue_.push_back(static_cast<size_t>(idx));
    Emit(TraceKind::kArrival, r.spec.id, r.spec.prompt_tokens,
         r.spec.output_tokens);
  }

  int64_t Context(const Request& r) const { return r.spec.prompt_tokens + r.done; }

  void Finish(size_t idx, bool truncated) {
    Request& r = requests_[idx];
    blocks_->Release(r.spec.id);
    r.state = RequestState::kFinished;
    ++finished_;
    running_.erase(std::remove(running_.begin(), running_.end(), idx),
                   running_.end());
    Emit(TraceKind::kFinish, r.spec.id, r.done, truncated ? 1 : 0);
  }

  // Requeues a request whose blocks are already gone.
  void MarkPreempted(size_t idx) {
    Request& r = requests_[idx];
    r.state = RequestState::kPreempted;
    running_.erase(std::remove(running_.begin(), running_.end(), idx),
                   running_.end());
    queue_.push_front(idx);
    Emit(TraceKind::kPreempt, r.spec.id, r.done);
  }

  void Preempt(size_t idx) {
    blocks_->Release(requests_[idx].spec.id);
    MarkPreempted(idx);
  }

  void Admit() {
    while (!queue_.empty()) {
      const size_t idx = queue_.front();
      Request& r = requests_[idx];
      const int need = blocks_->BlocksForTokens(Context(r) + 1);
      if (blocks_->CanAllocate(need)) {
        blocks_->Allocate(r.spec.id, need);
        queue_.pop_front();
        const int64_t recompute = r.done > 0 ? Context(r) : 0;
        r.state = RequestState::kPrefilling;
        running_.push_back(idx);
        Emit(TraceKind::kAdmit, r.spec.id, recompute);
        continue;
      }
      if (running_.empty() && !blocks_->pending()) {
        // Cannot fit even into empty memory: end it with what it has.
        queue_.pop_front();
        running_.push_back(idx);
        Finish(idx, true);
        continue;
      }
      break;
    }
  }

  // Grows every running request to hold its next token, preempting from the
  // back of the batch when memory runs out.
  void ReserveDecodeBlocks() {
    for (size_t pos = 0; pos < running_.size();) {
      const size_t idx = running_[pos];
      Request& r = requests_[idx];
      const int need = blocks_->BlocksForTokens(Context(r) + 1);
      bool removed = false;
      while (blocks_->held(r.spec.id) < need) {
        if (blocks_->CanAllocate(1)) {
          blocks_->Allocate(r.spec.id, 1);
          continue;
        }
        const size_t victim = running_.back();
        if (victim == idx) {
          if (running_.size() == 1) {
            Finish(idx, true);
          } else {
            Preempt(idx);
          }
          removed = true;
          break;
        }
        Preempt(victim);
      }
      if (!removed) ++pos;
    }
  }

  void RunPrefill() {
    std::vector<RequestId> members;
    std::vector<size_t> idxs;
    int64_t tokens = 0;
    int64_t recompute = 0;
    for (size_t idx : running_) {
      const Request& r = requests_[idx];
      if (r.state != RequestState::kPrefilling) continue;
      idxs.push_back(idx);
      members.push_back(r.spec.id);
      tokens += Context(r);
      recompute += r.done > 0 ? Context(r) : 0;
    }
    TraceEvent start;
    start.t = clock_.now();
    start.kind = TraceKind::kPrefillStart;
    start.v0 = tokens;
    start.v1 = recompute;
    trace_.AddWithMembers(start, members);
    const Nanos t0 = clock_.now();
    PassReport report =
        ExecutePass(prefill_layer_latency(cfg_.cost_model, tokens));
    for (size_t idx : idxs) {
      Request& r = requests_[idx];
      ++r.done;
      r.state = RequestState::kDecoding;
    }
    EndPass(TraceKind::kPrefillEnd, report, idxs, t0);
  }

  void RunDecode() {
    ReserveDecodeBlocks();
    if (running_.empty()) return;
    std::vector<RequestId> members;
    int64_t tokens = 0;
    for (size_t idx : running_) {
      members.push_back(requests_[idx].spec.id);
      tokens += Context(requests_[idx]);
    }
    TraceEvent start;
    start.t = clock_.now();
    start.kind = TraceKind::kDecodeStart;
    start.v0 = tokens;
    trace_.AddWithMembers(start, members);
    const Nanos t0 = clock_.now();
    const std::vector<size_t> idxs = running_;
    PassReport report = ExecutePass(decode_layer_latency(cfg_.cost_model, tokens));
    for (size_t idx : idxs) ++requests_[idx].done;
    EndPass(TraceKind::kDecodeEnd, report, idxs, t0);
  }

  void EndPass(TraceKind kind, const PassReport& report,
               const std::vector<size_t>& idxs, Nanos t0) {
    TraceEvent end;
    end.t = clock_.now();
    end.kind = kind;
    end.v0 = report.compute;
    end.v1 = report.stall;
    end.v2 = static_cast<int64_t>(idxs.size());
    trace_.Add(end);
    for (size_t idx : idxs) {
      const Request& r = requests_[idx];
      if (r.done >= r.spec.output_tokens) Finish(idx, false);
    }
    AfterPass(report, static_cast<int64_t>(idxs.size()), t0);
  }

  PassReport ExecutePass(Nanos layer_latency) {
    if (mode_ == EngineMode::kOnDemandSwap) return OnDemandPass(layer_latency);
    PolicyOptions options;
    // Auto lets any host-resident layer be fetched as soon as a slot frees,
    // however far into the next token it is.
    options.lookahead = cfg_.policy.lookahead < 0 ? n_ : cfg_.policy.lookahead;
    return pipeline_->RunPass(layer_latency, options);
  }

  // Blocking transfer of the `blocks` blocks a layer holds, as one copy.
  Nanos BlockingTransfer(LayerId layer, int64_t blocks, Direction dir,
                         XferKind what) {
    const Nanos start = clock_.now();
    const Nanos t = start + transfer_latency(cfg_.cost_model,
                                             {blocks * block_bytes_, dir, start});
    TraceEvent e;
    e.t = start;
    e.kind = TraceKind::kXferBegin;
    e.layer = layer;
    e.direction = static_cast<int8_t>(dir);
    e.v0 = blocks * block_bytes_;
    e.v1 = t;
    e.v2 = static_cast<int64_t>(what);
    trace_.Add(e);
    clock_.Schedule(t, Clock::EventKind::kTransferEnd,
                    static_cast<int64_t>(layer) * 2 + static_cast<int>(dir));
    clock_.AdvanceTo(t, Clock::EventKind::kTransferEnd);
    return t - start;
  }

  // Host-resident layers are fetched into the staging slot before compute and
  // written back afterwards; compute waits for both.
  PassReport OnDemandPass(Nanos layer_latency) {
    PassReport report;
    report.layer_stall.assign(n_, 0);
    for (LayerId k = 0; k < n_; ++k) {
      const bool host = k >= n_ - m_;
      const int64_t used = blocks_->allocated_blocks(k);
      if (trace_.layer_events()) {
        TraceEvent e;
        e.t = clock_.now();
        e.kind = TraceKind::kLayerStart;
        e.layer = k;
        trace_.Add(e);
      }
      if (host && used > 0) {
        report.layer_stall[k] += Stalled(k, [&] {
          BlockingTransfer(k, used, Direction::kCpuToGpu, XferKind::kFetch);
        });
        ++report.swaps_in;
      }
      const Nanos end = clock_.now() + layer_latency;
      clock_.Schedule(end, Clock::EventKind::kLayerComputeEnd, k);
      clock_.AdvanceTo(end, Clock::EventKind::kLayerComputeEnd);
      report.compute += layer_latency;
      if (host && used > 0) {
        report.layer_stall[k] += Stalled(k, [&] {
          BlockingTransfer(k, used, Direction::kGpuToCpu, XferKind::kWriteBack);
        });
        ++report.swaps_out;
      }
      report.stall += report.layer_stall[k];
    }
    return report;
  }

  template <typename F>
  Nanos Stalled(LayerId layer, F&& body) {
    TraceEvent e;
    e.t = clock_.now();
    e.kind = TraceKind::kStallStart;
    e.layer = layer;
    trace_.Add(e);
    const Nanos t0 = clock_.now();
    body();
    e.t = clock_.now();
    e.kind = TraceKind::kStallEnd;
    trace_.Add(e);
    return clock_.now() - t0;
  }

  void OnTransferBegin(LayerId layer) {
    if (!blocks_->pending() || blocks_->migrated(layer)) return;
    blocks_->MarkMigrated(layer);
    pipeline_->set_layer_bytes(layer, SlotBytes(pending_m_));
  }

  void StartResize(int new_m) {
    TraceEvent e;
    e.t = clock_.now();
    e.kind = TraceKind::kResizeTrigger;
    e.v0 = m_;
    e.v1 = new_m;
    trace_.Add(e);
    const bool grow = new_m > m_;
    blocks_->TriggerResize(grow ? ResizeDirection::kGrow : ResizeDirection::kShrink,
                           BlocksPerLayer(cfg_, new_m, false));
    pending_m_ = new_m;
    passes_since_trigger_ = 0;
    if (grow) {
      pipeline_->table().gpu_pool().Shrink();
      pipeline_->table().cpu_pool().Grow();
    }
  }

  void AdvanceResize() {
    if (!blocks_->pending()) return;
    if (++passes_since_trigger_ >= cfg_.policy.force_migrate_passes) {
      // Layers that have not swapped since the trigger reallocate in place.
      for (LayerId l = 0; l < n_; ++l) {
        if (!blocks_->migrated(l)) {
          blocks_->MarkMigrated(l);
          pipeline_->set_layer_bytes(l, SlotBytes(pending_m_));
        }
      }
    }
    if (!blocks_->resize_ready()) return;
    const bool shrink =
        blocks_->pending()->direction == ResizeDirection::kShrink;
    std::vector<RequestId> order;
    for (auto it = running_.rbegin(); it != running_.rend(); ++it) {
      order.push_back(requests_[*it].spec.id);
    }
    const std::vector<RequestId> evicted = blocks_->CompleteResize(order);
    for (RequestId id : evicted) {
      auto it = std::find_if(running_.begin(), running_.end(), [&](size_t i) {
        return requests_[i].spec.id == id;
      });
      MarkPreempted(*it);
    }
    if (shrink) {
      pipeline_->table().gpu_pool().Grow();
      pipeline_->table().cpu_pool().Shrink();
    }
    m_ = pending_m_;
    TraceEvent e;
    e.t = clock_.now();
    e.kind = TraceKind::kResizeComplete;
    e.v0 = m_;
    e.v1 = static_cast<int64_t>(evicted.size());
    trace_.Add(e);
  }

  void AfterPass(const PassReport& report, int64_t output_tokens, Nanos t0) {
    AdvanceResize();
    if (!controller_) return;
    TokenReport token;
    token.stall_time = report.stall;
    token.next_token_prefetch_used = report.next_token_prefetch;
    token.decisions = report.decisions;
    token.violations = report.spare_decisions;
    token.output_tokens = output_tokens;
    token.elapsed = clock_.now() - std::min(t0, last_observation_);
    last_observation_ = clock_.now();
    if (!controller_->ObserveToken(token)) return;
    if (blocks_->pending()) {
      controller_->Defer();
      return;
    }
    ControllerAction action = controller_->DecideAdjustment();
    const int grown = controller_->m() + 1;
    if ((action == ControllerAction::kIncreaseM ||
         action == ControllerAction::kProbeUp) &&
        (!FitsCpuCap(grown) || BlocksPerLayer(cfg_, grown, false) < 1)) {
      action = ControllerAction::kHold;
    }
    const int new_m = controller_->ApplyAdjustment(action);
    const WindowRecord& rec = controller_->history().back();
    TraceEvent e;
    e.t = clock_.now();
    e.kind = TraceKind::kControllerAction;
    e.v0 = rec.index;
    e.v1 = new_m;
    e.v2 = static_cast<int64_t>(rec.action);
    trace_.Add(e);
    if (new_m != m_) StartResize(new_m);
  }

  RunConfig cfg_;
  int n_;
  EngineMode mode_;
  int m_ = 0;
  int pending_m_ = 0;
  int passes_since_trigger_ = 0;
  Clock clock_;
  Trace trace_;
  Bytes block_bytes_;
  std::unique_ptr<BlockManager> blocks_;
  std::unique_ptr<LayerPipeline> pipeline_;
  std::optional<ExpansionController> controller_;
  std::vector<Request> requests_;
  std::deque<size_t> queue_;
  // Admission order.
  std::vector<size_t> running_;
  size_t finished_ = 0;
  Nanos last_observation_ = 0;
};

}  // namespace

RunOutput RunSimulation(const RunConfig& config,
                        const std::vector<RequestSpec>& requests) {
  return Simulation(config, requests).Run();
}

RunOutput RunSimulation(const RunConfig& config) {
  return RunSimulation(config, Generate(config.workload));
}

}  // namespace tierkv
