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

#include <map>

#include <gtest/gtest.h>

#include "tierkv/error.h"
#include "tierkv/metrics.h"

namespace tierkv {
namespace {

// Four layers, 4 KiB of KV per token, 20 blocks of 16 tokens per layer.
RunConfig Tiny() {
  RunConfig c;
  c.model.n_layers = 4;
  c.model.kv_bytes_per_token = 4096;
  c.memory.block_size_tokens = 16;
  c.memory.gpu_kv_bytes = 4 * 20 * 16 * 1024;
  c.cost_model.compute_base_ns = 1000;
  c.cost_model.compute_per_token_ns = 10;
  c.cost_model.prefill_per_token_ns = 20;
  c.workload.kv_bytes_per_token = 4096;
  c.workload.max_requests = 1;
  c.trace.layer_events = false;
  return c;
}

RunConfig Opt13b(const std::vector<std::string>& overrides) {
  std::vector<std::string> all = {
      "trace.layer_events=false", "workload.lengths=sharegpt_like",
      "workload.poisson_rate=20", "workload.max_requests=60", "seed=11"};
  all.insert(all.end(), overrides.begin(), overrides.end());
  return ParseRunConfig(R"({"model": {"preset": "opt13b"},
                            "memory": {"gpu_kv_gb": 2.0},
                            "cost_model": {"preset": "gh200_opt13b"},
                            "workload": {}})",
                        all);
}

RequestSpec Req(RequestId id, Nanos arrival, int64_t prompt, int64_t output) {
  RequestSpec r;
  r.id = id;
  r.arrival = arrival;
  r.prompt_tokens = prompt;
  r.output_tokens = output;
  return r;
}

std::vector<const TraceEvent*> OfKind(const Trace& t, TraceKind kind) {
  std::vector<const TraceEvent*> out;
  for (const TraceEvent& e : t.events()) {
    if (e.kind == kind) out.push_back(&e);
  }
  return out;
}

TEST(EngineTest, SingleRequestFollowsTheCostModel) {
  const RunOutput out = RunSimulation(Tiny(), {Req(0, 100, 10, 4)});
  Nanos expected = 100 + 4 * (1000 + 20 * 10);
  for (int d = 1; d < 4; ++d) expected += 4 * (1000 + 10 * (10 + d));
  const auto finish = OfKind(out.trace, TraceKind::kFinish);
  ASSERT_EQ(finish.size(), 1u);
  EXPECT_EQ(finish[0]->t, expected);
  EXPECT_EQ(finish[0]->v0, 4);
  EXPECT_EQ(finish[0]->v1, 0);

  const MetricsSummary s = Summarize(out.trace);
  EXPECT_EQ(s.output_tokens, 4);
  EXPECT_EQ(s.stall_time_total, 0);
  EXPECT_DOUBLE_EQ(s.queuing_latency_per_token, 0.0);
  EXPECT_DOUBLE_EQ(s.compute_latency_per_token, (expected - 100) / 4.0);
}

TEST(EngineTest, PassSpanIsComputePlusStall) {
  const RunOutput out = RunSimulation(Opt13b({"policy.fixed_m=10"}));
  std::optional<Nanos> start;
  int passes = 0;
  for (const TraceEvent& e : out.trace.events()) {
    if (e.kind == TraceKind::kPrefillStart || e.kind == TraceKind::kDecodeStart) {
      start = e.t;
    } else if (e.kind == TraceKind::kPrefillEnd ||
               e.kind == TraceKind::kDecodeEnd) {
      ASSERT_TRUE(start.has_value());
      EXPECT_EQ(e.t - *start, e.v0 + e.v1);
      start.reset();
      ++passes;
    }
  }
  EXPECT_GT(passes, 100);
}

TEST(EngineTest, RequestLatencyDecomposes) {
  const RunOutput out = RunSimulation(Opt13b({"policy.fixed_m=10"}));
  std::map<RequestId, Nanos> arrival, finish, in_pass;
  std::optional<Nanos> start;
  std::vector<RequestId> members;
  for (const TraceEvent& e : out.trace.events()) {
    switch (e.kind) {
      case TraceKind::kArrival:
        arrival[e.request] = e.t;
        break;
      case TraceKind::kFinish:
        finish[e.request] = e.t;
        break;
      case TraceKind::kPrefillStart:
      case TraceKind::kDecodeStart:
        start = e.t;
        members.assign(out.trace.members(e).begin(), out.trace.members(e).end());
        break;
      case TraceKind::kPrefillEnd:
      case TraceKind::kDecodeEnd:
        for (RequestId r : members) in_pass[r] += e.t - *start;
        break;
      default:
        break;
    }
  }
  ASSERT_EQ(finish.size(), 60u);
  Nanos queuing = 0, compute = 0;
  int64_t tokens = 0;
  for (const auto& [id, f] : finish) {
    ASSERT_LE(in_pass[id], f - arrival[id]);
    queuing += f - arrival[id] - in_pass[id];
    compute += in_pass[id];
  }
  const MetricsSummary s = Summarize(out.trace);
  tokens = s.output_tokens;
  EXPECT_NEAR(s.queuing_latency_per_token * tokens, queuing, 1.0 * 60);
  EXPECT_NEAR(s.compute_latency_per_token * tokens, compute, 1.0 * 60);
}

TEST(EngineTest, IdenticalConfigsGiveIdenticalTraces) {
  const RunConfig c = Opt13b({"policy.adaptive=true", "policy.fixed_m=4"});
  const RunOutput a = RunSimulation(c);
  const RunOutput b = RunSimulation(c);
  EXPECT_EQ(a.trace.ToJsonl(), b.trace.ToJsonl());
  EXPECT_EQ(a.controller_csv, b.controller_csv);
  EXPECT_EQ(a.final_m, b.final_m);
}

TEST(EngineTest, MemoryPressurePreemptsAndRecomputes) {
  std::vector<RequestSpec> reqs;
  for (int i = 0; i < 4; ++i) reqs.push_back(Req(i, 0, 50, 100));
  const RunOutput out = RunSimulation(Tiny(), reqs);
  const auto preempts = OfKind(out.trace, TraceKind::kPreempt);
  ASSERT_FALSE(preempts.empty());
  int recomputing_admits = 0;
  for (const TraceEvent* e : OfKind(out.trace, TraceKind::kAdmit)) {
    recomputing_admits += e->v0 > 0;
  }
  EXPECT_EQ(recomputing_admits, static_cast<int>(preempts.size()));
  const auto finish = OfKind(out.trace, TraceKind::kFinish);
  ASSERT_EQ(finish.size(), 4u);
  for (const TraceEvent* e : finish) {
    EXPECT_EQ(e->v0, 100);
    EXPECT_EQ(e->v1, 0);
  }
  const MetricsSummary s = Summarize(out.trace);
  EXPECT_EQ(s.preemptions, static_cast<int64_t>(preempts.size()));
  EXPECT_GT(s.recomputed_tokens, 0);
}

TEST(EngineTest, RequestLargerThanMemoryIsCutShort) {
  const RunOutput out = RunSimulation(Tiny(), {Req(0, 0, 400, 10), Req(1, 5, 8, 2)});
  const auto finish = OfKind(out.trace, TraceKind::kFinish);
  ASSERT_EQ(finish.size(), 2u);
  EXPECT_EQ(finish[0]->request, 0);
  EXPECT_EQ(finish[0]->v0, 0);
  EXPECT_EQ(finish[0]->v1, 1);
  EXPECT_EQ(finish[1]->v0, 2);
  EXPECT_EQ(Summarize(out.trace).truncated, 1);
}

TEST(EngineTest, OnDemandWithNothingOffloadedEqualsRecompute) {
  const MetricsSummary on_demand = Summarize(
      RunSimulation(Opt13b({"mode=on_demand_swap", "policy.static_cpu_layers=0"}))
          .trace);
  const MetricsSummary recompute =
      Summarize(RunSimulation(Opt13b({"mode=preempt_recompute"})).trace);
  EXPECT_EQ(on_demand, recompute);
  EXPECT_EQ(on_demand.swaps_in, 0);
}

TEST(EngineTest, PipelinedSwapStallsLessThanOnDemand) {
  const MetricsSummary pie = Summarize(RunSimulation(Opt13b({"policy.fixed_m=8"})).trace);
  const MetricsSummary on_demand = Summarize(
      RunSimulation(Opt13b({"mode=on_demand_swap", "policy.static_cpu_layers=8"}))
          .trace);
  EXPECT_LT(pie.stall_time_total, on_demand.stall_time_total);
  EXPECT_GT(on_demand.stall_time_total, 0);
  EXPECT_GT(pie.throughput_tps, on_demand.throughput_tps);
}

TEST(EngineTest, OnDemandFetchesAndWritesBackEveryHostLayer) {
  RunConfig c = Tiny();
  c.mode = EngineMode::kOnDemandSwap;
  c.policy.static_cpu_layers = 1;
  const RunOutput out = RunSimulation(c, {Req(0, 0, 10, 3)});
  int fetch = 0, write_back = 0;
  for (const TraceEvent* e : OfKind(out.trace, TraceKind::kXferBegin)) {
    EXPECT_EQ(e->layer, 3);
    fetch += e->v2 == static_cast<int64_t>(XferKind::kFetch);
    write_back += e->v2 == static_cast<int64_t>(XferKind::kWriteBack);
  }
  EXPECT_EQ(fetch, 3);
  EXPECT_EQ(write_back, 3);
  EXPECT_GT(Summarize(out.trace).stall_time_total, 0);
}

TEST(EngineTest, AdaptiveRunRecordsControllerHistory) {
  const RunOutput out =
      RunSimulation(Opt13b({"policy.adaptive=true", "policy.fixed_m=0",
                            "workload.max_requests=200"}));
  ASSERT_FALSE(out.controller_history.empty());
  EXPECT_EQ(out.controller_csv.rfind("window_index,m,", 0), 0u);
  EXPECT_GT(out.final_m, 0);
  EXPECT_LT(out.final_m, 40);
  const auto triggers = OfKind(out.trace, TraceKind::kResizeTrigger);
  const auto completes = OfKind(out.trace, TraceKind::kResizeComplete);
  ASSERT_FALSE(triggers.empty());
  EXPECT_LE(completes.size(), triggers.size());
  EXPECT_GE(completes.size() + 1, triggers.size());
  EXPECT_EQ(completes.back()->v0, triggers[completes.size() - 1]->v1);
}

TEST(EngineTest, EmptyWorkload) {
  const RunOutput out = RunSimulation(Tiny(), {});
  const MetricsSummary s = Summarize(out.trace);
  EXPECT_EQ(s.requests, 0);
  EXPECT_EQ(s.output_tokens, 0);
  EXPECT_DOUBLE_EQ(s.throughput_tps, 0.0);
}

TEST(EngineTest, TooLittleMemoryIsAConfigError) {
  RunConfig c = Tiny();
  c.memory.gpu_kv_bytes = 1024;
  EXPECT_THROW(RunSimulation(c, {Req(0, 0, 1, 1)}), ConfigError);
}

TEST(EngineTest, BlockGeometry) {
  const RunConfig c = Tiny();
  EXPECT_EQ(BlockBytesPerLayer(c), 16 * 1024);
  EXPECT_EQ(BlocksPerLayer(c, 0, false), 20);
  EXPECT_EQ(BlocksPerLayer(c, 2, false), 40);
  EXPECT_EQ(BlocksPerLayer(c, 1, true), 20);
}

}  // namespace
}  // namespace tierkv
