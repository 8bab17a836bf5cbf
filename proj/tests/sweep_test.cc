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

#include "tierkv/sweep.h"

#include <set>

#include <gtest/gtest.h>

#include "tierkv/error.h"

namespace tierkv {
namespace {

RunConfig Base() {
  return ParseRunConfig(R"({"model": {"preset": "opt13b"},
                            "memory": {"gpu_kv_gb": 2.0},
                            "cost_model": {"preset": "gh200_opt13b"},
                            "workload": {"poisson_rate": 20,
                                         "max_requests": 40},
                            "trace": {"layer_events": false},
                            "seed": 5})");
}

TEST(SweepTest, ParsesAxes) {
  const SweepSpec m = ParseSweepAxis("m=0,4,8");
  EXPECT_EQ(m.axis, SweepAxis::kM);
  EXPECT_EQ(m.values, (std::vector<double>{0, 4, 8}));
  EXPECT_EQ(ParseSweepAxis("gpu_kv_gb=2.5,3").axis, SweepAxis::kGpuKvGb);
  EXPECT_EQ(ParseSweepAxis("req_rate=1").values, (std::vector<double>{1}));
}

TEST(SweepTest, RejectsBadAxes) {
  EXPECT_THROW(ParseSweepAxis("m="), ConfigError);
  EXPECT_THROW(ParseSweepAxis("m=1.5"), ConfigError);
  EXPECT_THROW(ParseSweepAxis("m=-1"), ConfigError);
  EXPECT_THROW(ParseSweepAxis("depth=1"), ConfigError);
  EXPECT_THROW(ParseSweepAxis("req_rate=x"), ConfigError);
  SweepSpec empty;
  EXPECT_THROW(RunSweep(Base(), empty), ConfigError);
}

TEST(SweepTest, PointSeedsAreDistinctAndStable) {
  std::set<uint64_t> seen;
  for (int i = 0; i < 100; ++i) seen.insert(DerivePointSeed(5, "m", i));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(DerivePointSeed(5, "m", 3), DerivePointSeed(5, "m", 3));
  EXPECT_NE(DerivePointSeed(5, "m", 3), DerivePointSeed(5, "req_rate", 3));
  EXPECT_NE(DerivePointSeed(5, "m", 3), DerivePointSeed(6, "m", 3));
}

TEST(SweepTest, PointConfigs) {
  SweepSpec spec = ParseSweepAxis("m=3,6");
  RunConfig base = Base();
  base.policy.adaptive = true;
  const RunConfig p = SweepPointConfig(base, spec, 1);
  EXPECT_FALSE(p.policy.adaptive);
  EXPECT_EQ(p.policy.fixed_m, 6);
  EXPECT_EQ(p.seed, DerivePointSeed(5, "m", 1));
  EXPECT_EQ(p.workload.seed, p.seed);

  base.mode = EngineMode::kOnDemandSwap;
  EXPECT_EQ(SweepPointConfig(base, spec, 0).policy.static_cpu_layers, 3);

  spec.shared_seed = true;
  EXPECT_EQ(SweepPointConfig(Base(), spec, 1).seed, 5u);

  const RunConfig g = SweepPointConfig(Base(), ParseSweepAxis("gpu_kv_gb=2.5"), 0);
  EXPECT_EQ(g.memory.gpu_kv_bytes, 2'500'000'000);
  const RunConfig r = SweepPointConfig(Base(), ParseSweepAxis("req_rate=7"), 0);
  EXPECT_DOUBLE_EQ(r.workload.poisson_rate, 7.0);
}

TEST(SweepTest, ResultsDoNotDependOnJobs) {
  SweepSpec spec = ParseSweepAxis("m=0,2,4,6,8,10,12,14");
  spec.keep_traces = true;
  spec.jobs = 1;
  const SweepResult serial = RunSweep(Base(), spec);
  spec.jobs = 8;
  const SweepResult parallel = RunSweep(Base(), spec);
  ASSERT_EQ(serial.rows.size(), 8u);
  EXPECT_EQ(SweepCsv(serial.rows), SweepCsv(parallel.rows));
  EXPECT_EQ(serial.traces, parallel.traces);
  for (size_t i = 0; i < serial.rows.size(); ++i) {
    EXPECT_EQ(serial.rows[i].run_id, static_cast<int64_t>(i));
    EXPECT_EQ(serial.rows[i].summary, parallel.rows[i].summary);
  }
}

TEST(SweepTest, FailedPointsAreReportedAndOthersKept) {
  // 40 layers: m=40 is out of range.
  SweepSpec spec = ParseSweepAxis("m=1,40");
  const SweepResult r = RunSweep(Base(), spec);
  ASSERT_EQ(r.rows.size(), 1u);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].run_id, 1);
  EXPECT_NE(r.failures[0].message.find("policy.fixed_m"), std::string::npos);
  EXPECT_EQ(SweepFailuresCsv(r.failures).rfind("run_id,", 0), 0u);
}

TEST(SweepTest, CsvColumns) {
  SweepRow row;
  row.run_id = 2;
  row.m_or_expansion = 4;
  row.gpu_kv_gb = 2;
  row.req_rate = 20;
  row.summary.throughput_tps = 100.5;
  row.summary.queuing_latency_per_token = 2'000'000;
  row.summary.compute_latency_per_token = 7'500'000;
  row.summary.stall_time_total = 3'000'000;
  row.summary.swaps_in = 4;
  row.summary.swaps_out = 5;
  row.summary.preemptions = 1;
  EXPECT_EQ(SweepCsv({row}),
            "run_id,mode,m_or_expansion,gpu_kv_gb,req_rate,throughput_tps,"
            "queuing_ms_per_token,compute_ms_per_token,stall_ms_total,swaps,"
            "preemptions\n"
            "2,transparent_swap,4,2,20,100.5,2,7.5,3,9,1\n");
}

}  // namespace
}  // namespace tierkv
