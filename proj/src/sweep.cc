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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "tierkv/engine.h"
#include "tierkv/error.h"

namespace tierkv {

namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t Fnv1a64(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double PointExpansion(const RunConfig& c) {
  switch (c.mode) {
    case EngineMode::kTransparentSwap:
      return c.policy.fixed_m;
    case EngineMode::kOnDemandSwap:
      return c.policy.static_cpu_layers;
    case EngineMode::kPreemptRecompute:
      return 0;
  }
  return 0;
}

}  // namespace

uint64_t DerivePointSeed(uint64_t base_seed, const std::string& axis,
                         int64_t index) {
  return SplitMix64(base_seed ^
                    SplitMix64(Fnv1a64(axis) + static_cast<uint64_t>(index)));
}

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kM:
      return "m";
    case SweepAxis::kGpuKvGb:
      return "gpu_kv_gb";
    case SweepAxis::kReqRate:
      return "req_rate";
  }
  return "?";
}

SweepSpec ParseSweepAxis(const std::string& text) {
  const size_t eq = text.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(fmt::format("axis '{}' is not name=v1,v2,...", text), "axis");
  }
  const std::string name = text.substr(0, eq);
  SweepSpec spec;
  if (name == "m") {
    spec.axis = SweepAxis::kM;
  } else if (name == "gpu_kv_gb") {
    spec.axis = SweepAxis::kGpuKvGb;
  } else if (name == "req_rate") {
    spec.axis = SweepAxis::kReqRate;
  } else {
    throw ConfigError(fmt::format("unknown sweep axis '{}'", name), "axis");
  }
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !std::isfinite(v)) {
      throw ConfigError(fmt::format("bad axis value '{}'", item), "axis");
    }
    if (spec.axis == SweepAxis::kM && (v < 0 || v != std::floor(v))) {
      throw ConfigError(fmt::format("m must be a non-negative integer, got '{}'", item),
                        "axis");
    }
    spec.values.push_back(v);
  }
  if (spec.values.empty()) {
    throw ConfigError("sweep grid is empty", "axis");
  }
  return spec;
}

RunConfig SweepPointConfig(const RunConfig& base, const SweepSpec& spec,
                           size_t index) {
  RunConfig c = base;
  const double v = spec.values.at(index);
  switch (spec.axis) {
    case SweepAxis::kM:
      if (c.mode == EngineMode::kOnDemandSwap) {
        c.policy.static_cpu_layers = static_cast<int>(v);
      } else {
        c.policy.adaptive = false;
        c.policy.fixed_m = static_cast<int>(v);
      }
      break;
    case SweepAxis::kGpuKvGb:
      c.memory.gpu_kv_bytes = static_cast<Bytes>(std::llround(v * 1e9));
      break;
    case SweepAxis::kReqRate:
      c.workload.poisson_rate = v;
      break;
  }
  if (!spec.shared_seed) {
    c.seed = DerivePointSeed(base.seed, sweep_axis_name(spec.axis),
                             static_cast<int64_t>(index));
  }
  c.workload.seed = c.seed;
  return c;
}

SweepResult RunSweep(const RunConfig& base, const SweepSpec& spec) {
  if (spec.values.empty()) throw ConfigError("sweep grid is empty", "axis");
  if (spec.jobs < 1) throw ConfigError("jobs must be at least 1", "jobs");
  const size_t n = spec.values.size();
  std::vector<std::optional<SweepRow>> rows(n);
  std::vector<std::string> errors(n);
  std::vector<std::string> traces(spec.keep_traces ? n : 0);

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        const RunConfig c = SweepPointConfig(base, spec, i);
        RunOutput out = RunSimulation(c);
        SweepRow row;
        row.run_id = static_cast<int64_t>(i);
        row.mode = c.mode;
        row.m_or_expansion = PointExpansion(c);
        row.gpu_kv_gb = static_cast<double>(c.memory.gpu_kv_bytes) / 1e9;
        row.req_rate = c.workload.poisson_rate;
        row.summary = Summarize(out.trace, {c.warmup_ns});
        if (spec.keep_traces) traces[i] = out.trace.ToJsonl();
        rows[i] = std::move(row);
      } catch (const ConfigError& e) {
        errors[i] = e.key().empty() ? e.what()
                                    : fmt::format("{}: {}", e.key(), e.what());
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const int threads = static_cast<int>(std::min<size_t>(spec.jobs, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  SweepResult result;
  for (size_t i = 0; i < n; ++i) {
    if (rows[i]) {
      result.rows.push_back(std::move(*rows[i]));
    } else {
      result.failures.push_back({static_cast<int64_t>(i), spec.values[i], errors[i]});
    }
  }
  result.traces = std::move(traces);
  return result;
}

std::string SweepCsv(const std::vector<SweepRow>& rows) {
  std::string out =
      "run_id,mode,m_or_expansion,gpu_kv_gb,req_rate,throughput_tps,"
      "queuing_ms_per_token,compute_ms_per_token,stall_ms_total,swaps,"
      "preemptions\n";
  for (const SweepRow& r : rows) {
    const MetricsSummary& s = r.summary;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.run_id,
                       engine_mode_name(r.mode), FormatDouble(r.m_or_expansion),
                       FormatDouble(r.gpu_kv_gb), FormatDouble(r.req_rate),
                       FormatDouble(s.throughput_tps),
                       FormatDouble(s.queuing_latency_per_token / 1e6),
                       FormatDouble(s.compute_latency_per_token / 1e6),
                       FormatDouble(static_cast<double>(s.stall_time_total) / 1e6),
                       s.swaps_in + s.swaps_out, s.preemptions);
  }
  return out;
}

std::string SweepFailuresCsv(const std::vector<SweepFailure>& failures) {
  std::string out = "run_id,value,error\n";
  for (const SweepFailure& f : failures) {
    std::string msg = f.message;
    for (char& ch : msg) {
      if (ch == '\n' || ch == '\r') ch = ' ';
    }
    size_t pos = 0;
    while ((pos = msg.find('"', pos)) != std::string::npos) {
      msg.insert(pos, 1, '"');
      pos += 2;
    }
    out += fmt::format("{},{},\"{}\"\n", f.run_id, FormatDouble(f.value), msg);
  }
  return out;
}

}  // namespace tierkv
