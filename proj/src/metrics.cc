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

#include "tierkv/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "tierkv/error.h"

namespace tierkv {

namespace {

struct RequestSpan {
  Nanos arrival = -1;
  Nanos finish = -1;
  int64_t tokens = 0;
  Nanos compute = 0;
};

Nanos MergedLength(std::vector<std::pair<Nanos, Nanos>> spans, Nanos lo,
                   Nanos hi) {
  std::sort(spans.begin(), spans.end());
  Nanos total = 0;
  Nanos cursor = lo;
  for (auto [a, b] : spans) {
    a = std::max(a, cursor);
    b = std::min(b, hi);
    if (b > a) {
      total += b - a;
      cursor = b;
    }
  }
  return total;
}

double Percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  // Nearest rank.
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(v.size())));
  rank = std::clamp<size_t>(rank, 1, v.size());
  return v[rank - 1];
}

[[noreturn]] void Malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedTrace, what);
}

}  // namespace

MetricsSummary Summarize(const Trace& trace, const SummaryOptions& options) {
  MetricsSummary s;
  std::map<RequestId, RequestSpan> spans;
  std::vector<std::pair<Nanos, Nanos>> busy[2];
  std::vector<RequestId> pass_members;
  Nanos pass_start = -1;
  std::vector<std::pair<Nanos, int64_t>> pass_tokens;

  for (const TraceEvent& e : trace.events()) {
    switch (e.kind) {
      case TraceKind::kInit:
        s.expansion_timeline.emplace_back(e.t, static_cast<int>(e.v1));
        break;
      case TraceKind::kResizeComplete:
        s.expansion_timeline.emplace_back(e.t, static_cast<int>(e.v0));
        break;
      case TraceKind::kArrival: {
        RequestSpan& r = spans[e.request];
        if (r.arrival >= 0) Malformed(fmt::format("request {} arrives twice", e.request));
        r.arrival = e.t;
        break;
      }
      case TraceKind::kFinish: {
        auto it = spans.find(e.request);
        if (it == spans.end()) {
          Malformed(fmt::format("request {} finishes before arriving", e.request));
        }
        it->second.finish = e.t;
        it->second.tokens = e.v0;
        s.truncated += e.v1 != 0;
        break;
      }
      case TraceKind::kPreempt:
        ++s.preemptions;
        break;
      case TraceKind::kAdmit:
        s.recomputed_tokens += e.v0;
        break;
      case TraceKind::kPrefillStart:
      case TraceKind::kDecodeStart: {
        if (pass_start >= 0) Malformed("pass starts inside another pass");
        pass_start = e.t;
        auto m = trace.members(e);
        pass_members.assign(m.begin(), m.end());
        break;
      }
      case TraceKind::kPrefillEnd:
      case TraceKind::kDecodeEnd: {
        if (pass_start < 0) Malformed("pass ends without starting");
        for (RequestId id : pass_members) {
          auto it = spans.find(id);
          if (it == spans.end()) {
            Malformed(fmt::format("pass member {} never arrived", id));
          }
          it->second.compute += e.t - pass_start;
        }
        s.stall_time_total += e.v1;
        pass_tokens.emplace_back(e.t, e.v2);
        pass_start = -1;
        break;
      }
      case TraceKind::kStallStart:
        ++s.stall_events;
        break;
      case TraceKind::kXferBegin: {
        if (e.direction < 0 || e.direction > 1) Malformed("transfer without direction");
        const auto dir = static_cast<Direction>(e.direction);
        if (dir == Direction::kCpuToGpu) {
          ++s.swaps_in;
          s.bytes_in += e.v0;
        } else {
          ++s.swaps_out;
          s.bytes_out += e.v0;
        }
        busy[e.direction].emplace_back(e.t, e.v1);
        break;
      }
      default:
        break;
    }
  }

  Nanos first = -1;
  Nanos last = -1;
  Nanos queuing = 0;
  Nanos compute = 0;
  std::vector<double> per_token;
  for (const auto& [id, r] : spans) {
    if (first < 0 || r.arrival < first) first = r.arrival;
    if (r.finish < 0) continue;
    ++s.requests;
    last = std::max(last, r.finish);
    s.output_tokens += r.tokens;
    const Nanos span = r.finish - r.arrival;
    compute += r.compute;
    queuing += span - r.compute;
    if (r.tokens > 0) {
      per_token.push_back(static_cast<double>(span) / static_cast<double>(r.tokens));
    }
  }
  if (s.requests == 0) {
    return s;
  }
  s.duration = last - first;
  if (s.duration > 0) {
    s.throughput_tps = static_cast<double>(s.output_tokens) / to_seconds(s.duration);
    const int cpu_to_gpu = static_cast<int>(Direction::kCpuToGpu);
    const int gpu_to_cpu = static_cast<int>(Direction::kGpuToCpu);
    s.utilization_in = static_cast<double>(MergedLength(busy[cpu_to_gpu], first, last)) /
                       static_cast<double>(s.duration);
    s.utilization_out = static_cast<double>(MergedLength(busy[gpu_to_cpu], first, last)) /
                        static_cast<double>(s.duration);
  }
  const Nanos steady_start = first + options.warmup_ns;
  const Nanos steady_end =
      options.steady_end_ns > 0 ? std::min(last, first + options.steady_end_ns) : last;
  int64_t steady_tokens = 0;
  for (const auto& [t, tokens] : pass_tokens) {
    if (t > steady_start && t <= steady_end) steady_tokens += tokens;
  }
  if (steady_end > steady_start) {
    s.steady_throughput_tps =
        static_cast<double>(steady_tokens) / to_seconds(steady_end - steady_start);
  }
  if (s.output_tokens > 0) {
    const double tokens = static_cast<double>(s.output_tokens);
    s.queuing_latency_per_token = static_cast<double>(queuing) / tokens;
    s.compute_latency_per_token = static_cast<double>(compute) / tokens;
  }
  s.p50_token_latency = Percentile(per_token, 0.50);
  s.p99_token_latency = Percentile(per_token, 0.99);
  return s;
}

std::string FormatDouble(double v) { return fmt::format("{:.9g}", v); }

nlohmann::ordered_json SummaryToJson(const MetricsSummary& s) {
  nlohmann::ordered_json j;
  j["duration_ns"] = s.duration;
  j["requests"] = s.requests;
  j["output_tokens"] = s.output_tokens;
  j["throughput_tps"] = s.throughput_tps;
  j["steady_throughput_tps"] = s.steady_throughput_tps;
  j["queuing_latency_per_token_ns"] = s.queuing_latency_per_token;
  j["compute_latency_per_token_ns"] = s.compute_latency_per_token;
  j["p50_token_latency_ns"] = s.p50_token_latency;
  j["p99_token_latency_ns"] = s.p99_token_latency;
  j["stall_time_total_ns"] = s.stall_time_total;
  j["stall_events"] = s.stall_events;
  j["swaps_in"] = s.swaps_in;
  j["swaps_out"] = s.swaps_out;
  j["bytes_in"] = s.bytes_in;
  j["bytes_out"] = s.bytes_out;
  j["utilization_in"] = s.utilization_in;
  j["utilization_out"] = s.utilization_out;
  nlohmann::ordered_json timeline = nlohmann::ordered_json::array();
  for (const auto& [t, m] : s.expansion_timeline) {
    timeline.push_back({{"t", t}, {"m", m}});
  }
  j["expansion_timeline"] = std::move(timeline);
  j["preemptions"] = s.preemptions;
  j["recomputed_tokens"] = s.recomputed_tokens;
  j["truncated"] = s.truncated;
  return j;
}

MetricsSummary SummaryFromJson(const nlohmann::json& j) {
  MetricsSummary s;
  try {
    s.duration = j.at("duration_ns").get<Nanos>();
    s.requests = j.at("requests").get<int64_t>();
    s.output_tokens = j.at("output_tokens").get<int64_t>();
    s.throughput_tps = j.at("throughput_tps").get<double>();
    s.steady_throughput_tps = j.at("steady_throughput_tps").get<double>();
    s.queuing_latency_per_token = j.at("queuing_latency_per_token_ns").get<double>();
    s.compute_latency_per_token = j.at("compute_latency_per_token_ns").get<double>();
    s.p50_token_latency = j.at("p50_token_latency_ns").get<double>();
    s.p99_token_latency = j.at("p99_token_latency_ns").get<double>();
    s.stall_time_total = j.at("stall_time_total_ns").get<Nanos>();
    s.stall_events = j.at("stall_events").get<int64_t>();
    s.swaps_in = j.at("swaps_in").get<int64_t>();
    s.swaps_out = j.at("swaps_out").get<int64_t>();
    s.bytes_in = j.at("bytes_in").get<Bytes>();
    s.bytes_out = j.at("bytes_out").get<Bytes>();
    s.utilization_in = j.at("utilization_in").get<double>();
    s.utilization_out = j.at("utilization_out").get<double>();
    for (const auto& p : j.at("expansion_timeline")) {
      s.expansion_timeline.emplace_back(p.at("t").get<Nanos>(), p.at("m").get<int>());
    }
    s.preemptions = j.at("preemptions").get<int64_t>();
    s.recomputed_tokens = j.at("recomputed_tokens").get<int64_t>();
    s.truncated = j.at("truncated").get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("summary: {}", e.what()));
  }
  return s;
}

std::string SummaryJson(const MetricsSummary& s) {
  // dump() prints doubles with 17 digits; reformat them to 9.
  const nlohmann::ordered_json j = SummaryToJson(s);
  std::string out = "{\n";
  size_t i = 0;
  for (auto it = j.begin(); it != j.end(); ++it, ++i) {
    out += fmt::format("  \"{}\": ", it.key());
    if (it->is_number_float()) {
      out += FormatDouble(it->get<double>());
    } else {
      out += it->dump();
    }
    out += i + 1 < j.size() ? ",\n" : "\n";
  }
  out += "}\n";
  return out;
}

std::string SummaryCsv(const MetricsSummary& s) {
  std::string out =
      "duration_ns,requests,output_tokens,throughput_tps,steady_throughput_tps,"
      "queuing_latency_per_token_ns,compute_latency_per_token_ns,"
      "p50_token_latency_ns,p99_token_latency_ns,stall_time_total_ns,"
      "stall_events,swaps_in,swaps_out,bytes_in,bytes_out,utilization_in,"
      "utilization_out,preemptions,recomputed_tokens,truncated\n";
  out += fmt::format(
      "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
      s.duration, s.requests, s.output_tokens, FormatDouble(s.throughput_tps),
      FormatDouble(s.steady_throughput_tps),
      FormatDouble(s.queuing_latency_per_token),
      FormatDouble(s.compute_latency_per_token),
      FormatDouble(s.p50_token_latency), FormatDouble(s.p99_token_latency),
      s.stall_time_total, s.stall_events, s.swaps_in, s.swaps_out, s.bytes_in,
      s.bytes_out, FormatDouble(s.utilization_in),
      FormatDouble(s.utilization_out), s.preemptions, s.recomputed_tokens,
      s.truncated);
  return out;
}

void WriteFileAtomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::kIoError, fmt::format("cannot write {}", tmp.string()));
    os << content;
    if (!os.flush()) {
      throw Error(ErrorCode::kIoError, fmt::format("cannot write {}", tmp.string()));
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                fmt::format("cannot rename {} to {}: {}", tmp.string(),
                            target.string(), ec.message()));
  }
}

}  // namespace tierkv
