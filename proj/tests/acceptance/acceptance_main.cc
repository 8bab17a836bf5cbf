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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "tierkv/config.h"
#include "tierkv/engine.h"
#include "tierkv/error.h"
#include "tierkv/layer_loop.h"
#include "tierkv/metrics.h"
#include "tierkv/oracle.h"
#include "tierkv/swap_policy.h"
#include "tierkv/sweep.h"

namespace tierkv {
namespace {

constexpr Nanos kSec = 1'000'000'000;
// Stall-bearing tokens per controller window tolerated in the adaptive runs.
constexpr int kStallTolerance = 2;

struct Verdict {
  bool pass = false;
  std::string detail;
};

bool g_verbose = false;

template <typename... Args>
void Log(fmt::format_string<Args...> f, Args&&... args) {
  if (g_verbose) std::cerr << "  " << fmt::format(f, std::forward<Args>(args)...) << "\n";
}

RunConfig Workload(const std::string& model, double gpu_gb,
                   const std::string& lengths, double rate, double horizon_s,
                   uint64_t seed) {
  const std::string json = fmt::format(
      R"({{"model": {{"preset": "{0}"}},
          "memory": {{"gpu_kv_gb": {1}}},
          "cost_model": {{"preset": "gh200_{0}"}},
          "workload": {{"poisson_rate": {2}, "lengths": "{3}", "horizon_s": {4}}},
          "trace": {{"layer_events": false}},
          "seed": {5}}})",
      model, gpu_gb, rate, lengths, horizon_s, seed);
  return ParseRunConfig(json);
}

RunConfig WithFixedM(RunConfig c, int m) {
  c.policy.adaptive = false;
  c.policy.fixed_m = m;
  return c;
}

// ---------------------------------------------------------------------------
// 1. Nine-layer walk-through.

Verdict Criterion1() {
  const ReplayResult r = RunUnitReplay(9, 2, 1, 2, 12, 2, false);
  std::vector<std::string> problems;
  if (r.total_stall != 0) problems.push_back(fmt::format("stall {}", r.total_stall));

  std::map<int, Nanos> out_start;
  int round_trips = 0;
  for (const TraceEvent& e : r.trace.events()) {
    if (e.kind != TraceKind::kXferBegin && e.kind != TraceKind::kXferEnd) continue;
    const auto dir = static_cast<Direction>(e.direction);
    if (e.kind == TraceKind::kXferBegin && dir == Direction::kGpuToCpu) {
      out_start[e.layer] = e.t;
    } else if (e.kind == TraceKind::kXferEnd && dir == Direction::kCpuToGpu &&
               out_start.count(e.layer)) {
      const Nanos away = e.t - out_start[e.layer];
      if (away != 8) {
        problems.push_back(fmt::format("layer {} away {} units", e.layer, away));
      }
      out_start.erase(e.layer);
      ++round_trips;
    }
  }
  if (round_trips < 20) problems.push_back(fmt::format("only {} round trips", round_trips));

  // First decision at each time.
  std::map<Nanos, std::pair<int64_t, int64_t>> decisions;
  for (const TraceEvent& e : r.trace.events()) {
    if (e.kind == TraceKind::kSwapDecision) decisions.emplace(e.t, std::make_pair(e.v0, e.v1));
  }
  // Zero-based layers: layer 0 skips the swap-out, layer 1 evicts layer 0,
  // layer 2 skips both, layer 3 evicts layer 2 and fetches layer 7.
  const std::map<Nanos, std::pair<int64_t, int64_t>> narrated = {
      {0, {-1, -1}}, {1, {-1, 0}}, {2, {-1, -1}}, {3, {7, 2}}};
  for (const auto& [t, want] : narrated) {
    const auto got = decisions.count(t) ? decisions[t] : std::make_pair<int64_t, int64_t>(-9, -9);
    if (got != want) {
      problems.push_back(fmt::format("t={} decision in={} out={}, expected in={} out={}",
                                     t, got.first, got.second, want.first, want.second));
    }
  }
  if (problems.empty()) {
    return {true, fmt::format("0 stall, {} round trips of 8 units, narrated skips match",
                              round_trips)};
  }
  return {false, fmt::format("{}", fmt::join(problems, "; "))};
}

// ---------------------------------------------------------------------------
// 2. Expansion formulas in exact arithmetic.

Verdict Criterion2() {
  if (ExactExpansionRatio(9, 2) != MakeRational(9, 7)) {
    return {false, "expansion_ratio(9,2) != 9/7"};
  }
  std::mt19937_64 rng(2026);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = std::uniform_int_distribution<int>(1, 1000)(rng);
    const int m = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const Rational want = MakeRational(n + 4, n - m + 2);
    const Rational got = ExactBufferedExpansionRatio(n, m);
    const double approx = buffered_expansion_ratio(n, m);
    if (got != want ||
        std::abs(approx - static_cast<double>(want.num) / want.den) > 1e-12 * approx) {
      ++bad;
    }
  }
  return {bad == 0, fmt::format("9/7 = {:.4f}; {} of 1000 buffered ratios wrong",
                                expansion_ratio(9, 2), bad)};
}

// ---------------------------------------------------------------------------
// 3. FIFO against the exhaustive optimum.

Verdict Criterion3() {
  int cells = 0, stall_mismatch = 0, swap_mismatch = 0;
  std::vector<std::string> failures;
  for (int n = 3; n <= 6; ++n) {
    for (int m = 1; m < n; ++m) {
      for (int r = 1; r <= 3; ++r) {
        ++cells;
        const OracleResult o = BruteForceSchedule(n, m, 1, r, 3);
        const ReplayResult f = RunUnitReplay(n, m, 1, r, 3, 2, true);
        bool ok = true;
        if (f.total_stall != o.min_stall) {
          ++stall_mismatch;
          ok = false;
        } else if (o.min_stall == 0 && f.swaps != o.min_swaps) {
          ++swap_mismatch;
          ok = false;
        }
        if (!ok) {
          failures.push_back(fmt::format("({},{},{}) fifo {}/{} oracle {}/{}", n, m, r,
                                         f.total_stall, f.swaps, o.min_stall,
                                         o.min_swaps));
        }
      }
    }
  }
  for (const std::string& f : failures) Log("{}", f);
  return {failures.empty(),
          fmt::format("{} cells: {} stall mismatches, {} swap-count mismatches", cells,
                      stall_mismatch, swap_mismatch)};
}

// ---------------------------------------------------------------------------
// 4. Feasible configurations never stall after warmup.

Verdict Criterion4() {
  std::mt19937_64 rng(4);
  int small = 0, large = 0, stalled = 0;
  // Small rings: feasibility from the exhaustive search over three tokens,
  // then a twelve-token run must be stall-free after the first token.
  while (small < 100) {
    const int n = std::uniform_int_distribution<int>(3, 6)(rng);
    const int m = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const int r = std::uniform_int_distribution<int>(1, 3)(rng);
    if (BruteForceSchedule(n, m, 1, r, 3).min_stall != 0) continue;
    const ReplayResult f = RunUnitReplay(n, m, 1, r, 12, n, false);
    Nanos late = 0;
    for (size_t i = n; i < f.stall_per_step.size(); ++i) late += f.stall_per_step[i];
    if (late != 0) {
      ++stalled;
      Log("small n={} m={} r={} stalled {}", n, m, r, late);
    }
    ++small;
  }
  // Large rings with pass-to-pass compute and transfer jitter. With
  // p = ceil(max swap / min compute), (m + 2) p <= n - 1 leaves every
  // transfer a full swap time of compute to hide behind.
  while (large < 100) {
    const int n = std::uniform_int_distribution<int>(16, 96)(rng);
    const Nanos tc_min = std::uniform_int_distribution<Nanos>(100, 1000)(rng);
    const Nanos ts_max = std::uniform_int_distribution<Nanos>(tc_min / 2, 6 * tc_min)(rng);
    const int p = static_cast<int>((ts_max + tc_min - 1) / tc_min);
    const int m_max = (n - 1) / p - 2;
    if (m_max < 1) continue;
    const int m = std::uniform_int_distribution<int>(1, m_max)(rng);
    std::mt19937_64 jitter(rng());
    Clock clock;
    Trace trace(false);
    LayerPipeline pipeline(n, m, 1, &clock, &trace,
                           [&](LayerId, Direction, Bytes, Nanos) {
                             return std::uniform_int_distribution<Nanos>(ts_max / 2, ts_max)(jitter);
                           });
    PolicyOptions options;
    options.lookahead = n;
    Nanos late = 0;
    for (int pass = 0; pass < 12; ++pass) {
      const Nanos tc = std::uniform_int_distribution<Nanos>(tc_min, 3 * tc_min)(jitter);
      const PassReport report = pipeline.RunPass(tc, options);
      if (pass > 0) late += report.stall;
    }
    if (late != 0) {
      ++stalled;
      Log("large n={} m={} tc>={} ts<={} stalled {}", n, m, tc_min, ts_max, late);
    }
    ++large;
  }
  return {stalled == 0, fmt::format("{} configs ({} small, {} large): {} stalled after warmup",
                                    small + large, small, large, stalled)};
}

// ---------------------------------------------------------------------------
// 5. Adaptive convergence against the best fixed m.

struct Stationary {
  std::string model;
  double gpu_gb;
  std::string lengths;
  double rate;
  uint64_t seed;
};

// m in force for the longest time inside [from, to].
int DominantM(const MetricsSummary& s, Nanos from, Nanos to) {
  std::map<int, Nanos> held;
  const auto& tl = s.expansion_timeline;
  for (size_t i = 0; i < tl.size(); ++i) {
    const Nanos a = std::max(tl[i].first, from);
    const Nanos b = std::min(i + 1 < tl.size() ? tl[i + 1].first : to, to);
    if (b > a) held[tl[i].second] += b - a;
  }
  int best = -1;
  Nanos most = -1;
  for (const auto& [m, t] : held) {
    if (t > most) {
      most = t;
      best = m;
    }
  }
  return best;
}

Verdict Criterion5() {
  const std::vector<Stationary> workloads = {
      {"opt13b", 3.0, "alpaca_like", 200, 1},   {"opt13b", 3.0, "alpaca_like", 200, 2},
      {"opt13b", 2.5, "alpaca_like", 200, 3},   {"opt13b", 4.0, "alpaca_like", 200, 4},
      {"opt13b", 3.5, "alpaca_like", 200, 5},   {"opt30b", 4.0, "alpaca_like", 150, 6},
      {"opt30b", 5.0, "alpaca_like", 150, 7},   {"opt30b", 4.5, "alpaca_like", 150, 8},
      {"opt30b", 6.0, "alpaca_like", 150, 9},   {"opt13b", 3.0, "alpaca_like", 200, 10},
  };
  constexpr double kHorizonS = 150.0;
  int passed = 0;
  double worst_ratio = 1e9;
  int worst_dm = 0;
  for (const Stationary& w : workloads) {
    RunConfig base = Workload(w.model, w.gpu_gb, w.lengths, w.rate, kHorizonS, w.seed);
    RunConfig adaptive = base;
    adaptive.policy.adaptive = true;
    adaptive.policy.fixed_m = 0;
    adaptive.policy.controller.stall_tolerance = kStallTolerance;
    const RunOutput a = RunSimulation(adaptive);
    Nanos converged = -1;
    for (const TraceEvent& e : a.trace.events()) {
      if (e.kind != TraceKind::kControllerAction) continue;
      const auto action = static_cast<ControllerAction>(e.v2);
      if (action == ControllerAction::kDecreaseM || action == ControllerAction::kProbeDown) {
        converged = e.t;
        break;
      }
    }
    if (converged < 0) {
      Log("{} {}GB seed {}: controller never turned", w.model, w.gpu_gb, w.seed);
      continue;
    }
    const Nanos horizon = static_cast<Nanos>(kHorizonS * kSec);
    const SummaryOptions window{converged, horizon};
    const MetricsSummary as = Summarize(a.trace, window);
    const Nanos first = a.trace.events().empty() ? 0 : [&] {
      for (const TraceEvent& e : a.trace.events()) {
        if (e.kind == TraceKind::kArrival) return e.t;
      }
      return Nanos{0};
    }();
    const int adaptive_m = DominantM(as, first + converged, first + horizon);

    std::map<int, double> fixed;
    auto measure = [&](int m) {
      if (fixed.count(m) || m < 0 || m >= base.model.n_layers) return;
      try {
        fixed[m] = Summarize(RunSimulation(WithFixedM(base, m)).trace, window)
                       .steady_throughput_tps;
      } catch (const ConfigError&) {
        fixed[m] = 0.0;
      }
    };
    for (int m = adaptive_m - 3; m <= adaptive_m + 3; ++m) measure(m);
    // Extend until the best fixed m is interior to the measured range.
    for (;;) {
      auto best = std::max_element(fixed.begin(), fixed.end(),
                                   [](auto& x, auto& y) { return x.second < y.second; });
      const int lo = fixed.begin()->first;
      const int hi = fixed.rbegin()->first;
      if (best->first == lo && lo > 0) {
        measure(lo - 1);
      } else if (best->first == hi && hi < base.model.n_layers - 1) {
        measure(hi + 1);
      } else {
        break;
      }
    }
    auto best = std::max_element(fixed.begin(), fixed.end(),
                                 [](auto& x, auto& y) { return x.second < y.second; });
    std::string curve;
    for (const auto& [m, t] : fixed) curve += fmt::format(" {}:{:.0f}", m, t);
    Log("fixed m steady tok/s:{}", curve);
    const double ratio = as.steady_throughput_tps / best->second;
    const int dm = adaptive_m - best->first;
    const bool ok = std::abs(dm) <= 1 && ratio >= 0.98;
    passed += ok;
    if (ratio < worst_ratio) worst_ratio = ratio;
    if (std::abs(dm) > std::abs(worst_dm)) worst_dm = dm;
    Log("{} {}GB seed {}: converged {:.1f}s m={} best fixed m={} ({:.0f} tok/s) adaptive {:.0f} tok/s ratio {:.4f} {}",
        w.model, w.gpu_gb, w.seed, to_seconds(converged), adaptive_m, best->first,
        best->second, as.steady_throughput_tps, ratio, ok ? "ok" : "MISS");
  }
  return {passed == static_cast<int>(workloads.size()),
          fmt::format("{}/{} workloads within +-1 of best m and >= 98% throughput "
                      "(worst ratio {:.4f}, worst m offset {})",
                      passed, workloads.size(), worst_ratio, worst_dm)};
}

// ---------------------------------------------------------------------------
// 6. Throughput and latency shapes over m.

Verdict Criterion6() {
  RunConfig base = Workload("opt13b", 3.0, "alpaca_like", 200, 60, 6);
  SweepSpec spec = ParseSweepAxis("m=0,2,4,6,8,10,12,14,16,18,20,22");
  spec.shared_seed = true;
  spec.jobs = 1;
  const SweepResult r = RunSweep(base, spec);
  if (!r.failures.empty()) return {false, "sweep point failed: " + r.failures[0].message};
  std::vector<double> tput, queue, compute;
  for (const SweepRow& row : r.rows) {
    tput.push_back(row.summary.throughput_tps);
    queue.push_back(row.summary.queuing_latency_per_token);
    compute.push_back(row.summary.compute_latency_per_token);
    Log("m={:>2} {:7.1f} tok/s queue {:6.2f} ms compute {:5.2f} ms stall {:8.1f} ms",
        row.m_or_expansion, row.summary.throughput_tps,
        row.summary.queuing_latency_per_token / 1e6,
        row.summary.compute_latency_per_token / 1e6,
        static_cast<double>(row.summary.stall_time_total) / 1e6);
  }
  const size_t peak = std::max_element(tput.begin(), tput.end()) - tput.begin();
  std::vector<std::string> problems;
  if (peak == 0 || peak + 1 >= tput.size()) problems.push_back("peak at the grid edge");

  // Rise then fall, allowing one step against the trend of at most 2%.
  int against = 0;
  for (size_t i = 1; i < tput.size(); ++i) {
    const bool rising = i <= peak;
    const double step = tput[i] - tput[i - 1];
    if ((rising && step < 0) || (!rising && step > 0)) {
      ++against;
      if (std::abs(step) > 0.02 * tput[i - 1]) problems.push_back("large reversal");
    }
  }
  if (against > 1) problems.push_back(fmt::format("{} reversals", against));
  if (peak + 1 < tput.size() && tput.back() >= tput[peak]) problems.push_back("no fall");

  // Latency decomposition below the optimum.
  double mean = 0;
  for (size_t i = 0; i < peak; ++i) mean += compute[i];
  mean /= std::max<size_t>(peak, 1);
  for (size_t i = 0; i < peak; ++i) {
    if (std::abs(compute[i] - mean) > 0.05 * mean) {
      problems.push_back(fmt::format("compute latency at point {} off the flat band", i));
    }
  }
  for (size_t i = 1; i <= peak; ++i) {
    if (queue[i] >= queue[i - 1]) {
      problems.push_back(fmt::format("queuing latency not decreasing at point {}", i));
    }
  }
  if (peak + 1 < tput.size()) {
    if (compute[peak + 1] <= compute[peak]) problems.push_back("compute latency not rising past optimum");
    if (queue[peak + 1] <= queue[peak]) problems.push_back("queuing latency not rising past optimum");
  }
  const std::string shape = fmt::format(
      "peak at m={} ({:.0f} tok/s, m=0 {:.0f}, m={} {:.0f})", r.rows[peak].m_or_expansion,
      tput[peak], tput[0], r.rows.back().m_or_expansion, tput.back());
  if (problems.empty()) return {true, shape + "; latency split matches"};
  return {false, shape + "; " + fmt::format("{}", fmt::join(problems, "; "))};
}

// ---------------------------------------------------------------------------
// 7. Baseline ordering at equal GPU memory.

Verdict Criterion7() {
  RunConfig base = Workload("opt13b", 2.0, "sharegpt_like", 20, 60, 7);
  auto tput = [](const RunConfig& c) {
    return Summarize(RunSimulation(c).trace).throughput_tps;
  };
  double pie = 0;
  int pie_m = 0;
  for (int m = 0; m <= 24; m += 2) {
    double t = 0;
    try {
      t = tput(WithFixedM(base, m));
    } catch (const ConfigError&) {
      continue;
    }
    Log("transparent m={} {:.1f} tok/s", m, t);
    if (t > pie) {
      pie = t;
      pie_m = m;
    }
  }
  RunConfig recompute = base;
  recompute.mode = EngineMode::kPreemptRecompute;
  const double rc = tput(recompute);
  RunConfig on_demand = base;
  on_demand.mode = EngineMode::kOnDemandSwap;
  on_demand.policy.static_cpu_layers = pie_m;
  const double od = tput(on_demand);
  Log("recompute {:.1f} tok/s, on-demand k={} {:.1f} tok/s", rc, pie_m, od);
  const double vs_rc = pie / rc;
  const double vs_od = pie / od;
  return {vs_rc >= 1.2 && vs_od >= 5.0,
          fmt::format("transparent m={} {:.0f} tok/s: {:.2f}x recompute (need 1.2), "
                      "{:.2f}x on-demand at k={} (need 5)",
                      pie_m, pie, vs_rc, vs_od, pie_m)};
}

// ---------------------------------------------------------------------------
// 8. Reaction to a bandwidth drop.

RunConfig InterferenceConfig() {
  RunConfig c = Workload("opt13b", 3.0, "alpaca_like", 200, 140, 8);
  c.policy.adaptive = true;
  c.policy.controller.stall_tolerance = kStallTolerance;
  c.cost_model.background.push_back({60 * kSec, 100 * kSec, 0.5});
  return c;
}

Verdict Criterion8() {
  const RunConfig c = InterferenceConfig();
  const BackgroundWindow bg = c.cost_model.background[0];
  const RunOutput out = RunSimulation(c);
  std::map<int64_t, Nanos> window_end;
  for (const TraceEvent& e : out.trace.events()) {
    if (e.kind == TraceKind::kControllerAction) window_end[e.v0] = e.t;
  }
  const auto& history = out.controller_history;
  int64_t first_stall = -1;
  for (const WindowRecord& w : history) {
    if (window_end.count(w.index) && window_end[w.index] > bg.start && w.stall_events > 0) {
      first_stall = w.index;
      break;
    }
  }
  if (first_stall < 0) return {false, "no stall-bearing window inside the interference"};
  int64_t decrease = -1;
  for (const WindowRecord& w : history) {
    if (w.index >= first_stall && w.action == ControllerAction::kDecreaseM) {
      decrease = w.index;
      break;
    }
  }
  // Last stalling pass inside the interference window.
  Nanos last_stall = -1;
  for (const TraceEvent& e : out.trace.events()) {
    if ((e.kind == TraceKind::kDecodeEnd || e.kind == TraceKind::kPrefillEnd) &&
        e.v1 > 0 && e.t > bg.start && e.t <= bg.end) {
      last_stall = e.t;
    }
  }
  // At least one full stall-free controller window before the drop ends.
  bool quiet_window = false;
  for (const WindowRecord& w : history) {
    const Nanos end = window_end.count(w.index) ? window_end[w.index] : -1;
    if (end > last_stall && end <= bg.end && w.stall_events == 0 && w.index > first_stall) {
      quiet_window = true;
      break;
    }
  }
  const bool prompt = decrease >= 0 && decrease - first_stall <= 2;
  std::string m_path;
  for (const WindowRecord& w : history) {
    if (w.new_m != w.m) m_path += fmt::format(" {:.1f}s:{}", to_seconds(window_end[w.index]), w.new_m);
  }
  Log("m changes:{}", m_path);
  return {prompt && quiet_window,
          fmt::format("first stall window {} at {:.2f}s, DecreaseM in window {} ({} later); "
                      "last stall {:.2f}s, drop ends {:.0f}s",
                      first_stall, to_seconds(window_end[first_stall]), decrease,
                      decrease - first_stall, to_seconds(last_stall), to_seconds(bg.end))};
}

// ---------------------------------------------------------------------------
// 9. Byte-identical reruns.

Verdict Criterion9() {
  std::vector<std::string> problems;
  auto same_replay = [&](const std::string& what, auto run) {
    if (run().trace.ToJsonl() != run().trace.ToJsonl()) problems.push_back(what);
  };
  same_replay("walk-through replay", [] { return RunUnitReplay(9, 2, 1, 2, 12, 2, false); });
  same_replay("oracle-grid replay", [] { return RunUnitReplay(6, 3, 1, 3, 3, 2, true); });
  if (OracleResultJson(BruteForceSchedule(5, 2, 1, 2, 3)) !=
      OracleResultJson(BruteForceSchedule(5, 2, 1, 2, 3))) {
    problems.push_back("oracle");
  }

  std::vector<std::pair<std::string, RunConfig>> runs;
  runs.emplace_back("fixed m", WithFixedM(Workload("opt13b", 3.0, "alpaca_like", 200, 20, 9), 12));
  RunConfig adaptive = Workload("opt30b", 4.0, "alpaca_like", 150, 30, 9);
  adaptive.policy.adaptive = true;
  runs.emplace_back("adaptive", adaptive);
  RunConfig recompute = Workload("opt13b", 2.0, "sharegpt_like", 20, 20, 9);
  recompute.mode = EngineMode::kPreemptRecompute;
  runs.emplace_back("recompute", recompute);
  RunConfig on_demand = recompute;
  on_demand.mode = EngineMode::kOnDemandSwap;
  on_demand.policy.static_cpu_layers = 8;
  runs.emplace_back("on-demand", on_demand);
  RunConfig interference = InterferenceConfig();
  interference.workload.horizon_ns = 80 * kSec;
  runs.emplace_back("interference", interference);
  for (const auto& [name, config] : runs) {
    const RunOutput a = RunSimulation(config);
    const RunOutput b = RunSimulation(config);
    if (a.trace.ToJsonl() != b.trace.ToJsonl() || a.controller_csv != b.controller_csv) {
      problems.push_back(name);
    }
  }

  SweepSpec spec = ParseSweepAxis("m=0,2,4,6,8,10,12,14,16,18,20,22");
  spec.keep_traces = true;
  const RunConfig sweep_base = Workload("opt13b", 3.0, "alpaca_like", 200, 10, 9);
  spec.jobs = 1;
  const SweepResult serial = RunSweep(sweep_base, spec);
  spec.jobs = 8;
  const SweepResult parallel = RunSweep(sweep_base, spec);
  if (serial.traces != parallel.traces || SweepCsv(serial.rows) != SweepCsv(parallel.rows)) {
    problems.push_back("sweep jobs 1 vs 8");
  }
  if (problems.empty()) {
    return {true, fmt::format("{} simulations and a 12-point sweep (jobs 1 vs 8) rerun "
                              "byte-identical",
                              runs.size() + 2)};
  }
  return {false, "differs: " + fmt::format("{}", fmt::join(problems, ", "))};
}

}  // namespace
}  // namespace tierkv

int main(int argc, char** argv) {
  CLI::App app{"tierkv acceptance suite"};
  int only = 0;
  app.add_option("--criterion", only, "Run one criterion (1-9); default all")
      ->check(CLI::Range(0, 9));
  app.add_flag("--verbose,-v", tierkv::g_verbose, "Print per-case details");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<tierkv::Verdict()>> criteria = {
      tierkv::Criterion1, tierkv::Criterion2, tierkv::Criterion3,
      tierkv::Criterion4, tierkv::Criterion5, tierkv::Criterion6,
      tierkv::Criterion7, tierkv::Criterion8, tierkv::Criterion9};
  bool all = true;
  for (int i = 1; i <= 9; ++i) {
    if (only != 0 && only != i) continue;
    const auto start = std::chrono::steady_clock::now();
    tierkv::Verdict v;
    try {
      v = criteria[i - 1]();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << fmt::format("criterion {}: {} ({:.1f}s) {}\n", i, v.pass ? "PASS" : "FAIL",
                             secs, v.detail)
              << std::flush;
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
