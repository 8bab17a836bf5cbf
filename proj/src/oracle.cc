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

#include "tierkv/oracle.h"

#include <array>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tierkv/error.h"

namespace tierkv {
namespace {

enum : uint8_t { kGpu = 0, kCpu = 1, kOut = 2, kIn = 3 };

struct Transfer {
  int layer = -1;  // -1 when the channel is idle.
  int64_t remaining = 0;
};

struct State {
  int step = 0;
  int round = 0;  // decision index within a stall
  std::array<uint8_t, kOracleMaxLayers> res{};
  Transfer in;
  Transfer out;
};

struct Value {
  int64_t stall = 0;
  int64_t swaps = 0;
  bool operator<(const Value& o) const {
    return stall != o.stall ? stall < o.stall : swaps < o.swaps;
  }
};

class Search {
 public:
  Search(int n, int m, int64_t tc, int64_t ts, int horizon)
      : n_(n), m_(m), tc_(tc), ts_(ts), total_(n * horizon) {}

  OracleResult Run() {
    State s0;
    for (int l = 0; l < n_; ++l) s0.res[l] = l < n_ - m_ ? kGpu : kCpu;
    std::optional<Value> best = Best(s0);
    OracleResult result;
    result.min_stall = best->stall;
    result.min_swaps = best->swaps;
    Reconstruct(s0, *best, &result.schedule);
    return result;
  }

 private:
  uint64_t Key(const State& s) const {
    uint64_t k = static_cast<uint64_t>(s.step);
    k = k * 64 + s.round;
    for (int l = 0; l < n_; ++l) k = k * 4 + s.res[l];
    k = k * 8 + static_cast<uint64_t>(s.in.layer + 1);
    k = k * 256 + static_cast<uint64_t>(s.in.remaining);
    k = k * 8 + static_cast<uint64_t>(s.out.layer + 1);
    k = k * 256 + static_cast<uint64_t>(s.out.remaining);
    return k;
  }

  int Count(const State& s, uint8_t a, uint8_t b) const {
    int c = 0;
    for (int l = 0; l < n_; ++l) c += s.res[l] == a || s.res[l] == b;
    return c;
  }

  // Candidate (swap_in, swap_out) pairs in canonical order; -1 is a no-op.
  std::vector<std::pair<int, int>> Options(const State& s) const {
    const int cur = s.step % n_;
    std::vector<int> ins{-1};
    std::vector<int> outs{-1};
    // GPU slots hold resident layers and both ends of in-flight transfers.
    const int gpu_used = n_ - Count(s, kCpu, kCpu);
    const int cpu_used = n_ - Count(s, kGpu, kGpu);
    if (s.in.layer < 0 && gpu_used < n_ - m_) {
      for (int l = 0; l < n_; ++l) {
        if (s.res[l] == kCpu) ins.push_back(l);
      }
    }
    if (s.out.layer < 0 && cpu_used < m_ + 2) {
      for (int l = 0; l < n_; ++l) {
        if (s.res[l] == kGpu && l != cur) outs.push_back(l);
      }
    }
    std::vector<std::pair<int, int>> opts;
    for (int a : ins) {
      for (int b : outs) opts.emplace_back(a, b);
    }
    return opts;
  }

  State Apply(State s, int a, int b, int* swaps) const {
    *swaps = 0;
    if (a >= 0) {
      s.res[a] = kIn;
      s.in = {a, ts_};
      ++*swaps;
    }
    if (b >= 0) {
      s.res[b] = kOut;
      s.out = {b, ts_};
      ++*swaps;
    }
    return s;
  }

  void Advance(State* s, int64_t dt) const {
    if (s->in.layer >= 0 && (s->in.remaining -= dt) <= 0) {
      s->res[s->in.layer] = kGpu;
      s->in = {};
    }
    if (s->out.layer >= 0 && (s->out.remaining -= dt) <= 0) {
      s->res[s->out.layer] = kCpu;
      s->out = {};
    }
  }

  // Successor after the decision has been applied: either the layer computes
  // or time jumps to the next transfer completion. Writes the stall incurred.
  std::optional<State> Next(const State& s, int64_t* stall, bool* done) const {
    *stall = 0;
    *done = false;
    const int cur = s.step % n_;
    State t = s;
    if (s.res[cur] == kGpu) {
      if (s.step + 1 == total_) {
        *done = true;
        return t;
      }
      Advance(&t, tc_);
      t.step += 1;
      t.round = 0;
      return t;
    }
    int64_t dt = -1;
    if (s.in.layer >= 0) dt = s.in.remaining;
    if (s.out.layer >= 0 && (dt < 0 || s.out.remaining < dt)) {
      dt = s.out.remaining;
    }
    // Stalled with nothing in flight, or stalled long enough to have cycled.
    if (dt < 0 || s.round >= 2 * n_) return std::nullopt;
    Advance(&t, dt);
    t.round += 1;
    *stall = dt;
    return t;
  }

  std::optional<Value> After(const State& s) {
    int64_t stall;
    bool done;
    std::optional<State> t = Next(s, &stall, &done);
    if (!t) return std::nullopt;
    if (done) return Value{};
    std::optional<Value> v = Best(*t);
    if (!v) return std::nullopt;
    v->stall += stall;
    return v;
  }

  std::optional<Value> Best(const State& s) {
    const uint64_t key = Key(s);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::optional<Value> best;
    for (auto [a, b] : Options(s)) {
      int swaps;
      State applied = Apply(s, a, b, &swaps);
      std::optional<Value> v = After(applied);
      if (!v) continue;
      v->swaps += swaps;
      if (!best || *v < *best) best = v;
    }
    memo_.emplace(key, best);
    return best;
  }

  void Reconstruct(State s, Value target, std::vector<OracleStep>* out) {
    int64_t now = 0;
    while (true) {
      for (auto [a, b] : Options(s)) {
        int swaps;
        State applied = Apply(s, a, b, &swaps);
        std::optional<Value> v = After(applied);
        if (!v || v->stall != target.stall || v->swaps + swaps != target.swaps) {
          continue;
        }
        OracleStep step;
        step.time = now;
        step.layer = s.step % n_;
        step.stalled = s.round > 0;
        if (a >= 0) step.swap_in = a;
        if (b >= 0) step.swap_out = b;
        out->push_back(step);
        int64_t stall;
        bool done;
        std::optional<State> t = Next(applied, &stall, &done);
        if (done) return;
        now += stall > 0 ? stall : tc_;
        target.stall -= stall;
        target.swaps -= swaps;
        s = *t;
        break;
      }
    }
  }

  int n_;
  int m_;
  int64_t tc_;
  int64_t ts_;
  int total_;
  std::unordered_map<uint64_t, std::optional<Value>> memo_;
};

}  // namespace

OracleResult BruteForceSchedule(int n, int m, int64_t t_compute, int64_t t_swap,
                                int horizon) {
  if (n < 1 || n > kOracleMaxLayers || horizon < 1 ||
      horizon > kOracleMaxHorizon) {
    throw Error(ErrorCode::kInstanceTooLarge,
                fmt::format("oracle supports n <= {} and horizon <= {}; got "
                            "n={} horizon={}",
                            kOracleMaxLayers, kOracleMaxHorizon, n, horizon));
  }
  if (m < 0 || m >= n || t_compute < 1 || t_swap < 1 || t_compute > 255 ||
      t_swap > 255) {
    throw ConfigError(fmt::format("invalid oracle instance m={} t_compute={} "
                                  "t_swap={}",
                                  m, t_compute, t_swap));
  }
  return Search(n, m, t_compute, t_swap, horizon).Run();
}

std::string OracleResultJson(const OracleResult& result) {
  nlohmann::ordered_json j;
  j["min_stall"] = result.min_stall;
  j["min_swaps"] = result.min_swaps;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const OracleStep& s : result.schedule) {
    nlohmann::ordered_json js;
    js["t"] = s.time;
    js["layer"] = s.layer;
    js["stalled"] = s.stalled;
    js["swap_in"] = s.swap_in ? nlohmann::ordered_json(*s.swap_in) : nlohmann::ordered_json(nullptr);
    js["swap_out"] = s.swap_out ? nlohmann::ordered_json(*s.swap_out) : nlohmann::ordered_json(nullptr);
    steps.push_back(std::move(js));
  }
  j["schedule"] = std::move(steps);
  return j.dump(2);
}

}  // namespace tierkv
