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

#include "tierkv/workload.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "tierkv/error.h"

namespace tierkv {
namespace {

class Sampler {
 public:
  explicit Sampler(uint64_t seed) : rng_(seed) {}

  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }

  double Exponential(double rate) { return -std::log1p(-Uniform()) / rate; }

  double Normal() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    const double u1 = 1.0 - Uniform();  // in (0, 1]
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  int64_t Length(const LengthDist& d) {
    const double x = std::exp(d.mu + d.sigma * Normal());
    const int64_t v = std::llround(x);
    return std::clamp(v, d.min, d.max);
  }

 private:
  std::mt19937_64 rng_;
  std::optional<double> spare_;
};

void ValidateDist(const LengthDist& d, const std::string& key) {
  if (d.min < 1 || d.max < d.min) {
    throw ConfigError("length bounds must satisfy 1 <= min <= max", key);
  }
  if (!(d.sigma >= 0.0) || !std::isfinite(d.mu)) {
    throw ConfigError("invalid lognormal parameters", key);
  }
}

}  // namespace

LengthPreset alpaca_like() {
  return {{std::log(16.0), 0.6, 1, 512}, {3.8, 0.7, 1, 512}};
}

LengthPreset sharegpt_like() {
  return {{4.6, 0.9, 1, 2048}, {5.4, 0.8, 1, 2048}};
}

std::optional<LengthPreset> length_preset(const std::string& name) {
  if (name == "alpaca_like") return alpaca_like();
  if (name == "sharegpt_like") return sharegpt_like();
  return std::nullopt;
}

void WorkloadSpec::Validate() const {
  if (trace_file.empty()) {
    if (!(poisson_rate > 0.0)) {
      throw ConfigError("poisson_rate must be positive", "workload.poisson_rate");
    }
    if (horizon_ns <= 0 && max_requests <= 0) {
      throw ConfigError("set horizon_s or max_requests", "workload");
    }
  }
  if (horizon_ns < 0 || max_requests < 0) {
    throw ConfigError("horizon bounds must be non-negative", "workload");
  }
  if (kv_bytes_per_token <= 0) {
    throw ConfigError("kv_bytes_per_token must be positive",
                      "model.kv_bytes_per_token");
  }
  ValidateDist(lengths.prompt, "workload.prompt");
  ValidateDist(lengths.output, "workload.output");
}

std::vector<RequestSpec> Generate(const WorkloadSpec& spec) {
  spec.Validate();
  std::vector<RequestSpec> out;
  if (!spec.trace_file.empty()) {
    out = LoadTrace(spec.trace_file);
    if (spec.max_requests > 0 &&
        static_cast<int64_t>(out.size()) > spec.max_requests) {
      out.resize(spec.max_requests);
    }
    return out;
  }
  Sampler sampler(spec.seed);
  double t = 0.0;
  for (RequestId id = 0;; ++id) {
    if (spec.max_requests > 0 && id >= spec.max_requests) break;
    t += sampler.Exponential(spec.poisson_rate);
    const Nanos arrival = static_cast<Nanos>(std::llround(t * kNanosPerSecond));
    if (spec.horizon_ns > 0 && arrival > spec.horizon_ns) break;
    RequestSpec r;
    r.id = id;
    r.arrival = arrival;
    r.prompt_tokens = sampler.Length(spec.lengths.prompt);
    r.output_tokens = sampler.Length(spec.lengths.output);
    out.push_back(r);
  }
  return out;
}

std::vector<RequestSpec> ParseTraceCsv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kParseError,
                fmt::format("trace line {}: {}", line_no, why));
  };
  std::vector<RequestSpec> out;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "arrival_s,prompt_tokens,output_tokens") {
        fail("expected header arrival_s,prompt_tokens,output_tokens");
      }
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::string a, p, o, extra;
    if (!std::getline(row, a, ',') || !std::getline(row, p, ',') ||
        !std::getline(row, o, ',') || std::getline(row, extra, ',')) {
      fail("expected three comma-separated fields");
    }
    double arrival_s = 0.0;
    int64_t prompt = 0, output = 0;
    try {
      size_t used = 0;
      arrival_s = std::stod(a, &used);
      if (used != a.size()) fail("bad arrival_s");
      prompt = std::stoll(p, &used);
      if (used != p.size()) fail("bad prompt_tokens");
      output = std::stoll(o, &used);
      if (used != o.size()) fail("bad output_tokens");
    } catch (const std::logic_error&) {
      fail("non-numeric field");
    }
    if (!(arrival_s >= 0.0) || !std::isfinite(arrival_s)) fail("bad arrival_s");
    if (prompt < 1) fail("prompt_tokens must be at least 1");
    if (output < 1) fail("output_tokens must be at least 1");
    RequestSpec r;
    r.id = static_cast<RequestId>(out.size());
    r.arrival = static_cast<Nanos>(std::llround(arrival_s * kNanosPerSecond));
    r.prompt_tokens = prompt;
    r.output_tokens = output;
    if (!out.empty() && r.arrival < out.back().arrival) {
      throw Error(ErrorCode::kNonMonotoneArrivals,
                  fmt::format("trace line {}: arrival precedes previous row",
                              line_no));
    }
    out.push_back(r);
  }
  if (!header_seen) fail("missing header");
  return out;
}

std::vector<RequestSpec> LoadTrace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, fmt::format("cannot open {}", path));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseTraceCsv(ss.str());
}

Bytes kv_bytes(const RequestSpec& request, int64_t generated,
               Bytes kv_bytes_per_token) {
  return (request.prompt_tokens + generated) * kv_bytes_per_token;
}

}  // namespace tierkv
