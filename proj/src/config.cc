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

#include "tierkv/config.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tierkv/error.h"

namespace tierkv {
namespace {

using Json = nlohmann::json;

// Typed, path-aware access to one JSON object. Keys that are never read are
// reported as unknown by Finish().
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("expected an object", path_);
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  std::string key(const std::string& k) const {
    return path_.empty() ? k : path_ + "." + k;
  }

  template <typename T>
  T get(const std::string& k, T fallback) {
    if (!has(k)) return fallback;
    return as<T>(j_.at(k), key(k));
  }

  template <typename T>
  T require(const std::string& k) {
    if (!has(k)) throw ConfigError("missing required key", key(k));
    return as<T>(j_.at(k), key(k));
  }

  Section sub(const std::string& k) {
    used_.insert(k);
    return Section(j_.at(k), key(k));
  }

  const Json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("unknown key", key(it.key()));
    }
  }

  template <typename T>
  static T as(const Json& v, const std::string& where) {
    try {
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (v.is_number_float()) {
          const double d = v.get<double>();
          if (d != std::floor(d)) throw ConfigError("expected an integer", where);
          return static_cast<T>(d);
        }
        if (!v.is_number()) throw ConfigError("expected an integer", where);
      }
      return v.get<T>();
    } catch (const Json::exception&) {
      throw ConfigError("wrong type", where);
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Nanos SecondsToNanos(double s) {
  return static_cast<Nanos>(std::llround(s * kNanosPerSecond));
}

void ReadDist(Section s, LengthDist* d) {
  d->mu = s.require<double>("mu");
  d->sigma = s.require<double>("sigma");
  d->min = s.get<int64_t>("min", d->min);
  d->max = s.require<int64_t>("max");
  s.Finish();
}

void ReadModel(Section s, ModelConfig* m) {
  if (s.has("preset")) {
    const std::string name = s.require<std::string>("preset");
    if (!ApplyModelPreset(name, m)) {
      throw ConfigError("unknown model preset " + name, s.key("preset"));
    }
  }
  m->n_layers = s.get<int>("n_layers", m->n_layers);
  m->kv_bytes_per_token = s.get<Bytes>("kv_bytes_per_token", m->kv_bytes_per_token);
  s.Finish();
}

void ReadMemory(Section s, MemoryConfig* m) {
  if (s.has("gpu_kv_gb")) {
    m->gpu_kv_bytes = std::llround(s.require<double>("gpu_kv_gb") * 1e9);
  }
  m->gpu_kv_bytes = s.get<Bytes>("gpu_kv_bytes", m->gpu_kv_bytes);
  if (s.has("cpu_cap_gb")) {
    m->cpu_cap_bytes = std::llround(s.require<double>("cpu_cap_gb") * 1e9);
  }
  m->cpu_cap_bytes = s.get<Bytes>("cpu_cap_bytes", m->cpu_cap_bytes);
  m->block_size_tokens = s.get<int>("block_size_tokens", m->block_size_tokens);
  s.Finish();
}

void ReadController(Section s, ControllerConfig* c) {
  c->violation_ratio_threshold =
      s.get<double>("violation_ratio_threshold", c->violation_ratio_threshold);
  c->stall_tolerance = s.get<int>("stall_tolerance", c->stall_tolerance);
  c->window_tokens = s.get<int>("window_tokens", c->window_tokens);
  c->plateau_epsilon = s.get<double>("plateau_epsilon", c->plateau_epsilon);
  c->probe_interval_tokens =
      s.get<int>("probe_interval_tokens", c->probe_interval_tokens);
  c->cooldown_windows = s.get<int>("cooldown_windows", c->cooldown_windows);
  s.Finish();
}

void ReadPolicy(Section s, PolicyConfig* p) {
  p->adaptive = s.get<bool>("adaptive", p->adaptive);
  p->fixed_m = s.get<int>("fixed_m", p->fixed_m);
  if (s.has("lookahead")) {
    const Json& v = s.raw("lookahead");
    if (v.is_string() && v.get<std::string>() == "auto") {
      p->lookahead = -1;
    } else {
      p->lookahead = Section::as<int>(v, s.key("lookahead"));
      if (p->lookahead < 0) throw ConfigError("must be >= 0 or \"auto\"", s.key("lookahead"));
    }
  }
  if (s.has("controller")) ReadController(s.sub("controller"), &p->controller);
  p->static_cpu_layers = s.get<int>("static_cpu_layers", p->static_cpu_layers);
  p->force_migrate_passes = s.get<int>("force_migrate_passes", p->force_migrate_passes);
  s.Finish();
}

void ReadCost(Section s, CostModel* c) {
  if (s.has("preset")) {
    const std::string name = s.require<std::string>("preset");
    if (!ApplyCostPreset(name, c)) {
      throw ConfigError("unknown cost preset " + name, s.key("preset"));
    }
  }
  c->compute_base_ns = s.get<Nanos>("compute_base_ns", c->compute_base_ns);
  c->compute_per_token_ns = s.get<double>("compute_per_token_ns", c->compute_per_token_ns);
  c->prefill_per_token_ns = s.get<double>("prefill_per_token_ns", c->prefill_per_token_ns);
  c->peak_bw_c2g_bps = s.get<double>("peak_bw_c2g_bps", c->peak_bw_c2g_bps);
  c->peak_bw_g2c_bps = s.get<double>("peak_bw_g2c_bps", c->peak_bw_g2c_bps);
  c->bw_half_size_bytes = s.get<double>("bw_half_size_bytes", c->bw_half_size_bytes);
  if (s.has("background")) {
    const Json& arr = s.raw("background");
    if (!arr.is_array()) throw ConfigError("expected an array", s.key("background"));
    c->background.clear();
    for (size_t i = 0; i < arr.size(); ++i) {
      Section w(arr[i], fmt::format("{}[{}]", s.key("background"), i));
      BackgroundWindow bw;
      bw.start = w.require<Nanos>("start_ns");
      bw.end = w.require<Nanos>("end_ns");
      bw.fraction = w.require<double>("fraction");
      w.Finish();
      c->background.push_back(bw);
    }
  }
  s.Finish();
}

void ReadWorkload(Section s, WorkloadSpec* w) {
  w->poisson_rate = s.get<double>("poisson_rate", w->poisson_rate);
  w->trace_file = s.get<std::string>("trace_file", w->trace_file);
  if (s.has("lengths")) {
    const Json& v = s.raw("lengths");
    if (v.is_string()) {
      auto preset = length_preset(v.get<std::string>());
      if (!preset) {
        throw ConfigError("unknown length preset " + v.get<std::string>(),
                          s.key("lengths"));
      }
      w->lengths = *preset;
    } else {
      Section l(v, s.key("lengths"));
      ReadDist(l.sub("prompt"), &w->lengths.prompt);
      ReadDist(l.sub("output"), &w->lengths.output);
      l.Finish();
    }
  }
  if (s.has("horizon_s")) w->horizon_ns = SecondsToNanos(s.require<double>("horizon_s"));
  w->horizon_ns = s.get<Nanos>("horizon_ns", w->horizon_ns);
  w->max_requests = s.get<int64_t>("max_requests", w->max_requests);
  s.Finish();
}

// Sets `value` at a dotted path, creating intermediate objects.
void ApplyOverride(Json* root, const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value: " + assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = root;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot - start);
    if (part.empty()) throw ConfigError("empty key segment", path);
    if (!node->is_object()) throw ConfigError("cannot descend into a value", path);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    start = dot + 1;
  }
}

}  // namespace

bool ApplyModelPreset(const std::string& name, ModelConfig* model) {
  if (name == "opt13b") {
    model->n_layers = 40;
    model->kv_bytes_per_token = 819200;
    return true;
  }
  if (name == "opt30b") {
    model->n_layers = 48;
    model->kv_bytes_per_token = 1376256;
    return true;
  }
  return false;
}

bool ApplyCostPreset(const std::string& name, CostModel* model) {
  if (name == "gh200_opt13b") {
    model->compute_base_ns = 162'500;
    model->compute_per_token_ns = 5.0;
    model->prefill_per_token_ns = 1100.0;
  } else if (name == "gh200_opt30b") {
    model->compute_base_ns = 312'500;
    model->compute_per_token_ns = 7.17;
    model->prefill_per_token_ns = 2100.0;
  } else {
    return false;
  }
  model->peak_bw_c2g_bps = 419e9;
  model->peak_bw_g2c_bps = 371e9;
  model->bw_half_size_bytes = 16.0 * kMiB / 19.0;
  return true;
}

void RunConfig::Validate() const {
  if (model.n_layers < 1) throw ConfigError("must be >= 1", "model.n_layers");
  if (model.kv_bytes_per_token <= 0 ||
      model.kv_bytes_per_token % model.n_layers != 0) {
    throw ConfigError("must be positive and divisible by n_layers",
                      "model.kv_bytes_per_token");
  }
  if (memory.gpu_kv_bytes <= 0) throw ConfigError("must be positive", "memory.gpu_kv_bytes");
  if (memory.cpu_cap_bytes < 0) throw ConfigError("must be >= 0", "memory.cpu_cap_bytes");
  if (memory.block_size_tokens < 1) {
    throw ConfigError("must be >= 1", "memory.block_size_tokens");
  }
  if (policy.fixed_m < 0 || policy.fixed_m >= model.n_layers) {
    throw ConfigError("must lie in [0, n_layers)", "policy.fixed_m");
  }
  if (policy.static_cpu_layers < 0 || policy.static_cpu_layers >= model.n_layers) {
    throw ConfigError("must lie in [0, n_layers)", "policy.static_cpu_layers");
  }
  if (policy.force_migrate_passes < 1) {
    throw ConfigError("must be >= 1", "policy.force_migrate_passes");
  }
  if (warmup_ns < 0) throw ConfigError("must be >= 0", "warmup_ns");
  policy.controller.Validate();
  cost_model.Validate();
  workload.Validate();
}

RunConfig ParseRunConfig(const std::string& json_text,
                         const std::vector<std::string>& overrides) {
  Json root = Json::parse(json_text, nullptr, false);
  if (root.is_discarded()) throw ConfigError("config is not valid JSON");
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  for (const std::string& o : overrides) ApplyOverride(&root, o);

  RunConfig c;
  Section s(root, "");
  if (!s.has("model")) throw ConfigError("missing required section", "model");
  ReadModel(s.sub("model"), &c.model);
  if (s.has("memory")) ReadMemory(s.sub("memory"), &c.memory);
  if (s.has("mode")) {
    const std::string name = s.require<std::string>("mode");
    auto mode = parse_engine_mode(name);
    if (!mode) throw ConfigError("unknown mode " + name, "mode");
    c.mode = *mode;
  }
  if (s.has("policy")) ReadPolicy(s.sub("policy"), &c.policy);
  if (!s.has("cost_model")) {
    throw ConfigError("missing required section", "cost_model");
  }
  ReadCost(s.sub("cost_model"), &c.cost_model);
  if (!s.has("workload")) throw ConfigError("missing required section", "workload");
  ReadWorkload(s.sub("workload"), &c.workload);
  if (s.has("trace")) {
    Section t = s.sub("trace");
    c.trace.layer_events = t.get<bool>("layer_events", c.trace.layer_events);
    t.Finish();
  }
  c.output_dir = s.get<std::string>("output_dir", c.output_dir);
  c.seed = s.get<uint64_t>("seed", c.seed);
  if (s.has("warmup_s")) c.warmup_ns = SecondsToNanos(s.require<double>("warmup_s"));
  c.warmup_ns = s.get<Nanos>("warmup_ns", c.warmup_ns);
  s.Finish();

  c.workload.kv_bytes_per_token = c.model.kv_bytes_per_token;
  c.workload.seed = c.seed;
  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::string& path,
                        const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str(), overrides);
}

std::string EffectiveConfigJson(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["model"] = {{"n_layers", c.model.n_layers},
                {"kv_bytes_per_token", c.model.kv_bytes_per_token}};
  j["memory"] = {{"gpu_kv_bytes", c.memory.gpu_kv_bytes},
                 {"cpu_cap_bytes", c.memory.cpu_cap_bytes},
                 {"block_size_tokens", c.memory.block_size_tokens}};
  j["mode"] = engine_mode_name(c.mode);
  const ControllerConfig& cc = c.policy.controller;
  nlohmann::ordered_json lookahead =
      c.policy.lookahead < 0 ? nlohmann::ordered_json("auto")
                             : nlohmann::ordered_json(c.policy.lookahead);
  j["policy"] = {
      {"adaptive", c.policy.adaptive},
      {"fixed_m", c.policy.fixed_m},
      {"lookahead", lookahead},
      {"controller",
       {{"violation_ratio_threshold", cc.violation_ratio_threshold},
        {"stall_tolerance", cc.stall_tolerance},
        {"window_tokens", cc.window_tokens},
        {"plateau_epsilon", cc.plateau_epsilon},
        {"probe_interval_tokens", cc.probe_interval_tokens},
        {"cooldown_windows", cc.cooldown_windows}}},
      {"static_cpu_layers", c.policy.static_cpu_layers},
      {"force_migrate_passes", c.policy.force_migrate_passes}};
  nlohmann::ordered_json bg = nlohmann::ordered_json::array();
  for (const BackgroundWindow& w : c.cost_model.background) {
    bg.push_back({{"start_ns", w.start}, {"end_ns", w.end}, {"fraction", w.fraction}});
  }
  j["cost_model"] = {{"compute_base_ns", c.cost_model.compute_base_ns},
                     {"compute_per_token_ns", c.cost_model.compute_per_token_ns},
                     {"prefill_per_token_ns", c.cost_model.prefill_per_token_ns},
                     {"peak_bw_c2g_bps", c.cost_model.peak_bw_c2g_bps},
                     {"peak_bw_g2c_bps", c.cost_model.peak_bw_g2c_bps},
                     {"bw_half_size_bytes", c.cost_model.bw_half_size_bytes},
                     {"background", bg}};
  auto dist = [](const LengthDist& d) {
    return nlohmann::ordered_json{
        {"mu", d.mu}, {"sigma", d.sigma}, {"min", d.min}, {"max", d.max}};
  };
  j["workload"] = {{"poisson_rate", c.workload.poisson_rate},
                   {"trace_file", c.workload.trace_file},
                   {"lengths",
                    {{"prompt", dist(c.workload.lengths.prompt)},
                     {"output", dist(c.workload.lengths.output)}}},
                   {"horizon_ns", c.workload.horizon_ns},
                   {"max_requests", c.workload.max_requests}};
  j["trace"] = {{"layer_events", c.trace.layer_events}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["warmup_ns"] = c.warmup_ns;
  return j.dump(2);
}

}  // namespace tierkv
