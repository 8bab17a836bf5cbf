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

#include "tierkv/trace.h"

#include <array>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tierkv/error.h"
#include "tierkv/modes.h"

namespace tierkv {
namespace {

constexpr std::array<const char*, 19> kKindNames = {
    "init",          "arrival",      "admit",          "preempt",
    "finish",        "prefill_start", "prefill_end",   "decode_start",
    "decode_end",    "layer_start",  "layer_end",      "stall_start",
    "stall_end",     "xfer_begin",   "xfer_end",       "swap_decision",
    "resize_trigger", "resize_complete", "controller_action"};

constexpr std::array<const char*, 3> kXferNames = {"swap", "fetch",
                                                   "writeback"};

void AppendDetail(std::string* out, const Trace& trace, const TraceEvent& e) {
  auto opt_layer = [](int64_t v) {
    return v < 0 ? std::string("null") : fmt::format("{}", v);
  };
  switch (e.kind) {
    case TraceKind::kInit:
      fmt::format_to(std::back_inserter(*out),
                     R"({{"n_layers":{},"m":{},"mode":"{}"}})", e.v0, e.v1,
                     engine_mode_name(static_cast<EngineMode>(e.v2)));
      return;
    case TraceKind::kArrival:
      fmt::format_to(std::back_inserter(*out),
                     R"({{"prompt_tokens":{},"output_tokens":{}}})", e.v0,
                     e.v1);
      return;
    case TraceKind::kAdmit:
      fmt::format_to(std::back_inserter(*out), R"({{"recompute_tokens":{}}})",
                     e.v0);
      return;
    case TraceKind::kPreempt:
      fmt::format_to(std::back_inserter(*out), R"({{"done_tokens":{}}})", e.v0);
      return;
    case TraceKind::kFinish:
      fmt::format_to(std::back_inserter(*out),
                     R"({{"output_tokens":{},"truncated":{}}})", e.v0,
                     e.v1 ? "true" : "false");
      return;
    case TraceKind::kPrefillStart:
    case TraceKind::kDecodeStart: {
      fmt::format_to(std::back_inserter(*out),
                     R"({{"tokens":{},"recompute_tokens":{},"requests":[{}]}})",
                     e.v0, e.v1, fmt::join(trace.members(e), ","));
      return;
    }
    case TraceKind::kPrefillEnd:
    case TraceKind::kDecodeEnd:
      fmt::format_to(std::back_inserter(*out),
                     R"({{"compute_ns":{},"stall_ns":{},"output_tokens":{}}})",
                     e.v0, e.v1, e.v2);
      return;
    case TraceKind::kXferBegin:
      fmt::format_to(std::back_inserter(*out),
                     R"({{"bytes":{},"end":{},"what":"{}"}})", e.v0, e.v1,
                     kXferNames[e.v2]);
      return;
    case TraceKind::kSwapDecision:
      fmt::format_to(std::back_inserter(*out),
                     R"({{"swap_in":{},"swap_out":{},"next_token_prefetch":{}}})",
                     opt_layer(e.v0), opt_layer(e.v1),
                     e.v2 ? "true" : "false");
      return;
    case TraceKind::kResizeTrigger:
      fmt::format_to(std::back_inserter(*out), R"({{"from_m":{},"to_m":{}}})",
                     e.v0, e.v1);
      return;
    case TraceKind::kResizeComplete:
      fmt::format_to(std::back_inserter(*out), R"({{"m":{},"evicted":{}}})",
                     e.v0, e.v1);
      return;
    case TraceKind::kControllerAction:
      fmt::format_to(std::back_inserter(*out),
                     R"({{"window":{},"m":{},"action":"{}"}})", e.v0, e.v1,
                     controller_action_name(static_cast<ControllerAction>(e.v2)));
      return;
    default:
      out->append("{}");
      return;
  }
}

[[noreturn]] void Malformed(size_t line, const std::string& what) {
  throw Error(ErrorCode::kMalformedTrace,
              fmt::format("trace line {}: {}", line, what));
}

}  // namespace

const char* trace_kind_name(TraceKind kind) {
  return kKindNames[static_cast<size_t>(kind)];
}

void Trace::AddWithMembers(TraceEvent e, std::span<const RequestId> members) {
  e.members_begin = static_cast<uint32_t>(members_.size());
  e.members_count = static_cast<uint32_t>(members.size());
  members_.insert(members_.end(), members.begin(), members.end());
  events_.push_back(e);
}

void Trace::WriteJsonl(std::ostream& os) const {
  std::string line;
  for (const TraceEvent& e : events_) {
    line.clear();
    fmt::format_to(std::back_inserter(line), R"({{"t":{},"kind":"{}")", e.t,
                   trace_kind_name(e.kind));
    if (e.layer >= 0) fmt::format_to(std::back_inserter(line), R"(,"layer":{})", e.layer);
    if (e.request >= 0) {
      fmt::format_to(std::back_inserter(line), R"(,"request":{})", e.request);
    }
    if (e.direction >= 0) {
      fmt::format_to(std::back_inserter(line), R"(,"direction":"{}")",
                     direction_name(static_cast<Direction>(e.direction)));
    }
    line.append(R"(,"detail":)");
    AppendDetail(&line, *this, e);
    line.append("}\n");
    os << line;
  }
}

std::string Trace::ToJsonl() const {
  std::ostringstream os;
  WriteJsonl(os);
  return os.str();
}

Trace Trace::ParseJsonl(std::istream& is) {
  Trace trace;
  std::string text;
  size_t line_no = 0;
  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) Malformed(line_no, "not a JSON object");
    try {
      TraceEvent e;
      e.t = j.at("t").get<Nanos>();
      const std::string kind = j.at("kind").get<std::string>();
      size_t k = 0;
      while (k < kKindNames.size() && kind != kKindNames[k]) ++k;
      if (k == kKindNames.size()) Malformed(line_no, "unknown kind " + kind);
      e.kind = static_cast<TraceKind>(k);
      if (j.contains("layer")) e.layer = j["layer"].get<int32_t>();
      if (j.contains("request")) e.request = j["request"].get<RequestId>();
      if (j.contains("direction")) {
        e.direction = j["direction"].get<std::string>() == "c2g"
                          ? static_cast<int8_t>(Direction::kCpuToGpu)
                          : static_cast<int8_t>(Direction::kGpuToCpu);
      }
      const nlohmann::json& d = j.at("detail");
      auto opt_layer = [](const nlohmann::json& v) -> int64_t {
        return v.is_null() ? -1 : v.get<int64_t>();
      };
      std::vector<RequestId> members;
      switch (e.kind) {
        case TraceKind::kInit: {
          e.v0 = d.at("n_layers").get<int64_t>();
          e.v1 = d.at("m").get<int64_t>();
          auto mode = parse_engine_mode(d.at("mode").get<std::string>());
          if (!mode) Malformed(line_no, "unknown mode");
          e.v2 = static_cast<int64_t>(*mode);
          break;
        }
        case TraceKind::kArrival:
          e.v0 = d.at("prompt_tokens").get<int64_t>();
          e.v1 = d.at("output_tokens").get<int64_t>();
          break;
        case TraceKind::kAdmit:
          e.v0 = d.at("recompute_tokens").get<int64_t>();
          break;
        case TraceKind::kPreempt:
          e.v0 = d.at("done_tokens").get<int64_t>();
          break;
        case TraceKind::kFinish:
          e.v0 = d.at("output_tokens").get<int64_t>();
          e.v1 = d.at("truncated").get<bool>() ? 1 : 0;
          break;
        case TraceKind::kPrefillStart:
        case TraceKind::kDecodeStart:
          e.v0 = d.at("tokens").get<int64_t>();
          e.v1 = d.at("recompute_tokens").get<int64_t>();
          members = d.at("requests").get<std::vector<RequestId>>();
          break;
        case TraceKind::kPrefillEnd:
        case TraceKind::kDecodeEnd:
          e.v0 = d.at("compute_ns").get<int64_t>();
          e.v1 = d.at("stall_ns").get<int64_t>();
          e.v2 = d.at("output_tokens").get<int64_t>();
          break;
        case TraceKind::kXferBegin: {
          e.v0 = d.at("bytes").get<int64_t>();
          e.v1 = d.at("end").get<int64_t>();
          const std::string what = d.at("what").get<std::string>();
          size_t w = 0;
          while (w < kXferNames.size() && what != kXferNames[w]) ++w;
          if (w == kXferNames.size()) Malformed(line_no, "unknown transfer");
          e.v2 = static_cast<int64_t>(w);
          break;
        }
        case TraceKind::kSwapDecision:
          e.v0 = opt_layer(d.at("swap_in"));
          e.v1 = opt_layer(d.at("swap_out"));
          e.v2 = d.at("next_token_prefetch").get<bool>() ? 1 : 0;
          break;
        case TraceKind::kResizeTrigger:
          e.v0 = d.at("from_m").get<int64_t>();
          e.v1 = d.at("to_m").get<int64_t>();
          break;
        case TraceKind::kResizeComplete:
          e.v0 = d.at("m").get<int64_t>();
          e.v1 = d.at("evicted").get<int64_t>();
          break;
        case TraceKind::kControllerAction: {
          e.v0 = d.at("window").get<int64_t>();
          e.v1 = d.at("m").get<int64_t>();
          auto action =
              parse_controller_action(d.at("action").get<std::string>());
          if (!action) Malformed(line_no, "unknown action");
          e.v2 = static_cast<int64_t>(*action);
          break;
        }
        default:
          break;
      }
      trace.AddWithMembers(e, members);
    } catch (const nlohmann::json::exception& ex) {
      Malformed(line_no, ex.what());
    }
  }
  return trace;
}

}  // namespace tierkv
