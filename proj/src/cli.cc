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

#include "tierkv/cli.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tierkv/config.h"
#include "tierkv/engine.h"
#include "tierkv/error.h"
#include "tierkv/layer_loop.h"
#include "tierkv/metrics.h"
#include "tierkv/oracle.h"
#include "tierkv/sweep.h"

namespace tierkv {

namespace {

namespace fs = std::filesystem;

std::string OutputDir(const std::string& configured) {
  const char* env = std::getenv("SIM_OUTPUT_DIR");
  if (env != nullptr && *env != '\0') return env;
  return configured;
}

// Collects "--set a.b=v" values and bare "--a.b=v" extras.
std::vector<std::string> Overrides(const std::vector<std::string>& sets,
                                   const std::vector<std::string>& extras) {
  std::vector<std::string> out = sets;
  for (size_t i = 0; i < extras.size(); ++i) {
    const std::string& x = extras[i];
    if (x.rfind("--", 0) != 0) {
      throw ConfigError(fmt::format("unexpected argument '{}'", x));
    }
    std::string kv = x.substr(2);
    if (kv.find('=') == std::string::npos) {
      if (i + 1 >= extras.size()) {
        throw ConfigError(fmt::format("option '{}' needs a value", x));
      }
      kv += "=" + extras[++i];
    }
    out.push_back(kv);
  }
  return out;
}

int ReportError(const std::exception& e, std::ostream& err) {
  if (const auto* c = dynamic_cast<const ConfigError*>(&e)) {
    if (c->key().empty()) {
      err << fmt::format("config error: {}\n", c->what());
    } else {
      err << fmt::format("config error at '{}': {}\n", c->key(), c->what());
    }
    return kExitUsage;
  }
  if (const auto* x = dynamic_cast<const Error*>(&e)) {
    err << fmt::format("{}: {}\n", error_code_name(x->code()), x->what());
    return x->code() == ErrorCode::kInstanceTooLarge ? kExitUsage : kExitRuntime;
  }
  err << fmt::format("error: {}\n", e.what());
  return kExitRuntime;
}

RunConfig LoadConfigOrUsage(const std::string& path,
                            const std::vector<std::string>& overrides) {
  try {
    return LoadRunConfig(path, overrides);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    // Unreadable or unparsable config files are usage errors.
    throw ConfigError(e.what(), "config");
  }
}

int CmdRun(const std::string& config_path, const std::vector<std::string>& overrides,
           std::ostream& out) {
  const RunConfig config = LoadConfigOrUsage(config_path, overrides);
  const RunOutput result = RunSimulation(config);
  const MetricsSummary summary = Summarize(result.trace, {config.warmup_ns});
  const fs::path dir = OutputDir(config.output_dir);
  WriteFileAtomic((dir / "trace.jsonl").string(), result.trace.ToJsonl());
  WriteFileAtomic((dir / "summary.json").string(), SummaryJson(summary));
  WriteFileAtomic((dir / "effective_config.json").string(),
                  EffectiveConfigJson(config));
  if (!result.controller_csv.empty()) {
    WriteFileAtomic((dir / "controller.csv").string(), result.controller_csv);
  }
  out << fmt::format(
      "{} tokens in {:.3f} s: {} tok/s, stall {:.3f} ms, swaps {}/{}, final m "
      "{}; wrote {}\n",
      summary.output_tokens, to_seconds(summary.duration),
      FormatDouble(summary.throughput_tps),
      static_cast<double>(summary.stall_time_total) / 1e6, summary.swaps_in,
      summary.swaps_out, result.final_m, dir.string());
  return kExitOk;
}

int CmdSweep(const std::string& config_path, const std::vector<std::string>& overrides,
             const std::string& axis, int jobs, bool shared_seed, bool traces,
             std::ostream& out, std::ostream& err) {
  const RunConfig config = LoadConfigOrUsage(config_path, overrides);
  SweepSpec spec = ParseSweepAxis(axis);
  spec.jobs = jobs;
  spec.shared_seed = shared_seed;
  spec.keep_traces = traces;
  const SweepResult result = RunSweep(config, spec);
  const fs::path dir = OutputDir(config.output_dir);
  WriteFileAtomic((dir / "sweep.csv").string(), SweepCsv(result.rows));
  if (traces) {
    for (size_t i = 0; i < result.traces.size(); ++i) {
      if (result.traces[i].empty()) continue;
      WriteFileAtomic((dir / fmt::format("trace_{}.jsonl", i)).string(),
                      result.traces[i]);
    }
  }
  const fs::path failures = dir / "sweep_failures.csv";
  if (!result.failures.empty()) {
    WriteFileAtomic(failures.string(), SweepFailuresCsv(result.failures));
    for (const SweepFailure& f : result.failures) {
      err << fmt::format("point {} ({}={}) failed: {}\n", f.run_id,
                         sweep_axis_name(spec.axis), FormatDouble(f.value),
                         f.message);
    }
  } else {
    std::error_code ec;
    fs::remove(failures, ec);
  }
  out << fmt::format("{} of {} points ok; wrote {}\n", result.rows.size(),
                     spec.values.size(), (dir / "sweep.csv").string());
  return result.failures.empty() ? kExitOk : kExitRuntime;
}

int CmdOracle(int n, int m, int64_t swap_ratio, int horizon,
              const std::string& out_dir, std::ostream& out) {
  if (m < 0 || m >= n) {
    throw ConfigError(fmt::format("m must lie in [0, n), got {}", m), "m");
  }
  if (swap_ratio < 1 || horizon < 1) {
    throw ConfigError("swap ratio and horizon must be positive", "swap-ratio");
  }
  const OracleResult best = BruteForceSchedule(n, m, 1, swap_ratio, horizon);
  const ReplayResult fifo =
      RunUnitReplay(n, m, 1, swap_ratio, horizon, /*lookahead=*/2,
                    /*finite_horizon=*/true);
  nlohmann::ordered_json j;
  j["instance"] = {{"n", n}, {"m", m}, {"t_compute", 1},
                   {"t_swap", swap_ratio}, {"horizon", horizon}};
  j["oracle"] = nlohmann::ordered_json::parse(OracleResultJson(best));
  j["fifo"] = {{"stall", fifo.total_stall}, {"swaps", fifo.swaps}};
  const bool stall_agrees = fifo.total_stall == best.min_stall;
  const bool swaps_agree = fifo.swaps == best.min_swaps;
  j["stall_agrees"] = stall_agrees;
  j["swaps_agree"] = swaps_agree;
  const std::string text = j.dump(2) + "\n";
  WriteFileAtomic((fs::path(OutputDir(out_dir)) / "oracle.json").string(), text);
  out << fmt::format(
      "oracle: min stall {} with {} swaps; fifo: stall {} with {} swaps; {}\n",
      best.min_stall, best.min_swaps, fifo.total_stall, fifo.swaps,
      stall_agrees ? (swaps_agree ? "agree" : "agree on stall, differ on swaps")
                   : "disagree");
  return kExitOk;
}

int CmdSummarize(const std::string& trace_path, Nanos warmup_ns, bool csv,
                 std::ostream& out) {
  std::ifstream is(trace_path);
  if (!is) throw ConfigError(fmt::format("cannot open {}", trace_path), "trace");
  const Trace trace = Trace::ParseJsonl(is);
  const MetricsSummary s = Summarize(trace, {warmup_ns});
  out << (csv ? SummaryCsv(s) : SummaryJson(s));
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Layer-granular KV-cache swapping simulator", "sim"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;

  CLI::App* run = app.add_subcommand("run", "Run one simulation");
  run->add_option("--config", config_path, "JSON run config")->required();
  run->add_option("--set", sets, "Override a config key: a.b=value");
  run->allow_extras();

  std::string axis;
  int jobs = 1;
  bool shared_seed = false;
  bool traces = false;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a grid of simulations");
  sweep->add_option("--config", config_path, "JSON run config")->required();
  sweep->add_option("--axis", axis, "m=0,1,2 | gpu_kv_gb=... | req_rate=...")
      ->required();
  sweep->add_option("--jobs", jobs, "Simulations run at once")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--set", sets, "Override a config key: a.b=value");
  sweep->add_flag("--shared-seed", shared_seed,
                  "Give every point the base seed instead of a derived one");
  sweep->add_flag("--traces", traces, "Write each point's trace");
  sweep->allow_extras();

  int n = 0;
  int m = 0;
  int64_t ratio = 1;
  int horizon = 3;
  std::string oracle_dir = "out";
  CLI::App* oracle = app.add_subcommand(
      "oracle", "Exhaustive minimum-stall schedule versus the FIFO policy");
  oracle->add_option("--n", n, "Layers")->required();
  oracle->add_option("--m", m, "Offloaded layers")->required();
  oracle->add_option("--swap-ratio", ratio, "Swap time in compute units")->required();
  oracle->add_option("--horizon", horizon, "Tokens")->required();
  oracle->add_option("--output-dir", oracle_dir, "Where oracle.json goes");

  std::string trace_path;
  double warmup_s = 0;
  bool csv = false;
  CLI::App* summarize = app.add_subcommand("summarize", "Summarize a JSONL trace");
  summarize->add_option("--trace", trace_path, "trace.jsonl")->required();
  summarize->add_option("--warmup-s", warmup_s, "Steady-state warmup");
  summarize->add_flag("--csv", csv, "CSV instead of JSON");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << fmt::format("usage error: {}\n", e.what());
    err << app.help();
    return kExitUsage;
  }

  try {
    if (run->parsed()) {
      return CmdRun(config_path, Overrides(sets, run->remaining()), out);
    }
    if (sweep->parsed()) {
      return CmdSweep(config_path, Overrides(sets, sweep->remaining()), axis,
                      jobs, shared_seed, traces, out, err);
    }
    if (oracle->parsed()) {
      return CmdOracle(n, m, ratio, horizon, oracle_dir, out);
    }
    if (summarize->parsed()) {
      return CmdSummarize(trace_path,
                          static_cast<Nanos>(std::llround(warmup_s * 1e9)), csv, out);
    }
  } catch (const std::exception& e) {
    return ReportError(e, err);
  }
  return kExitUsage;
}

}  // namespace tierkv
