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

#pragma once

#include <memory>
#include <vector>

#include "tierkv/config.h"
#include "tierkv/controller.h"
#include "tierkv/trace.h"
#include "tierkv/workload.h"

namespace tierkv {

struct RunOutput {
  Trace trace;
  // Empty unless the expansion controller ran.
  std::vector<WindowRecord> controller_history;
  std::string controller_csv;
  // Offloaded layers when the run ended.
  int final_m = 0;
};

// Discrete-event simulation of a serving engine: FCFS continuous batching,
// one prefill or decode pass at a time, each pass a loop over all layers.
// Memory exhaustion preempts the most recently admitted request, which later
// recomputes its whole context. Identical configs give identical traces.
RunOutput RunSimulation(const RunConfig& config);

// Same, with an explicit request list instead of the configured workload.
RunOutput RunSimulation(const RunConfig& config,
                        const std::vector<RequestSpec>& requests);

// KV blocks per layer and bytes per layer slot with `cpu_layers` offloaded.
// `staging_slot` reserves one extra GPU slot, as the on-demand baseline does.
int BlocksPerLayer(const RunConfig& config, int cpu_layers, bool staging_slot);
Bytes BlockBytesPerLayer(const RunConfig& config);

}  // namespace tierkv
