/*
 * Copyright (c) 2026, the ccsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccsim/checkers.hpp"
#include "ccsim/simnet.hpp"

namespace ccsim {

/**
 * A fully scripted adversarial run: world, timed client requests
 * (including probe ROT placements), schedule overrides, and the metadata
 * the runner needs to evaluate verdicts. Deterministic given the
 * protocol binding; every HOLD is released.
 */
struct Scenario {
  std::string name;
  WorldConfig world;
  Workload workload;
  Schedule schedule;
  Tick progress_budget = 0;
  ClientId probe_client = -1;          // visibility probe client (paired run)
  std::optional<TxnId> main_rot;       // the probe ROT under audit
  std::optional<TxnId> final_rot;      // late ROT expected to see fresh values
  std::vector<TxnId> straddle_probes;  // one per boundary placement
  std::optional<TxnId> violation_probe;
  nlohmann::json expected;             // expected verdict fields by protocol class
};

struct ScenarioReport {
  std::string scenario;
  std::string protocol;
  bool fast = false;
  bool visible = false;
  bool consistent = false;
  bool progress = true;
  std::string note;  // "escapes-by-slowness", "circumvention-global-clock", ...
  int placements = 0;
  int stale_placements = 0;
  int violating_placements = 0;
  std::int64_t required_messages = 0;  // inter-server messages after the WOT
  bool expected_match = true;
  nlohmann::json witness;

  nlohmann::json to_json() const;
};

/**
 * The invisible-reads demonstration: a probe ROT whose request to the
 * second server is held until just after the second write is visible,
 * with a with/without-probe paired run for the visibility verdict. Writes
 * go through each protocol's native single-object write path.
 */
Scenario scenario_e12(const std::string& protocol, ProtocolConfig cfg = {});

/**
 * The bounded-k fast-generic-transactions demonstration: a two-object
 * write-only transaction whose visibility requires k inter-server sync
 * exchanges; probe ROTs straddle each exchange, the final exchange is
 * held past the progress budget, and one probe is placed to catch the
 * split visibility window. Throws ProtocolShapeMismatch if the binding
 * lacks generic transactions.
 */
Scenario scenario_eimp(int k, const std::string& protocol, ProtocolConfig cfg = {});

ScenarioReport run_scenario(const Scenario& s);

}  // namespace ccsim
