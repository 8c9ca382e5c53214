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

#include <string>

#include <json.hpp>

#include "ccsim/checkers.hpp"
#include "ccsim/simnet.hpp"

namespace ccsim {

/**
 * Closed-loop workload shape. Clients interleave read-only transactions
 * of `rot_size` objects with write transactions at `write_ratio`. Write
 * transactions touch `write_txn_size` objects (values above 1 require a
 * generic-transaction protocol). A dedicated probe client reads every
 * object once the main workload has drained, so progress can be checked
 * at quiescence.
 */
struct WorkloadSpec {
  int clients = 4;
  int servers = 3;
  int objects = 6;
  int ops_per_client = 50;
  double write_ratio = 0.05;
  int rot_size = 2;
  int write_txn_size = 1;
  std::uint64_t seed = 1;
  Tick delay_min = 1;
  Tick delay_max = 3;
  Tick u = 0;           // ts-global delay bound
  int sync_rounds = 0;  // fast-visible helping rounds
  Tick horizon = 5'000'000;
  bool probe_phase = true;
};

struct Metrics {
  std::map<int, std::int64_t> rot_rounds_hist;
  double mean_rot_rounds = 0;
  std::int64_t rots = 0;
  std::int64_t writes = 0;
  std::int64_t client_server_msgs = 0;
  std::int64_t server_server_msgs = 0;
  double client_server_per_op = 0;
  double server_server_per_write = 0;
  double mean_visibility_lag = 0;
  std::int64_t visibility_samples = 0;
  std::map<Tick, std::int64_t> visibility_lag_hist;  // lag in ticks -> count
  Verdict causal;
  int causal_samples = 0;
  int causal_skipped = 0;  // clients no budget-fitting sample existed for
  Verdict progress;

  nlohmann::json to_json() const;
};

struct RunArtifacts {
  WorldConfig world;
  Workload workload;
  Schedule schedule;
  RunResult result;
  Metrics metrics;
  ClientId probe_client = -1;
};

std::vector<ObjectId> object_universe(int count);
WorldConfig world_for(const WorkloadSpec& spec, const std::string& protocol);
Workload generate_workload(const WorkloadSpec& spec);

/**
 * Runs the generated workload against a registered protocol, computes
 * message metrics, checks causal serialization on budget-sized
 * sub-histories of each client and progress at quiescence.
 */
RunArtifacts run_workload(const WorkloadSpec& spec, const std::string& protocol);

/**
 * Largest causally-closed sub-history around client c that fits the
 * serialization checker's budget: a prefix of c's transactions plus every
 * write-containing transaction (transitively) needed to resolve reads.
 * Returns an empty history if even the smallest sample exceeds budget.
 */
History sample_sub_history(const History& h, ClientId c, int budget = 12);

}  // namespace ccsim
