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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccsim/protocol.hpp"
#include "ccsim/wire.hpp"

namespace ccsim {

/**
 * A simulated world: clients, at least two servers, the object universe
 * (placed round-robin across servers in list order), and the protocol
 * binding every process runs.
 */
struct WorldConfig {
  int clients = 1;
  int servers = 2;
  std::vector<ObjectId> objects;
  std::string protocol;
  ProtocolConfig pconfig;
  bool allow_clock = true;  // a world may forbid global clocks entirely
};

/**
 * One client request. Clients are closed-loop: an item is injected only
 * once the client's previous transaction has ended, and never before
 * `not_before`. Items flagged `after_drain` wait until the main workload
 * has fully drained (no in-flight messages, all clients idle).
 */
struct WorkloadItem {
  ClientId client = 0;
  Transaction txn;
  Tick not_before = 0;
  bool after_drain = false;
};

struct Workload {
  std::vector<WorkloadItem> items;
};

/// Visibility probe evaluated after every tick until it fires.
struct Watch {
  int server = 0;
  ObjectId object;
  ValueId value;
};

struct WatchResult {
  Watch watch;
  std::optional<Tick> visible_at;
};

struct RunOptions {
  Tick horizon = 1'000'000;
  // Take per-server state snapshots once all ticks <= t are processed.
  std::vector<Tick> snapshot_at;
  // Snapshot automatically at the end of every transaction of this client.
  std::optional<ClientId> snapshot_on_txn_end_of;
  std::vector<Watch> watches;
};

struct RunResult {
  History history;
  MessageLog log;  // delivery order
  std::map<Tick, std::vector<nlohmann::json>> snapshots;
  std::vector<nlohmann::json> final_states;
  std::vector<WatchResult> watches;
  Tick end_tick = 0;
  // Tick at which the main (non-after_drain) workload had fully drained.
  Tick quiescence_tick = 0;
};

/**
 * Deterministic discrete-event run. Replays deliveries in (deliver_at,
 * message id) order; per-channel delay streams are split from the seed so
 * adding a channel never perturbs the draws of the others.
 *
 * Throws UnreleasedHold if a held message survives to the end of the run
 * or past the horizon, ProtocolShapeMismatch if the workload contains
 * transactions the binding cannot execute, ClockAccessDenied if the
 * binding wants a clock in a world that forbids one.
 */
RunResult run(const WorldConfig& world, const Workload& workload,
              const Schedule& sched, const RunOptions& opts = {});

/// Differences between two runs outside the probe client's own exchange.
struct StateDiff {
  struct ServerDiff {
    Tick at = -1;  // -1 = final states
    int server = 0;
    nlohmann::json a, b;
  };
  struct MessageDiff {
    std::size_t index = 0;
    nlohmann::json a, b;  // null on one side if lengths differ
  };
  std::vector<ServerDiff> server_diffs;
  std::vector<MessageDiff> message_diffs;

  bool empty() const { return server_diffs.empty() && message_diffs.empty(); }
  nlohmann::json to_json() const;
};

struct PairedResult {
  RunResult with_probe;
  RunResult without_probe;
  StateDiff diff;
};

/**
 * Runs the same world twice under the same schedule, with and without the
 * probe client's transactions, and reports every difference in server
 * states (at each probe-transaction end and at the end of the run) and in
 * messages not to or from the probe client. The two workloads must differ
 * only in the probe client's items.
 */
PairedResult paired_run(const WorldConfig& world, const Workload& with_probe,
                        const Workload& without_probe, ClientId probe_client,
                        const Schedule& sched, const RunOptions& opts = {});

}  // namespace ccsim
