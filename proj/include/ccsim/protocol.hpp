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

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccsim/wire.hpp"

namespace ccsim {

/// Protocol tuning knobs supplied at world-build time.
struct ProtocolConfig {
  // ts-global: message delay bound u. 0 selects the plain restricted-model
  // variant; u > 0 enables the bounded-delay generic-transaction variant
  // (transactions run for 2u ticks, reads compare stamps against ts - 2u).
  Tick u = 0;
  // fast-visible: inter-server sync rounds a multi-server write transaction
  // must complete before its values flip visible. 0 = visible at commit.
  int sync_rounds = 0;
};

/**
 * What a handler may do. Handlers receive only their inbox and local
 * state; the only ambient facility is the placement map, plus the global
 * clock for bindings that declare clock access (the simulator rejects
 * now() calls from any other binding).
 */
class Env {
 public:
  virtual ~Env() = default;
  virtual void send(ProcessId dst, Payload p) = 0;
  virtual Tick now() = 0;  // throws ClockAccessDenied without clock access
  virtual int server_of(const ObjectId& o) const = 0;
  virtual int server_count() const = 0;
};

/// Client-side additions: result recording and timers.
class ClientEnv : public Env {
 public:
  virtual void read_return(const ObjectId& o, const ValueId& v) = 0;
  virtual void write_ack(const ObjectId& o, const ValueId& v) = 0;
  // Ends the current transaction. The simulator checks the recorded
  // results against the transaction's read/write sets: exactly one value
  // per read object, one ack per written object.
  virtual void end_txn() = 0;
  virtual void set_timer(Tick at) = 0;
};

class ClientCore {
 public:
  virtual ~ClientCore() = default;
  virtual void on_start(const Transaction& txn, ClientEnv& env) = 0;
  virtual void on_message(const Message& m, ClientEnv& env) = 0;
  virtual void on_timer(Tick, ClientEnv&) {}
};

class ServerCore {
 public:
  virtual ~ServerCore() = default;
  virtual void on_message(const Message& m, Env& env) = 0;
  // Canonical state dump used for paired-run state diffing.
  virtual nlohmann::json dump_state() const = 0;
  virtual bool is_visible(const ObjectId& o, const ValueId& v) const = 0;
  virtual std::optional<ValueId> newest_visible(const ObjectId& o) const = 0;
};

/**
 * A registered protocol binding: factories for per-process handler state
 * plus the capability flags the harness and auditors rely on.
 */
class Protocol {
 public:
  virtual ~Protocol() = default;
  virtual std::string name() const = 0;
  // True if the binding may read the global clock (only ts-global).
  virtual bool clock_access() const { return false; }
  // True if the binding executes transactions that read and write
  // multiple objects. Restricted-model bindings accept only read-only
  // transactions and single-object write transactions. May depend on the
  // config (ts-global is generic only with a delay bound u > 0).
  virtual bool supports_generic(const ProtocolConfig& cfg) const = 0;
  virtual std::unique_ptr<ClientCore> make_client(ClientId id,
                                                  const ProtocolConfig& cfg) const = 0;
  virtual std::unique_ptr<ServerCore> make_server(int index,
                                                  std::vector<ObjectId> stored,
                                                  const ProtocolConfig& cfg) const = 0;
};

struct ProtocolHandle {
  std::string name;
};

using ProtocolFactory = std::function<std::shared_ptr<const Protocol>()>;

/// Registers a protocol under a unique name. Throws DuplicateName.
ProtocolHandle register_protocol(const std::string& name, ProtocolFactory factory);

/// Looks up a registered protocol. Throws UnknownProtocol.
std::shared_ptr<const Protocol> find_protocol(const std::string& name);

/// Names of all registered protocols, sorted.
std::vector<std::string> registered_protocols();

}  // namespace ccsim
