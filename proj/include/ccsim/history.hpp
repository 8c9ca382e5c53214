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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccsim/errors.hpp"

namespace ccsim {

using ClientId = int;
using TxnId = std::int64_t;
using Tick = std::int64_t;

inline constexpr TxnId kNoTxn = -1;

/// Name of a stored object. Unique within a run's object universe.
struct ObjectId {
  std::string name;

  friend auto operator<=>(const ObjectId&, const ObjectId&) = default;
};

/**
 * Identity of a written value. (writer, seq) is globally unique for
 * non-bottom values; bottom encodes the initial symbol of an object and
 * carries no writer/seq. The object field is metadata and does not take
 * part in identity.
 */
struct ValueId {
  ClientId writer = -1;
  std::int64_t seq = 0;
  ObjectId object;
  bool bottom = false;

  static ValueId bot() {
    ValueId v;
    v.bottom = true;
    return v;
  }
  static ValueId make(ClientId writer, std::int64_t seq, ObjectId object) {
    ValueId v;
    v.writer = writer;
    v.seq = seq;
    v.object = std::move(object);
    return v;
  }

  friend bool operator==(const ValueId& a, const ValueId& b) {
    if (a.bottom || b.bottom) return a.bottom == b.bottom;
    return a.writer == b.writer && a.seq == b.seq;
  }
  friend std::strong_ordering operator<=>(const ValueId& a, const ValueId& b) {
    if (auto c = (a.bottom ? 0 : 1) <=> (b.bottom ? 0 : 1); c != 0) return c;
    if (a.bottom) return std::strong_ordering::equal;
    if (auto c = a.writer <=> b.writer; c != 0) return c;
    return a.seq <=> b.seq;
  }

  std::string str() const;
};

/// A transaction: read set plus write set. Either may be empty, not both.
struct Transaction {
  TxnId id = kNoTxn;
  ClientId client = -1;
  std::vector<ObjectId> reads;          // sorted, unique
  std::map<ObjectId, ValueId> writes;

  bool read_only() const { return writes.empty(); }
  bool write_only() const { return reads.empty(); }
  void normalize();  // sorts/dedupes reads, checks non-emptiness
};

enum class OpKind { TxnStart, TxnEnd, ReadReturn, WriteAck };

std::string to_string(OpKind k);
OpKind op_kind_from_string(const std::string& s);

/**
 * One record of a client-observable history: transaction start/end, a
 * read returning a value, or a write acknowledgment. Times are simulated
 * integer ticks. read-return and write-ack events lie strictly between
 * their transaction's start and end.
 */
struct OpEvent {
  OpKind kind = OpKind::TxnStart;
  TxnId txn = kNoTxn;
  ClientId client = -1;
  Tick time = 0;
  std::optional<ObjectId> object;
  std::optional<ValueId> value;  // read-return always; write-ack carries the written value
};

/// Reconstructed per-transaction view of a history.
struct TxnInfo {
  Transaction txn;
  Tick start = 0;
  Tick end = 0;
};

/**
 * A time-ordered list of OpEvents across all clients. Each client is
 * sequential: no two transactions of one client overlap in time.
 */
struct History {
  std::vector<OpEvent> events;

  // Throws SimError on any malformed structure (missing start/end,
  // events outside their transaction's window, overlapping client txns).
  void validate() const;

  std::vector<ClientId> clients() const;
  // Transactions in start-time order (all clients interleaved).
  std::vector<TxnInfo> transactions() const;
};

/// Transactions of client c in start-time order.
std::vector<Transaction> project_client(const History& h, ClientId c);

/**
 * The causality relation of the program-order/read-from kind over read
 * and write operation instances, with its transitive closure.
 */
struct CausalGraph {
  struct Op {
    TxnId txn = kNoTxn;
    ClientId client = -1;
    bool is_write = false;
    ObjectId object;
    ValueId value;
    Tick time = 0;
  };

  std::vector<Op> ops;
  // Base edges before closure, kept for inspection/tests.
  std::vector<std::pair<int, int>> program_edges;
  std::vector<std::pair<int, int>> read_from_edges;

  bool reaches(int a, int b) const {
    return (reach_[a][static_cast<std::size_t>(b) >> 6] >> (b & 63)) & 1u;
  }
  int size() const { return static_cast<int>(ops.size()); }

  // Internal: closure bitset rows, exposed for the builder.
  std::vector<std::vector<std::uint64_t>> reach_;
};

/**
 * Builds the least relation closed under program order, read-from and
 * transitivity over h's operation instances, as a closed graph.
 *
 * Throws DanglingRead if a non-bottom read value has no matching write,
 * and BudgetExceeded for histories over 2000 operations (the closure is
 * cubic and declared out of budget beyond that).
 */
CausalGraph causal_precedes(const History& h);

}  // namespace ccsim
