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
#include <optional>
#include <string>
#include <vector>

#include "ccsim/history.hpp"

namespace ccsim {

enum class Role { Client, Server };

struct ProcessId {
  Role role = Role::Client;
  int index = 0;

  static ProcessId client(int i) { return {Role::Client, i}; }
  static ProcessId server(int i) { return {Role::Server, i}; }
  std::string str() const {
    return (role == Role::Client ? "C" : "S") + std::to_string(index);
  }
  static ProcessId parse(const std::string& s);

  friend auto operator<=>(const ProcessId&, const ProcessId&) = default;
};

/// Per-object version order key: logical timestamp, tiebreak by writer id.
struct VersionKey {
  std::uint64_t lamport = 0;
  ClientId writer = -1;

  friend auto operator<=>(const VersionKey&, const VersionKey&) = default;
  std::string str() const {
    return std::to_string(lamport) + "." + std::to_string(writer);
  }
};

/// Reference to a version without its value (safe in responses).
struct DepRef {
  ObjectId object;
  VersionKey key;

  friend auto operator<=>(const DepRef&, const DepRef&) = default;
};

/// A value carried on the wire, with its version key and dep summary.
struct ValueItem {
  ObjectId object;
  ValueId value;
  VersionKey key;
  std::vector<DepRef> deps;

  friend bool operator==(const ValueItem&, const ValueItem&) = default;
};

// Payload kind names are fixed; the message log is analyzed by kind.
namespace kind {
inline constexpr const char* ROT_REQ = "ROT_REQ";
inline constexpr const char* ROT_RESP = "ROT_RESP";
inline constexpr const char* ROT_REQ2 = "ROT_REQ2";
inline constexpr const char* WRITE_PREPARE = "WRITE_PREPARE";
inline constexpr const char* WRITE_COMMIT = "WRITE_COMMIT";
inline constexpr const char* WRITE_ACK = "WRITE_ACK";
inline constexpr const char* D1_WRITE = "D1_WRITE";
inline constexpr const char* D1_WACK = "D1_WACK";
inline constexpr const char* D1_ROT_REQ = "D1_ROT_REQ";
inline constexpr const char* D1_ROT_RESP = "D1_ROT_RESP";
inline constexpr const char* VIS_REQ = "VIS_REQ";
inline constexpr const char* VIS_RESP = "VIS_RESP";
inline constexpr const char* D2_READ = "D2_READ";
inline constexpr const char* D2_WRITE = "D2_WRITE";
inline constexpr const char* D2_RESP = "D2_RESP";
}  // namespace kind

/**
 * Protocol-defined message body. One flat record shared by all shipped
 * protocols; unused fields stay at their defaults and are omitted from
 * serialization. Values (with their ValueIds) appear only in `values`,
 * which is what the one-version check inspects on responses.
 */
struct Payload {
  std::string kind;
  TxnId txn = kNoTxn;
  std::vector<ObjectId> objects;   // requested objects
  std::vector<ValueItem> values;   // returned / written values
  std::vector<DepRef> deps;        // dependency context (version refs)
  std::vector<TxnId> old_txns;     // old-transaction knowledge (VIS_RESP)
  ObjectId ref_object;             // dep target / refetch object
  VersionKey ref;                  // dep target key / commit or stamp key
  std::uint64_t clock = 0;         // sender's logical clock
  int round = 0;                   // sync round / phase marker
  bool flag = false;               // commit-now / committed-phase marker

  friend bool operator==(const Payload&, const Payload&) = default;
};

struct Message {
  std::int64_t id = 0;
  ProcessId src, dst;
  Tick sent_at = 0;
  Tick deliver_at = 0;
  Payload payload;
  // Global processing sequence at send time: index of the delivery (or
  // injection) being handled when this message was sent. Lets checkers
  // order sends against receives exactly.
  std::int64_t sent_seq = -1;
};

using MessageLog = std::vector<Message>;  // delivery order

/// Declarative message predicate for schedule overrides; all fields optional.
struct MessageMatch {
  std::optional<std::string> src, dst;  // "C3" / "S0"
  std::optional<std::string> kind;
  std::optional<TxnId> txn;
  std::optional<int> occurrence;  // 1-based n-th match of this override

  bool matches_fields(const Message& m) const {
    if (src && m.src.str() != *src) return false;
    if (dst && m.dst.str() != *dst) return false;
    if (kind && m.payload.kind != *kind) return false;
    if (txn && m.payload.txn != *txn) return false;
    return true;
  }
};

/// Forces a matched message's delivery tick, or parks it (HOLD).
struct DelayOverride {
  MessageMatch match;
  std::optional<Tick> deliver_at;  // empty => HOLD
  bool hold() const { return !deliver_at.has_value(); }
};

/// Releases held messages matching `match` at tick `at`.
struct ReleaseStep {
  MessageMatch match;
  Tick at = 0;
};

/**
 * Deterministic message timing: per-channel uniform delays derived from
 * the seed (adding a channel never perturbs the draws of other channels)
 * plus per-message overrides. Identical (seed, overrides, workload)
 * yields a bit-identical event sequence.
 */
struct Schedule {
  std::uint64_t seed = 1;
  Tick delay_min = 1;
  Tick delay_max = 1;
  std::vector<DelayOverride> overrides;  // first match wins
  std::vector<ReleaseStep> releases;
};

}  // namespace ccsim
