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
#include <string>
#include <vector>

#include <json.hpp>

#include "ccsim/history.hpp"
#include "ccsim/simnet.hpp"
#include "ccsim/wire.hpp"

namespace ccsim {

/**
 * Checker output: pass, or a structured counterexample. On a passing
 * serialization check the witness carries the found per-client orders so
 * they can be re-validated clause by clause.
 */
struct Verdict {
  std::string checker;
  bool pass = false;
  std::string label;        // secondary classification (e.g. visibility)
  nlohmann::json witness;   // counterexample on fail, serializations on pass

  nlohmann::json to_json() const;
};

/**
 * Transactional causal serialization: for every client, searches for a
 * total order of all write-containing transactions plus that client's
 * transactions satisfying (1) every non-bottom read returns the last
 * preceding write of its object, (2) bottom reads have no preceding
 * write, (3) the causality relation is respected.
 *
 * Budget: |write-containing txns| + max per-client |txns| must be <= 12,
 * else BudgetExceeded. DanglingRead propagates from the causality build.
 */
Verdict check_causal_serialization(const History& h);

/// Serialization order found for one client (pass witness).
struct ClientOrder {
  ClientId client = -1;
  std::vector<TxnId> order;
};
std::vector<ClientOrder> serialization_witness(const Verdict& v);

/**
 * Finite-run progress (eventual visibility): every read that starts
 * after `quiescence` must return, per object, a value whose write
 * returned no earlier than the start of any other write of that object.
 * Throws NoProbeReads if some written object has no post-quiescence
 * read. This is a finite-run approximation: a protocol that is live only
 * because injection stopped will pass.
 */
Verdict check_progress(const History& h, const MessageLog& log, Tick quiescence);

/**
 * Fastness of one transaction in one execution: per involved server at
 * most one client-to-server and one server-to-client message during the
 * transaction, and no server-origin message received by an involved
 * server between its receipt of the client's request and its response.
 */
Verdict audit_fastness(const History& h, const MessageLog& log, TxnId txn);

/**
 * Classifies a paired-run diff: "visible" when the diff is non-empty
 * beyond the probe client's own exchange, "invisible-witnessed" when
 * empty (a witness for one schedule only; invisibility is existential).
 */
Verdict audit_visibility(const StateDiff& diff);

/**
 * Operational one-version check for a read-containing transaction: each
 * server response for the transaction carries exactly one value per read
 * object that server stores and none for any other object, and the
 * transaction's result has exactly one value per read object.
 */
Verdict check_one_version(const History& h, const MessageLog& log, TxnId txn,
                          const std::map<ObjectId, int>& placement);

}  // namespace ccsim
