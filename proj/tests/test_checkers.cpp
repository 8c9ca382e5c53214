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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccsim/checkers.hpp"
#include "ccsim/json_io.hpp"
#include "ccsim/workload.hpp"
#include "helpers.hpp"

using namespace ccsim;
using namespace ccsim::testing;

namespace {

const ObjectId X{"X"};
const ObjectId Y{"Y"};

History load_fixture(const std::string& name) {
  return history_from_jsonl(read_file(std::string(CCSIM_SOURCE_DIR) +
                                      "/fixtures/" + name));
}

// Definition-2 clause validation of a concrete order, reused for witness
// re-validation.
bool order_satisfies_clauses(const History& h, const ClientOrder& co) {
  auto txns = oracle_txns(h);
  OracleCausality causality(h);
  std::map<TxnId, const OracleTxn*> by_id;
  for (const auto& t : txns) by_id[t.id] = &t;
  std::vector<const OracleTxn*> order;
  for (TxnId id : co.order) order.push_back(by_id.at(id));
  return oracle_order_ok(order, causality);
}

}  // namespace

TEST_CASE("empty history is causally serializable") {
  Verdict v = check_causal_serialization(History{});
  CHECK(v.pass);
}

TEST_CASE("the sole-write-transaction fixture is rejected with a witness") {
  History h = load_fixture("wot_mixed_read.jsonl");
  Verdict v = check_causal_serialization(h);
  CHECK_FALSE(v.pass);
  REQUIRE_FALSE(v.witness.is_null());
  CHECK(v.witness["kind"] == "unserializable");
  CHECK(v.witness["client"] == 2);
  // replayable: the oracle agrees on the same history
  CHECK_FALSE(oracle_serializable(h));
  // and the violating client is pinpointed
  CHECK_FALSE(oracle_client_serializable(h, 2));
  CHECK(oracle_client_serializable(h, 0));
}

TEST_CASE("the causally-ordered-singles fixture is rejected") {
  History h = load_fixture("chained_writes_mixed_read.jsonl");
  Verdict v = check_causal_serialization(h);
  CHECK_FALSE(v.pass);
  CHECK_FALSE(oracle_serializable(h));
}

TEST_CASE("checker agrees with the exhaustive oracle on random histories") {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    History h = random_valid_history(seed, 3, 2, 6);
    History m = mutate_history(h, seed * 31 + 7);
    for (const History* hist : {&h, &m}) {
      bool oracle = oracle_serializable(*hist);
      Verdict v = check_causal_serialization(*hist);
      CHECK(v.pass == oracle);
      ++checked;
    }
  }
  CHECK(checked == 120);
}

TEST_CASE("valid histories stay valid after deleting any read-only transaction") {
  for (std::uint64_t seed = 101; seed <= 120; ++seed) {
    History h = random_valid_history(seed, 3, 2, 6);
    REQUIRE(check_causal_serialization(h).pass);
    for (const auto& t : h.transactions()) {
      if (!t.txn.writes.empty()) continue;
      History reduced = without_txn(h, t.txn.id);
      CHECK(check_causal_serialization(reduced).pass);
    }
  }
}

TEST_CASE("a passing verdict carries per-client orders satisfying every clause") {
  for (std::uint64_t seed = 130; seed <= 145; ++seed) {
    History h = random_valid_history(seed, 3, 2, 6);
    Verdict v = check_causal_serialization(h);
    REQUIRE(v.pass);
    auto orders = serialization_witness(v);
    CHECK_FALSE(orders.empty());
    for (const auto& co : orders) CHECK(order_satisfies_clauses(h, co));
  }
}

TEST_CASE("serialization budget is enforced") {
  std::vector<TxnSpec> specs;
  for (int i = 0; i < 13; ++i)
    specs.push_back({1, i + 1, {}, {{X, ValueId::make(1, i + 1, X)}}});
  History h = make_history(specs);
  CHECK_THROWS_AS(check_causal_serialization(h), BudgetExceeded);
}

TEST_CASE("progress checker") {
  ValueId x1 = ValueId::make(0, 1, X), x2 = ValueId::make(1, 1, X);
  SUBCASE("no writes passes vacuously") {
    History h = make_history({{0, 1, {{X, ValueId::bot()}}, {}}});
    Verdict v = check_progress(h, {}, 0);
    CHECK(v.pass);
  }
  SUBCASE("a stale post-quiescence read fails with a witness") {
    History h = make_history({{0, 1, {}, {{X, x1}}},
                              {1, 2, {}, {{X, x2}}},
                              {2, 3, {{X, x1}}, {}}});
    // txn 3 starts at tick 8; quiescence just before it
    Verdict v = check_progress(h, {}, 7);
    CHECK_FALSE(v.pass);
    REQUIRE_FALSE(v.witness.is_null());
    CHECK(v.witness["reads"][0]["object"] == "X");
    CHECK(v.witness["reads"][0]["missing"] == x2.str());
  }
  SUBCASE("the maximal value passes") {
    History h = make_history({{0, 1, {}, {{X, x1}}},
                              {1, 2, {}, {{X, x2}}},
                              {2, 3, {{X, x2}}, {}}});
    Verdict v = check_progress(h, {}, 7);
    CHECK(v.pass);
  }
  SUBCASE("a written object without probe reads is a precondition violation") {
    History h = make_history({{0, 1, {}, {{X, x1}}}});
    CHECK_THROWS_AS(check_progress(h, {}, 5), NoProbeReads);
  }
}

TEST_CASE("fastness audit over real runs") {
  SUBCASE("single-object reads are fast under every protocol") {
    for (const auto& name : registered_protocols()) {
      WorldConfig world;
      world.clients = 2;
      world.servers = 2;
      world.objects = {X, Y};
      world.protocol = name;
      world.pconfig.u = name == "ts-global" ? 3 : 0;
      Workload w;
      WorkloadItem wr;
      wr.client = 0;
      wr.txn.id = 1;
      wr.txn.client = 0;
      wr.txn.writes[X] = ValueId::make(0, 1, X);
      w.items.push_back(wr);
      WorkloadItem rd;
      rd.client = 1;
      rd.txn.id = 2;
      rd.txn.client = 1;
      rd.txn.reads = {X};
      rd.not_before = 30;
      w.items.push_back(rd);
      RunResult r = run(world, w, Schedule{});
      Verdict v = audit_fastness(r.history, r.log, 2);
      CHECK(v.pass);
    }
  }
  SUBCASE("a hand-built extra round fails") {
    History h = make_history({{0, 1, {{X, ValueId::bot()}}, {}}});
    MessageLog log;
    Message m1;
    m1.id = 1;
    m1.src = ProcessId::client(0);
    m1.dst = ProcessId::server(0);
    m1.sent_at = 1;
    m1.deliver_at = 2;
    m1.payload.kind = kind::ROT_REQ;
    m1.payload.txn = 1;
    Message m2 = m1;
    m2.id = 2;
    m2.sent_at = 3;
    m2.deliver_at = 4;
    log.push_back(m1);
    log.push_back(m2);
    Verdict v = audit_fastness(h, log, 1);
    CHECK_FALSE(v.pass);
  }
}

TEST_CASE("visibility audit labels paired diffs") {
  StateDiff empty;
  Verdict inv = audit_visibility(empty);
  CHECK(inv.pass);
  CHECK(inv.label == "invisible-witnessed");
  StateDiff nonempty;
  nonempty.server_diffs.push_back({-1, 0, nlohmann::json{{"a", 1}},
                                   nlohmann::json{{"a", 2}}});
  Verdict vis = audit_visibility(nonempty);
  CHECK(vis.pass);
  CHECK(vis.label == "visible");
}

TEST_CASE("one-version check") {
  ValueId x1 = ValueId::make(0, 1, X);
  History h = make_history({{0, 1, {}, {{X, x1}}}, {1, 2, {{X, x1}}, {}}});
  std::map<ObjectId, int> placement{{X, 0}, {Y, 1}};

  auto response = [&](std::vector<ValueItem> values) {
    Message m;
    m.id = 1;
    m.src = ProcessId::server(0);
    m.dst = ProcessId::client(1);
    m.sent_at = 20;
    m.deliver_at = 21;
    m.payload.kind = kind::ROT_RESP;
    m.payload.txn = 2;
    m.payload.values = std::move(values);
    return m;
  };

  SUBCASE("well-formed responses pass") {
    MessageLog log{response({{X, x1, {1, 0}, {}}})};
    CHECK(check_one_version(h, log, 2, placement).pass);
  }
  SUBCASE("two versions of one object fail") {
    MessageLog log{response({{X, x1, {1, 0}, {}},
                             {X, ValueId::make(9, 9, X), {2, 9}, {}}})};
    CHECK_FALSE(check_one_version(h, log, 2, placement).pass);
  }
  SUBCASE("a version of an unread object fails") {
    MessageLog log{response({{X, x1, {1, 0}, {}},
                             {Y, ValueId::make(9, 8, Y), {2, 9}, {}}})};
    CHECK_FALSE(check_one_version(h, log, 2, placement).pass);
  }
  SUBCASE("a value for an object the server does not store fails") {
    History h2 = make_history(
        {{0, 1, {}, {{X, x1}}},
         {1, 2, {{X, x1}, {Y, ValueId::bot()}}, {}}});
    MessageLog log{response({{X, x1, {1, 0}, {}},
                             {Y, ValueId::make(9, 8, Y), {2, 9}, {}}})};
    CHECK_FALSE(check_one_version(h2, log, 2, placement).pass);
  }
  SUBCASE("every shipped protocol passes on a real read") {
    for (const auto& name : registered_protocols()) {
      WorldConfig world;
      world.clients = 2;
      world.servers = 2;
      world.objects = {X, Y};
      world.protocol = name;
      world.pconfig.u = name == "ts-global" ? 3 : 0;
      Workload w;
      WorkloadItem wr;
      wr.client = 0;
      wr.txn.id = 1;
      wr.txn.client = 0;
      wr.txn.writes[X] = ValueId::make(0, 1, X);
      w.items.push_back(wr);
      WorkloadItem rd;
      rd.client = 1;
      rd.txn.id = 2;
      rd.txn.client = 1;
      rd.txn.reads = {X, Y};
      rd.not_before = 30;
      w.items.push_back(rd);
      RunResult r = run(world, w, Schedule{});
      std::map<ObjectId, int> pl{{X, 0}, {Y, 1}};
      CHECK(check_one_version(r.history, r.log, 2, pl).pass);
    }
  }
}
