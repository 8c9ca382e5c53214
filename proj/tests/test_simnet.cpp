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

#include <set>

#include "ccsim/json_io.hpp"
#include "ccsim/simnet.hpp"
#include "ccsim/workload.hpp"
#include "helpers.hpp"

using namespace ccsim;
using namespace ccsim::testing;

namespace {

const ObjectId A{"o0"};
const ObjectId B{"o1"};

WorldConfig small_world(const std::string& protocol, int clients = 2, int servers = 2) {
  WorldConfig w;
  w.clients = clients;
  w.servers = servers;
  w.objects = {A, B};
  w.protocol = protocol;
  return w;
}

WorkloadItem single_write(ClientId c, TxnId id, const ObjectId& o, std::int64_t seq,
                          Tick not_before = 0) {
  WorkloadItem it;
  it.client = c;
  it.txn.id = id;
  it.txn.client = c;
  it.txn.writes[o] = ValueId::make(c, seq, o);
  it.not_before = not_before;
  return it;
}

}  // namespace

TEST_CASE("zero workload yields empty history and log") {
  RunResult r = run(small_world("naive-invisible"), Workload{}, Schedule{});
  CHECK(r.history.events.empty());
  CHECK(r.log.empty());
}

TEST_CASE("fixed unit delays: write ack lands two ticks after the request") {
  Workload w;
  w.items.push_back(single_write(0, 1, A, 1, 5));
  Schedule s;
  s.delay_min = s.delay_max = 1;
  RunResult r = run(small_world("naive-invisible"), w, s);
  Tick start = -1, ack = -1;
  for (const auto& e : r.history.events) {
    if (e.kind == OpKind::TxnStart) start = e.time;
    if (e.kind == OpKind::WriteAck) ack = e.time;
  }
  CHECK(start == 5);
  CHECK(ack == start + 2);
}

TEST_CASE("same seed gives byte-identical history and message log") {
  WorkloadSpec spec;
  spec.clients = 4;
  spec.servers = 3;
  spec.ops_per_client = 25;
  spec.write_ratio = 0.3;
  spec.seed = 12345;
  spec.delay_max = 5;
  auto a = run_workload(spec, "async-visible");
  auto b = run_workload(spec, "async-visible");
  CHECK(history_to_jsonl(a.result.history) == history_to_jsonl(b.result.history));
  CHECK(message_log_to_jsonl(a.result.log) == message_log_to_jsonl(b.result.log));
}

TEST_CASE("wide delay ranges reorder messages on a channel") {
  // With delays in [1,10] a later-sent message may deliver earlier;
  // at least one inversion must show up across 100 seeded runs.
  int inversions = 0;
  for (std::uint64_t seed = 1; seed <= 100 && inversions == 0; ++seed) {
    WorkloadSpec spec;
    spec.clients = 4;
    spec.servers = 3;
    spec.ops_per_client = 15;
    spec.write_ratio = 0.6;
    spec.seed = seed;
    spec.delay_min = 1;
    spec.delay_max = 10;
    spec.probe_phase = false;
    auto art = run_workload(spec, "async-visible");
    std::map<std::pair<std::string, std::string>, std::vector<const Message*>> chans;
    for (const auto& m : art.result.log)
      chans[{m.src.str(), m.dst.str()}].push_back(&m);
    // msgs are in delivery order: an inversion is an earlier-delivered
    // message that was sent later than one delivered after it.
    for (auto& [c, msgs] : chans)
      for (std::size_t i = 0; i < msgs.size(); ++i)
        for (std::size_t j = i + 1; j < msgs.size(); ++j)
          if (msgs[i]->sent_at > msgs[j]->sent_at &&
              msgs[i]->deliver_at < msgs[j]->deliver_at)
            ++inversions;
  }
  CHECK(inversions > 0);
}

TEST_CASE("channel accounting: every sent message is delivered exactly once") {
  WorkloadSpec spec;
  spec.clients = 3;
  spec.servers = 2;
  spec.ops_per_client = 20;
  spec.write_ratio = 0.4;
  spec.seed = 9;
  spec.delay_max = 7;
  auto art = run_workload(spec, "async-visible");
  std::set<std::int64_t> ids;
  std::int64_t max_id = 0;
  for (const auto& m : art.result.log) {
    CHECK(m.deliver_at > m.sent_at);
    CHECK(ids.insert(m.id).second);  // no duplicates
    max_id = std::max(max_id, m.id);
  }
  CHECK(static_cast<std::int64_t>(ids.size()) == max_id);  // no losses
}

TEST_CASE("deliveries are replayed in (deliver_at, id) order") {
  WorkloadSpec spec;
  spec.clients = 4;
  spec.servers = 3;
  spec.ops_per_client = 10;
  spec.write_ratio = 0.5;
  spec.seed = 31;
  spec.delay_max = 6;
  auto art = run_workload(spec, "slow-2round");
  for (std::size_t i = 1; i < art.result.log.size(); ++i) {
    const auto& p = art.result.log[i - 1];
    const auto& q = art.result.log[i];
    CHECK((p.deliver_at < q.deliver_at ||
           (p.deliver_at == q.deliver_at && p.id < q.id)));
  }
}

TEST_CASE("an unreleased HOLD is an error") {
  Workload w;
  w.items.push_back(single_write(0, 1, A, 1, 0));
  Schedule s;
  s.overrides.push_back({MessageMatch{std::nullopt, "S0", std::nullopt, std::nullopt,
                                      std::nullopt},
                         std::nullopt});
  CHECK_THROWS_AS(run(small_world("naive-invisible"), w, s), UnreleasedHold);
}

TEST_CASE("a released HOLD delivers and the run completes") {
  Workload w;
  w.items.push_back(single_write(0, 1, A, 1, 0));
  Schedule s;
  s.overrides.push_back({MessageMatch{"C0", "S0", std::nullopt, std::nullopt, 1},
                         std::nullopt});
  s.releases.push_back({MessageMatch{"C0", "S0", std::nullopt, std::nullopt,
                                     std::nullopt},
                        50});
  RunResult r = run(small_world("naive-invisible"), w, s);
  REQUIRE(r.log.size() == 2);
  CHECK(r.log[0].deliver_at == 50);
}

TEST_CASE("paired run with a never-sent probe has an empty diff") {
  Workload with;
  with.items.push_back(single_write(0, 1, A, 1, 0));
  Workload without = with;
  PairedResult pr = paired_run(small_world("naive-invisible", 3), with, without, 2,
                               Schedule{});
  CHECK(pr.diff.empty());
}

TEST_CASE("horizon violations surface as errors") {
  Workload w;
  w.items.push_back(single_write(0, 1, A, 1, 0));
  Schedule s;
  s.overrides.push_back({MessageMatch{"C0", "S0", std::nullopt, std::nullopt, 1},
                         Tick{500}});
  RunOptions opts;
  opts.horizon = 100;
  CHECK_THROWS_AS(run(small_world("naive-invisible"), w, s, opts), SimError);
}

TEST_CASE("restricted-model protocols reject generic transactions") {
  Workload w;
  WorkloadItem it;
  it.client = 0;
  it.txn.id = 1;
  it.txn.client = 0;
  it.txn.writes[A] = ValueId::make(0, 1, A);
  it.txn.writes[B] = ValueId::make(0, 2, B);
  w.items.push_back(it);
  CHECK_THROWS_AS(run(small_world("naive-invisible"), w, Schedule{}),
                  ProtocolShapeMismatch);
  CHECK_THROWS_AS(run(small_world("async-visible"), w, Schedule{}),
                  ProtocolShapeMismatch);
  CHECK_NOTHROW(run(small_world("slow-2round"), w, Schedule{}));
}

TEST_CASE("clock access is policed") {
  Workload w;
  w.items.push_back(single_write(0, 1, A, 1, 0));
  WorldConfig world = small_world("ts-global");
  world.allow_clock = false;
  CHECK_THROWS_AS(run(world, w, Schedule{}), ClockAccessDenied);
}

TEST_CASE("metrics reconcile with the message log") {
  WorkloadSpec spec;
  spec.clients = 3;
  spec.servers = 3;
  spec.ops_per_client = 20;
  spec.write_ratio = 0.3;
  spec.seed = 21;
  spec.delay_max = 4;
  for (const char* proto : {"async-visible", "slow-2round", "naive-invisible"}) {
    auto art = run_workload(spec, proto);
    CHECK(art.metrics.client_server_msgs + art.metrics.server_server_msgs ==
          static_cast<std::int64_t>(art.result.log.size()));
  }
}

TEST_CASE("identical spec and protocol give identical metrics") {
  WorkloadSpec spec;
  spec.clients = 3;
  spec.servers = 2;
  spec.ops_per_client = 15;
  spec.write_ratio = 0.25;
  spec.seed = 77;
  spec.delay_max = 6;
  auto a = run_workload(spec, "async-visible");
  auto b = run_workload(spec, "async-visible");
  CHECK(a.metrics.to_json() == b.metrics.to_json());
}

TEST_CASE("schedule JSON round trip") {
  Schedule s;
  s.seed = 99;
  s.delay_min = 2;
  s.delay_max = 8;
  s.overrides.push_back({MessageMatch{"C1", "S0", std::string("ROT_REQ"), 5, 2},
                         Tick{44}});
  s.overrides.push_back({MessageMatch{std::nullopt, "S1", std::nullopt, std::nullopt,
                                      std::nullopt},
                         std::nullopt});
  s.releases.push_back({MessageMatch{std::nullopt, "S1", std::nullopt, std::nullopt,
                                     std::nullopt},
                        120});
  Schedule back = schedule_from_json(schedule_to_json(s));
  CHECK(schedule_to_json(back) == schedule_to_json(s));
}
