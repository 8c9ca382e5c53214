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

#include "ccsim/adversary.hpp"

#include <algorithm>

namespace ccsim {

using nlohmann::json;

namespace {

const ObjectId kX{"X"};
const ObjectId kY{"Y"};

// Fixed transaction ids used by both scenarios.
constexpr TxnId kInitX = 1, kInitY = 2, kWotX = 3, kWotY = 4, kWot = 5;
constexpr TxnId kMainRot = 10, kFinalRot = 11;
constexpr TxnId kStraddleBase = 100, kViolation = 200, kLateProbe = 300;

WorkloadItem write_item(ClientId c, TxnId id, const ObjectId& o, std::int64_t seq,
                        Tick not_before) {
  WorkloadItem it;
  it.client = c;
  it.txn.id = id;
  it.txn.client = c;
  it.txn.writes[o] = ValueId::make(c, seq, o);
  it.not_before = not_before;
  return it;
}

WorkloadItem rot_item(ClientId c, TxnId id, std::vector<ObjectId> objs, Tick not_before) {
  WorkloadItem it;
  it.client = c;
  it.txn.id = id;
  it.txn.client = c;
  it.txn.reads = std::move(objs);
  it.not_before = not_before;
  return it;
}

Workload without_client(const Workload& w, ClientId c) {
  Workload out;
  for (const auto& item : w.items)
    if (item.client != c) out.items.push_back(item);
  return out;
}

std::map<ObjectId, ValueId> last_writes(const History& h) {
  std::map<ObjectId, std::pair<VersionKey, ValueId>> best;  // key: (start,id) order
  std::map<ObjectId, ValueId> out;
  for (const auto& t : h.transactions())
    for (const auto& [o, v] : t.txn.writes) {
      VersionKey k{static_cast<std::uint64_t>(t.start), static_cast<int>(t.txn.id)};
      auto it = best.find(o);
      if (it == best.end() || it->second.first < k) best[o] = {k, v};
    }
  for (auto& [o, kv] : best) out[o] = kv.second;
  return out;
}

std::map<ObjectId, ValueId> returned_values(const History& h, TxnId txn) {
  std::map<ObjectId, ValueId> out;
  for (const auto& e : h.events)
    if (e.txn == txn && e.kind == OpKind::ReadReturn) out[*e.object] = *e.value;
  return out;
}

bool matches_expected(const json& expected, const ScenarioReport& r) {
  if (expected.is_null()) return true;
  if (expected.contains("fast") && expected["fast"].get<bool>() != r.fast) return false;
  if (expected.contains("visible") && expected["visible"].get<bool>() != r.visible)
    return false;
  if (expected.contains("consistent") &&
      expected["consistent"].get<bool>() != r.consistent)
    return false;
  if (expected.contains("progress") && expected["progress"].get<bool>() != r.progress)
    return false;
  return true;
}

json expectation_for(const std::string& scenario, const std::string& protocol) {
  if (scenario == "e12") {
    if (protocol == "naive-invisible")
      return {{"fast", true}, {"visible", false}, {"consistent", false}};
    if (protocol == "async-visible")
      return {{"fast", true}, {"visible", true}, {"consistent", true}};
    if (protocol == "ts-global")
      return {{"fast", true}, {"visible", false}, {"consistent", true}};
    if (protocol == "slow-2round") return {{"fast", false}, {"consistent", true}};
    if (protocol == "fast-visible")
      return {{"fast", true}, {"visible", false}, {"consistent", false}};
  } else if (scenario == "eimp") {
    if (protocol == "fast-visible")
      return {{"fast", true}, {"consistent", false}, {"progress", false}};
    if (protocol == "slow-2round")
      return {{"fast", false}, {"consistent", true}, {"progress", true}};
    if (protocol == "ts-global")
      return {{"fast", true}, {"consistent", true}, {"progress", true}};
  }
  return json();
}

}  // namespace

json ScenarioReport::to_json() const {
  json j{{"scenario", scenario},
         {"protocol", protocol},
         {"fast", fast},
         {"visible", visible},
         {"consistent", consistent},
         {"progress", progress},
         {"placements", placements},
         {"stale_placements", stale_placements},
         {"violating_placements", violating_placements},
         {"required_messages", required_messages},
         {"expected_match", expected_match}};
  if (!note.empty()) j["note"] = note;
  if (!witness.is_null()) j["witness"] = witness;
  return j;
}

// ---------------------------------------------------------------------------
// e12: prefix writes of X and Y, a probe ROT whose X-request lands before
// the new writes and whose Y-request is held until just after y is
// visible, then a late ROT that sees both new values.
// ---------------------------------------------------------------------------

Scenario scenario_e12(const std::string& protocol, ProtocolConfig cfg) {
  Scenario s;
  s.name = "e12";
  s.world.clients = 3;  // 0: init, 1: writer, 2: probe
  s.world.servers = 2;
  s.world.objects = {kX, kY};
  s.world.protocol = protocol;
  s.world.pconfig = cfg;
  s.probe_client = 2;
  s.main_rot = kMainRot;
  s.final_rot = kFinalRot;
  s.expected = expectation_for("e12", protocol);

  constexpr Tick t0 = 40, kT1 = 50, kWriteAt = 70;

  Workload base;
  base.items.push_back(write_item(0, kInitX, kX, 1, 0));
  base.items.push_back(write_item(0, kInitY, kY, 2, 0));
  base.items.push_back(write_item(1, kWotX, kX, 1, kWriteAt));
  base.items.push_back(write_item(1, kWotY, kY, 2, 0));  // closed loop after w(X)x

  Schedule ref_sched;
  ref_sched.seed = 777;
  ref_sched.delay_min = 1;
  ref_sched.delay_max = 3;

  // Reference run without the probe: detect when x and y flip visible.
  RunOptions ref_opts;
  ref_opts.watches.push_back({0, kX, ValueId::make(1, 1, kX)});
  ref_opts.watches.push_back({1, kY, ValueId::make(1, 2, kY)});
  RunResult ref = run(s.world, base, ref_sched, ref_opts);
  if (!ref.watches[0].visible_at || !ref.watches[1].visible_at)
    throw SimError("e12 reference run: writes never became visible");
  Tick tau_x = *ref.watches[0].visible_at;
  Tick tau_y = *ref.watches[1].visible_at;

  s.workload = base;
  s.workload.items.push_back(rot_item(2, kMainRot, {kX, kY}, t0));
  s.workload.items.push_back(
      rot_item(2, kFinalRot, {kX, kY}, std::max(tau_x, tau_y) + 20));

  s.schedule = ref_sched;
  // Probe request to P_X arrives at T1; the one to P_Y is held until the
  // first tick after y is visible.
  s.schedule.overrides.push_back(
      {MessageMatch{"C2", "S0", std::nullopt, std::nullopt, 1}, kT1});
  s.schedule.overrides.push_back(
      {MessageMatch{"C2", "S1", std::nullopt, std::nullopt, 1}, std::nullopt});
  s.schedule.releases.push_back(
      {MessageMatch{"C2", "S1", std::nullopt, std::nullopt, std::nullopt}, tau_y + 1});
  s.progress_budget = std::max(tau_x, tau_y);
  return s;
}

// ---------------------------------------------------------------------------
// eimp at bounded k: a two-object write-only transaction whose visibility
// needs k inter-server exchanges; probes straddle each exchange; the k-th
// exchange is held past the progress budget.
// ---------------------------------------------------------------------------

Scenario scenario_eimp(int k, const std::string& protocol, ProtocolConfig cfg) {
  if (k < 1) throw SimError("scenario_eimp needs k >= 1");
  auto proto = find_protocol(protocol);
  cfg.sync_rounds = k;
  if (!proto->supports_generic(cfg))
    throw ProtocolShapeMismatch("scenario_eimp needs generic write transactions; '" +
                                protocol + "' is restricted-model");

  Scenario s;
  s.name = "eimp";
  s.world.servers = 2;
  s.world.objects = {kX, kY};
  s.world.protocol = protocol;
  s.world.pconfig = cfg;
  s.expected = expectation_for("eimp", protocol);

  constexpr Tick t_w = 40;
  const ClientId first_probe = 2;
  const ClientId violation_client = first_probe + k;
  const ClientId late_client = violation_client + 1;
  const ClientId final_client = late_client + 1;
  s.world.clients = final_client + 1;

  Workload base;
  base.items.push_back(write_item(0, kInitX, kX, 1, 0));
  base.items.push_back(write_item(0, kInitY, kY, 2, 0));
  WorkloadItem wot;
  wot.client = 1;
  wot.txn.id = kWot;
  wot.txn.client = 1;
  wot.txn.writes[kX] = ValueId::make(1, 1, kX);
  wot.txn.writes[kY] = ValueId::make(1, 2, kY);
  wot.not_before = t_w;
  base.items.push_back(wot);

  Schedule ref_sched;
  ref_sched.seed = 4242;
  ref_sched.delay_min = 1;
  ref_sched.delay_max = 3;

  RunOptions ref_opts;
  ref_opts.watches.push_back({0, kX, ValueId::make(1, 1, kX)});
  ref_opts.watches.push_back({1, kY, ValueId::make(1, 2, kY)});
  RunResult ref = run(s.world, base, ref_sched, ref_opts);

  // Boundary ticks: inter-server deliveries of the WOT's visibility
  // machinery when it has one, commit-style deliveries otherwise.
  struct Boundary {
    Tick at;
    int dst;
  };
  std::vector<Boundary> boundaries;
  for (const auto& m : ref.log) {
    if (m.deliver_at <= t_w) continue;
    if (m.payload.kind == kind::VIS_REQ && m.dst.role == Role::Server)
      boundaries.push_back({m.deliver_at, m.dst.index});
  }
  if (boundaries.empty()) {
    for (const auto& m : ref.log) {
      if (m.deliver_at <= t_w || m.dst.role != Role::Server) continue;
      if (m.payload.kind == kind::WRITE_COMMIT || m.payload.kind == kind::D2_WRITE)
        boundaries.push_back({m.deliver_at, m.dst.index});
    }
  }
  if (boundaries.empty()) throw SimError("eimp: no boundary deliveries found");
  std::sort(boundaries.begin(), boundaries.end(),
            [](const Boundary& a, const Boundary& b) { return a.at < b.at; });

  Tick last_visible = std::max(ref.watches[0].visible_at.value_or(ref.end_tick),
                               ref.watches[1].visible_at.value_or(ref.end_tick));
  const Tick budget = std::max(last_visible, boundaries.back().at) + 20;
  s.progress_budget = budget;

  s.workload = base;
  s.schedule = ref_sched;

  // Straddle probes: one fresh client per placement, request arriving at
  // the boundary's server one tick before the exchange lands and at the
  // other server one tick after.
  for (int j = 0; j < k; ++j) {
    const Boundary& b = boundaries[std::min<std::size_t>(j, boundaries.size() - 1)];
    ClientId c = first_probe + j;
    TxnId id = kStraddleBase + j;
    s.workload.items.push_back(rot_item(c, id, {kX, kY}, t_w));
    s.straddle_probes.push_back(id);
    std::string cs = "C" + std::to_string(c);
    s.schedule.overrides.push_back(
        {MessageMatch{cs, "S" + std::to_string(b.dst), std::nullopt, std::nullopt, 1},
         b.at - 1});
    s.schedule.overrides.push_back(
        {MessageMatch{cs, "S" + std::to_string(1 - b.dst), std::nullopt, std::nullopt, 1},
         b.at + 1});
  }

  // Hold the k-th inter-server exchange past the budget and pin the
  // response after it, so visibility splits across a known window.
  s.schedule.overrides.push_back(
      {MessageMatch{"S0", "S1", std::string(kind::VIS_REQ), std::nullopt, k},
       std::nullopt});
  s.schedule.releases.push_back(
      {MessageMatch{"S0", "S1", std::string(kind::VIS_REQ), std::nullopt, std::nullopt},
       budget + 20});
  s.schedule.overrides.push_back(
      {MessageMatch{"S1", "S0", std::string(kind::VIS_RESP), std::nullopt, k},
       budget + 30});

  // One probe placed across the split-visibility window (y is visible at
  // P_Y from budget+20, x not before budget+30), followed by a fresh ROT
  // by the same client once everything is visible. The pair of returns
  // is what defeats any serialization of that client's history.
  s.workload.items.push_back(rot_item(violation_client, kViolation, {kX, kY}, t_w));
  s.workload.items.push_back(
      rot_item(violation_client, kViolation + 1, {kX, kY}, budget + 60));
  s.violation_probe = kViolation;
  {
    std::string cs = "C" + std::to_string(violation_client);
    s.schedule.overrides.push_back(
        {MessageMatch{cs, "S0", std::nullopt, std::nullopt, 1}, budget + 25});
    s.schedule.overrides.push_back(
        {MessageMatch{cs, "S1", std::nullopt, std::nullopt, 1}, budget + 25});
  }

  // Stale-forever evidence: a probe right after the budget, and a final
  // reader once everything has drained.
  s.workload.items.push_back(rot_item(late_client, kLateProbe, {kX, kY}, budget + 1));
  s.workload.items.push_back(rot_item(final_client, kFinalRot, {kX, kY}, budget + 60));
  s.final_rot = kFinalRot;
  return s;
}

// ---------------------------------------------------------------------------

ScenarioReport run_scenario(const Scenario& s) {
  ScenarioReport r;
  r.scenario = s.name;
  r.protocol = s.world.protocol;

  RunOptions opts;
  RunResult res;
  StateDiff diff;
  if (s.probe_client >= 0) {
    Workload without = without_client(s.workload, s.probe_client);
    PairedResult pr =
        paired_run(s.world, s.workload, without, s.probe_client, s.schedule, opts);
    res = std::move(pr.with_probe);
    diff = std::move(pr.diff);
    Verdict vis = audit_visibility(diff);
    r.visible = vis.label == "visible";
  } else {
    res = run(s.world, s.workload, s.schedule, opts);
  }

  const History& h = res.history;
  const MessageLog& log = res.log;
  auto proto = find_protocol(s.world.protocol);

  // Fastness of every probe ROT.
  std::vector<TxnId> audited;
  if (s.main_rot) audited.push_back(*s.main_rot);
  audited.insert(audited.end(), s.straddle_probes.begin(), s.straddle_probes.end());
  if (s.violation_probe) audited.push_back(*s.violation_probe);
  r.fast = !audited.empty();
  json slow = json::array();
  for (TxnId t : audited) {
    Verdict v = audit_fastness(h, log, t);
    if (!v.pass) {
      r.fast = false;
      slow.push_back(v.witness);
    }
  }

  Verdict causal = check_causal_serialization(h);
  r.consistent = causal.pass;
  if (!causal.pass) r.witness = causal.witness;
  if (!slow.empty() && r.witness.is_null()) r.witness = json{{"not_fast", slow}};

  // Probe placements: stale (neither new value), violating (a mix), or
  // fresh (both new values).
  auto last = last_writes(h);
  auto classify = [&](TxnId id) {
    auto got = returned_values(h, id);
    int fresh = 0, total = 0;
    for (const auto& [o, v] : got) {
      auto it = last.find(o);
      if (it == last.end()) continue;
      ++total;
      if (v == it->second) ++fresh;
    }
    if (total == 0) return std::string("fresh");
    if (fresh == 0) return std::string("stale");
    if (fresh == total) return std::string("fresh");
    return std::string("mixed");
  };
  for (TxnId id : s.straddle_probes) {
    ++r.placements;
    auto c = classify(id);
    if (c == "stale") ++r.stale_placements;
    if (c == "mixed") ++r.violating_placements;
  }
  if (s.violation_probe) {
    ++r.placements;
    auto c = classify(*s.violation_probe);
    if (c == "stale") ++r.stale_placements;
    if (c == "mixed") ++r.violating_placements;
  }

  // Progress: the scripted scenarios either carry a budget with probes
  // placed after it (eimp) or a final ROT that must see the last writes.
  if (s.name == "eimp") {
    Verdict prog = check_progress(h, log, s.progress_budget);
    r.progress = prog.pass;
    if (!prog.pass && r.witness.is_null()) r.witness = prog.witness;
  } else if (s.final_rot) {
    auto got = returned_values(h, *s.final_rot);
    r.progress = !got.empty();
    for (const auto& [o, v] : got) {
      auto it = last.find(o);
      if (it != last.end() && !(v == it->second)) r.progress = false;
    }
  }

  for (const auto& m : log)
    if (m.src.role == Role::Server && m.dst.role == Role::Server && m.sent_at >= 40)
      ++r.required_messages;

  if (proto->clock_access())
    r.note = "circumvention-global-clock";
  else if (!r.fast)
    r.note = "escapes-by-slowness";

  r.expected_match = matches_expected(s.expected, r);
  return r;
}

}  // namespace ccsim
