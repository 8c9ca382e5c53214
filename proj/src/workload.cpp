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

#include "ccsim/workload.hpp"

#include <algorithm>
#include <set>

namespace ccsim {

using nlohmann::json;

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct Stream {
  std::uint64_t state;
  std::uint64_t next() { return state = mix64(state); }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  double unit() { return static_cast<double>(next() % 1000000) / 1000000.0; }
};

}  // namespace

std::vector<ObjectId> object_universe(int count) {
  std::vector<ObjectId> out;
  for (int i = 0; i < count; ++i) out.push_back(ObjectId{"o" + std::to_string(i)});
  return out;
}

WorldConfig world_for(const WorkloadSpec& spec, const std::string& protocol) {
  WorldConfig w;
  w.clients = spec.clients + (spec.probe_phase ? 1 : 0);
  w.servers = spec.servers;
  w.objects = object_universe(spec.objects);
  w.protocol = protocol;
  w.pconfig.u = spec.u;
  w.pconfig.sync_rounds = spec.sync_rounds;
  return w;
}

Workload generate_workload(const WorkloadSpec& spec) {
  if (spec.write_ratio <= 0 || spec.write_ratio >= 1)
    throw SimError("write_ratio must lie in (0,1)");
  if (spec.rot_size > spec.objects)
    throw SimError("rot_size exceeds the object count");
  Workload w;
  auto objects = object_universe(spec.objects);
  for (int c = 0; c < spec.clients; ++c) {
    Stream rng{mix64(spec.seed ^ mix64(static_cast<std::uint64_t>(c) + 17))};
    std::int64_t seq = 0;
    for (int i = 0; i < spec.ops_per_client; ++i) {
      WorkloadItem item;
      item.client = c;
      item.txn.id = static_cast<TxnId>(c) * 1000000 + i + 1;
      item.txn.client = c;
      if (rng.unit() < spec.write_ratio) {
        std::set<ObjectId> objs;
        while (static_cast<int>(objs.size()) < spec.write_txn_size)
          objs.insert(objects[rng.below(objects.size())]);
        for (const auto& o : objs)
          item.txn.writes[o] = ValueId::make(c, ++seq, o);
      } else {
        std::set<ObjectId> objs;
        while (static_cast<int>(objs.size()) < spec.rot_size)
          objs.insert(objects[rng.below(objects.size())]);
        item.txn.reads.assign(objs.begin(), objs.end());
      }
      w.items.push_back(std::move(item));
    }
  }
  if (spec.probe_phase) {
    ClientId probe = spec.clients;
    for (int i = 0; i < spec.objects; ++i) {
      WorkloadItem item;
      item.client = probe;
      item.txn.id = 90000000 + i;
      item.txn.client = probe;
      item.txn.reads = {objects[static_cast<std::size_t>(i)]};
      item.after_drain = true;
      w.items.push_back(std::move(item));
    }
  }
  return w;
}

History sample_sub_history(const History& h, ClientId c, int budget) {
  auto txns = h.transactions();
  std::map<TxnId, const TxnInfo*> by_id;
  for (const auto& t : txns) by_id[t.txn.id] = &t;

  // Which write txn produced each value.
  std::map<std::pair<ClientId, std::int64_t>, TxnId> writer_of;
  for (const auto& t : txns)
    for (const auto& [o, v] : t.txn.writes) writer_of[{v.writer, v.seq}] = t.txn.id;

  // Reads of each txn (from events, with values).
  std::map<TxnId, std::vector<ValueId>> read_values;
  for (const auto& e : h.events)
    if (e.kind == OpKind::ReadReturn && !e.value->bottom)
      read_values[e.txn].push_back(*e.value);

  std::vector<const TxnInfo*> client_txns;
  for (const auto& t : txns)
    if (t.txn.client == c) client_txns.push_back(&t);
  if (client_txns.empty()) return {};

  auto build = [&](std::size_t client_count) -> std::optional<std::set<TxnId>> {
    std::set<TxnId> sel;
    Tick cut = client_txns[client_count - 1]->end;
    for (std::size_t i = 0; i < client_count; ++i) sel.insert(client_txns[i]->txn.id);
    for (const auto& t : txns)
      if (!t.txn.writes.empty() && t.start <= cut) sel.insert(t.txn.id);
    // Close over read-from: every value read inside the sample must be
    // written inside the sample.
    bool grew = true;
    while (grew) {
      grew = false;
      for (TxnId id : std::vector<TxnId>(sel.begin(), sel.end())) {
        for (const auto& v : read_values[id]) {
          auto wit = writer_of.find({v.writer, v.seq});
          if (wit == writer_of.end())
            throw DanglingRead("sampled read of " + v.str() + " has no writer");
          if (!sel.count(wit->second)) {
            sel.insert(wit->second);
            grew = true;
          }
        }
      }
    }
    int writes = 0;
    std::map<ClientId, int> per_client;
    for (TxnId id : sel) {
      if (!by_id.at(id)->txn.writes.empty()) ++writes;
      ++per_client[by_id.at(id)->txn.client];
    }
    int max_client = 0;
    for (auto& [cc, n] : per_client) max_client = std::max(max_client, n);
    if (writes + max_client > budget) return std::nullopt;
    return sel;
  };

  std::optional<std::set<TxnId>> best;
  for (std::size_t n = 1; n <= client_txns.size(); ++n) {
    auto sel = build(n);
    if (!sel) break;
    best = std::move(sel);
  }
  if (!best) return {};

  History out;
  for (const auto& e : h.events)
    if (best->count(e.txn)) out.events.push_back(e);
  return out;
}

json Metrics::to_json() const {
  json hist = json::object();
  for (const auto& [r, n] : rot_rounds_hist) hist[std::to_string(r)] = n;
  json lag_hist = json::object();
  for (const auto& [lag, n] : visibility_lag_hist) lag_hist[std::to_string(lag)] = n;
  return json{{"rot_rounds_hist", hist},
              {"mean_rot_rounds", mean_rot_rounds},
              {"rots", rots},
              {"writes", writes},
              {"client_server_msgs", client_server_msgs},
              {"server_server_msgs", server_server_msgs},
              {"client_server_per_op", client_server_per_op},
              {"server_server_per_write", server_server_per_write},
              {"mean_visibility_lag", mean_visibility_lag},
              {"visibility_samples", visibility_samples},
              {"visibility_lag_hist", lag_hist},
              {"causal", causal.to_json()},
              {"causal_samples", causal_samples},
              {"causal_skipped", causal_skipped},
              {"progress", progress.to_json()}};
}

RunArtifacts run_workload(const WorkloadSpec& spec, const std::string& protocol) {
  RunArtifacts art;
  art.world = world_for(spec, protocol);
  art.workload = generate_workload(spec);
  art.schedule.seed = spec.seed;
  art.schedule.delay_min = spec.delay_min;
  art.schedule.delay_max = spec.delay_max;
  art.probe_client = spec.probe_phase ? spec.clients : -1;

  RunOptions opts;
  opts.horizon = spec.horizon;
  // Watch every written value at its server for visibility-lag metrics.
  for (const auto& item : art.workload.items)
    for (const auto& [o, v] : item.txn.writes) {
      Watch w;
      w.server = static_cast<int>(
          std::distance(art.world.objects.begin(),
                        std::find(art.world.objects.begin(), art.world.objects.end(), o)) %
          static_cast<std::size_t>(art.world.servers));
      w.object = o;
      w.value = v;
      opts.watches.push_back(std::move(w));
    }

  art.result = run(art.world, art.workload, art.schedule, opts);
  const History& h = art.result.history;
  const MessageLog& log = art.result.log;

  Metrics& m = art.metrics;
  std::map<TxnId, std::map<int, int>> to_server;
  for (const auto& msg : log) {
    bool cs = msg.src.role != msg.dst.role;
    if (cs)
      ++m.client_server_msgs;
    else
      ++m.server_server_msgs;
    if (msg.src.role == Role::Client && msg.dst.role == Role::Server &&
        msg.payload.txn != kNoTxn)
      ++to_server[msg.payload.txn][msg.dst.index];
  }

  std::int64_t rounds_total = 0;
  auto txns = h.transactions();
  for (const auto& t : txns) {
    if (t.txn.client == art.probe_client) continue;
    if (!t.txn.writes.empty()) {
      ++m.writes;
    } else if (!t.txn.reads.empty()) {
      ++m.rots;
      int rounds = 1;
      for (const auto& [s, n] : to_server[t.txn.id]) rounds = std::max(rounds, n);
      ++m.rot_rounds_hist[rounds];
      rounds_total += rounds;
    }
  }
  m.mean_rot_rounds = m.rots ? static_cast<double>(rounds_total) / static_cast<double>(m.rots) : 0;
  std::int64_t ops = m.rots + m.writes;
  m.client_server_per_op = ops ? static_cast<double>(m.client_server_msgs) / static_cast<double>(ops) : 0;
  m.server_server_per_write =
      m.writes ? static_cast<double>(m.server_server_msgs) / static_cast<double>(m.writes) : 0;

  // Visibility lag: write-ack tick to visibility flip at the value's server.
  std::map<std::pair<ClientId, std::int64_t>, Tick> ack_at;
  for (const auto& e : h.events)
    if (e.kind == OpKind::WriteAck && e.value)
      ack_at[{e.value->writer, e.value->seq}] = e.time;
  std::int64_t lag_total = 0;
  for (const auto& wr : art.result.watches) {
    if (!wr.visible_at) continue;
    auto it = ack_at.find({wr.watch.value.writer, wr.watch.value.seq});
    if (it == ack_at.end()) continue;
    Tick lag = std::max<Tick>(0, *wr.visible_at - it->second);
    lag_total += lag;
    ++m.visibility_lag_hist[lag];
    ++m.visibility_samples;
  }
  m.mean_visibility_lag =
      m.visibility_samples ? static_cast<double>(lag_total) / static_cast<double>(m.visibility_samples) : 0;

  // Causal serialization on budget-sized samples around every client.
  m.causal.checker = "causal";
  m.causal.pass = true;
  for (int c = 0; c < spec.clients; ++c) {
    History sub = sample_sub_history(h, c);
    if (sub.events.empty()) {
      ++m.causal_skipped;
      continue;
    }
    Verdict v = check_causal_serialization(sub);
    ++m.causal_samples;
    if (!v.pass) {
      m.causal = v;
      break;
    }
  }

  if (spec.probe_phase) {
    m.progress = check_progress(h, log, art.result.quiescence_tick);
  } else {
    m.progress.checker = "progress";
    m.progress.pass = true;
    m.progress.label = "skipped";
  }
  return art;
}

}  // namespace ccsim
