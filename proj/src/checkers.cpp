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

#include "ccsim/checkers.hpp"

#include <algorithm>
#include <set>

namespace ccsim {

using nlohmann::json;

json Verdict::to_json() const {
  json j{{"checker", checker}, {"pass", pass}};
  if (!label.empty()) j["label"] = label;
  if (!witness.is_null()) j["witness"] = witness;
  return j;
}

namespace {

struct TxnNode {
  TxnId id;
  ClientId client;
  std::vector<std::pair<ObjectId, ValueId>> reads;  // in program order
  std::map<ObjectId, ValueId> writes;
  bool has_write() const { return !writes.empty(); }
};

struct SerializationProblem {
  std::vector<TxnNode> txns;                 // the ordered set
  std::vector<std::vector<bool>> precedes;   // txn-level causality
};

// Backtracking search over linear extensions with fail-fast read checks.
// `order` receives txn indexes on success.
bool search(const SerializationProblem& prob, std::vector<int>& order) {
  const int n = static_cast<int>(prob.txns.size());
  std::vector<bool> placed(n, false);
  std::map<ObjectId, std::vector<ValueId>> write_stack;
  order.clear();

  std::vector<int> pred_count(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (prob.precedes[i][j]) ++pred_count[j];

  struct Frame {
    int chosen = -1;
    std::vector<ObjectId> pushed;
  };
  std::vector<Frame> stack;

  auto admissible = [&](int t) {
    if (placed[t] || pred_count[t] > 0) return false;
    for (const auto& [o, v] : prob.txns[t].reads) {
      auto it = write_stack.find(o);
      bool has_prior = it != write_stack.end() && !it->second.empty();
      if (v.bottom) {
        if (has_prior) return false;
      } else {
        if (!has_prior || !(it->second.back() == v)) return false;
      }
    }
    return true;
  };

  auto place = [&](int t) {
    Frame f;
    f.chosen = t;
    placed[t] = true;
    for (int j = 0; j < n; ++j)
      if (prob.precedes[t][j]) --pred_count[j];
    for (const auto& [o, v] : prob.txns[t].writes) {
      write_stack[o].push_back(v);
      f.pushed.push_back(o);
    }
    order.push_back(t);
    stack.push_back(std::move(f));
  };

  auto unplace = [&]() {
    Frame f = std::move(stack.back());
    stack.pop_back();
    order.pop_back();
    placed[f.chosen] = false;
    for (int j = 0; j < n; ++j)
      if (prob.precedes[f.chosen][j]) ++pred_count[j];
    for (const auto& o : f.pushed) write_stack[o].pop_back();
    return f.chosen;
  };

  // Iterative depth-first search; `next_try[depth]` is the next candidate.
  std::vector<int> next_try(static_cast<std::size_t>(n) + 1, 0);
  int depth = 0;
  while (true) {
    if (depth == n) return true;
    bool advanced = false;
    for (int t = next_try[depth]; t < n; ++t) {
      if (!admissible(t)) continue;
      next_try[depth] = t + 1;
      place(t);
      ++depth;
      next_try[depth] = 0;
      advanced = true;
      break;
    }
    if (advanced) continue;
    if (depth == 0) return false;
    --depth;
    unplace();
  }
}

std::vector<TxnNode> build_txn_nodes(const History& h) {
  std::map<TxnId, TxnNode> by_id;
  std::map<TxnId, Tick> start;
  for (const auto& e : h.events) {
    auto& t = by_id[e.txn];
    t.id = e.txn;
    t.client = e.client;
    switch (e.kind) {
      case OpKind::TxnStart:
        start[e.txn] = e.time;
        break;
      case OpKind::ReadReturn:
        t.reads.push_back({*e.object, e.value.value_or(ValueId::bot())});
        break;
      case OpKind::WriteAck:
        t.writes[*e.object] = e.value.value_or(ValueId::bot());
        break;
      default:
        break;
    }
  }
  std::vector<TxnNode> out;
  for (auto& [id, t] : by_id) out.push_back(std::move(t));
  std::sort(out.begin(), out.end(), [&](const TxnNode& a, const TxnNode& b) {
    if (start[a.id] != start[b.id]) return start[a.id] < start[b.id];
    return a.id < b.id;
  });
  return out;
}

}  // namespace

Verdict check_causal_serialization(const History& h) {
  Verdict v;
  v.checker = "causal";

  CausalGraph g = causal_precedes(h);
  std::vector<TxnNode> all = build_txn_nodes(h);

  std::map<ClientId, int> per_client;
  int write_txns = 0;
  for (const auto& t : all) {
    if (t.has_write()) ++write_txns;
    ++per_client[t.client];
  }
  int max_client = 0;
  for (auto& [c, n] : per_client) max_client = std::max(max_client, n);
  if (write_txns + max_client > 12)
    throw BudgetExceeded("causal serialization: " + std::to_string(write_txns) +
                         " write txns + " + std::to_string(max_client) +
                         " client txns exceeds budget 12");

  // Txn-level causality from the op-level closure.
  std::map<TxnId, std::vector<int>> ops_of;
  for (int i = 0; i < g.size(); ++i) ops_of[g.ops[i].txn].push_back(i);
  auto txn_precedes = [&](TxnId a, TxnId b) {
    for (int i : ops_of[a])
      for (int j : ops_of[b])
        if (g.reaches(i, j)) return true;
    return false;
  };

  json orders = json::array();
  for (ClientId c : h.clients()) {
    SerializationProblem prob;
    for (const auto& t : all)
      if (t.has_write() || t.client == c) prob.txns.push_back(t);
    const int n = static_cast<int>(prob.txns.size());
    prob.precedes.assign(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && txn_precedes(prob.txns[i].id, prob.txns[j].id))
          prob.precedes[i][j] = true;

    std::vector<int> order;
    if (!search(prob, order)) {
      v.pass = false;
      json txns = json::array();
      for (const auto& t : prob.txns) txns.push_back(t.id);
      json reads = json::array();
      for (const auto& t : prob.txns)
        if (t.client == c)
          for (const auto& [o, val] : t.reads)
            reads.push_back({{"txn", t.id}, {"object", o.name}, {"value", val.str()}});
      v.witness = json{{"kind", "unserializable"},
                       {"client", c},
                       {"txns", txns},
                       {"client_reads", reads}};
      return v;
    }
    json jorder = json::array();
    for (int t : order) jorder.push_back(prob.txns[t].id);
    orders.push_back(json{{"client", c}, {"order", jorder}});
  }
  v.pass = true;
  v.witness = json{{"kind", "serializations"}, {"orders", orders}};
  return v;
}

std::vector<ClientOrder> serialization_witness(const Verdict& v) {
  std::vector<ClientOrder> out;
  if (!v.pass || v.witness.is_null()) return out;
  for (const auto& jo : v.witness.at("orders")) {
    ClientOrder co;
    co.client = jo.at("client").get<ClientId>();
    for (const auto& t : jo.at("order")) co.order.push_back(t.get<TxnId>());
    out.push_back(std::move(co));
  }
  return out;
}

Verdict check_progress(const History& h, const MessageLog& log, Tick quiescence) {
  (void)log;
  Verdict v;
  v.checker = "progress";
  h.validate();

  auto txns = h.transactions();
  struct WriteInfo {
    ValueId value;
    Tick start, end;
    TxnId txn;
  };
  std::map<ObjectId, std::vector<WriteInfo>> writes;
  for (const auto& t : txns)
    for (const auto& [o, val] : t.txn.writes)
      writes[o].push_back({val, t.start, t.end, t.txn.id});

  // Post-quiescence reads per object, with the returned value.
  std::map<ObjectId, bool> probed;
  json stale = json::array();
  for (const auto& t : txns) {
    if (t.start <= quiescence || t.txn.reads.empty()) continue;
    std::map<ObjectId, ValueId> returned;
    for (const auto& e : h.events)
      if (e.txn == t.txn.id && e.kind == OpKind::ReadReturn)
        returned[*e.object] = *e.value;
    for (const auto& [o, got] : returned) {
      auto wit = writes.find(o);
      if (wit == writes.end()) continue;  // never written: nothing to check
      probed[o] = true;
      // The returned value's write must have returned no earlier than the
      // start of every other write of this object.
      Tick got_end = -1;
      bool got_is_write = false;
      for (const auto& w : wit->second)
        if (w.value == got) {
          got_end = w.end;
          got_is_write = true;
        }
      for (const auto& w : wit->second) {
        if (got_is_write && w.value == got) continue;
        if (!got_is_write || got_end < w.start) {
          stale.push_back(json{{"object", o.name},
                               {"returned", got.str()},
                               {"missing", w.value.str()},
                               {"probe_txn", t.txn.id},
                               {"probe_start", t.start}});
        }
      }
    }
  }
  for (const auto& [o, ws] : writes)
    if (!probed.count(o))
      throw NoProbeReads("object '" + o.name + "' was written but has no read after tick " +
                         std::to_string(quiescence));

  v.pass = stale.empty();
  if (!v.pass) v.witness = json{{"kind", "stale"}, {"reads", stale}};
  return v;
}

Verdict audit_fastness(const History& h, const MessageLog& log, TxnId txn) {
  Verdict v;
  v.checker = "fastness";

  ClientId client = -1;
  Tick end = -1;
  for (const auto& e : h.events) {
    if (e.txn != txn) continue;
    client = e.client;
    if (e.kind == OpKind::TxnEnd) end = e.time;
  }
  if (client == -1) throw SimError("audit_fastness: no such transaction");
  if (end < 0) end = std::numeric_limits<Tick>::max();

  // Client<->server message counts for the transaction, plus each
  // involved server's request-delivery position and response-send position
  // in the global processing sequence.
  std::map<int, int> to_server, from_server;
  std::map<int, std::int64_t> req_seq, resp_seq;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Message& m = log[i];
    if (m.payload.txn != txn) continue;
    if (m.src == ProcessId::client(client) && m.dst.role == Role::Server) {
      ++to_server[m.dst.index];
      auto it = req_seq.find(m.dst.index);
      if (it == req_seq.end()) req_seq[m.dst.index] = static_cast<std::int64_t>(i);
    } else if (m.dst == ProcessId::client(client) && m.src.role == Role::Server) {
      ++from_server[m.src.index];
      resp_seq[m.src.index] = m.sent_seq;
    }
  }

  json offending = json::array();
  for (auto& [s, n] : to_server)
    if (n > 1)
      offending.push_back(json{{"server", s}, {"client_to_server", n}});
  for (auto& [s, n] : from_server)
    if (n > 1)
      offending.push_back(json{{"server", s}, {"server_to_client", n}});

  // A server-origin delivery between a server's receipt of the request
  // and its response means the response waited on server communication.
  for (auto& [s, rs] : req_seq) {
    auto rit = resp_seq.find(s);
    std::int64_t upper = rit != resp_seq.end() ? rit->second
                                               : static_cast<std::int64_t>(log.size());
    for (std::int64_t i = rs + 1; i <= upper && i < static_cast<std::int64_t>(log.size()); ++i) {
      const Message& m = log[static_cast<std::size_t>(i)];
      if (m.deliver_at > end) break;
      if (m.dst == ProcessId::server(s) && m.src.role == Role::Server) {
        offending.push_back(json{{"server", s},
                                 {"server_origin_receive", m.id},
                                 {"kind", m.payload.kind}});
      }
    }
  }

  v.pass = offending.empty();
  if (!v.pass)
    v.witness = json{{"kind", "not-fast"}, {"txn", txn}, {"offending", offending}};
  return v;
}

Verdict audit_visibility(const StateDiff& diff) {
  Verdict v;
  v.checker = "visibility";
  v.pass = true;
  if (diff.empty()) {
    v.label = "invisible-witnessed";
  } else {
    v.label = "visible";
    v.witness = diff.to_json();
  }
  return v;
}

Verdict check_one_version(const History& h, const MessageLog& log, TxnId txn,
                          const std::map<ObjectId, int>& placement) {
  Verdict v;
  v.checker = "one-version";

  ClientId client = -1;
  std::set<ObjectId> read_set;
  std::map<ObjectId, int> result_counts;
  for (const auto& e : h.events) {
    if (e.txn != txn) continue;
    client = e.client;
    if (e.kind == OpKind::ReadReturn) {
      read_set.insert(*e.object);
      ++result_counts[*e.object];
    }
  }
  if (client == -1) throw SimError("check_one_version: no such transaction");
  if (read_set.empty()) throw SimError("check_one_version: transaction has no reads");

  json problems = json::array();
  for (const auto& m : log) {
    if (m.payload.txn != txn) continue;
    if (!(m.dst == ProcessId::client(client)) || m.src.role != Role::Server) continue;
    std::map<ObjectId, int> counts;
    for (const auto& it : m.payload.values) ++counts[it.object];
    for (const auto& [o, n] : counts) {
      if (!read_set.count(o))
        problems.push_back(json{{"message", m.id},
                                {"object", o.name},
                                {"why", "value for object outside the read set"}});
      else if (n > 1)
        problems.push_back(json{{"message", m.id},
                                {"object", o.name},
                                {"why", "more than one version in a response"}});
      auto pit = placement.find(o);
      if (pit != placement.end() && pit->second != m.src.index)
        problems.push_back(json{{"message", m.id},
                                {"object", o.name},
                                {"why", "value for an object the server does not store"}});
    }
  }
  for (const auto& o : read_set)
    if (result_counts[o] != 1)
      problems.push_back(json{{"object", o.name},
                              {"why", "result does not have exactly one value"}});

  v.pass = problems.empty();
  if (!v.pass) v.witness = json{{"kind", "one-version"}, {"problems", problems}};
  return v;
}

}  // namespace ccsim
