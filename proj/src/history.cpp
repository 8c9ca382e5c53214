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

#include "ccsim/history.hpp"

#include <algorithm>
#include <set>

namespace ccsim {

std::string ValueId::str() const {
  if (bottom) return "bot";
  return "v(" + std::to_string(writer) + "," + std::to_string(seq) + ")";
}

void Transaction::normalize() {
  std::sort(reads.begin(), reads.end());
  reads.erase(std::unique(reads.begin(), reads.end()), reads.end());
  if (reads.empty() && writes.empty())
    throw SimError("transaction " + std::to_string(id) + " has empty read and write sets");
}

std::string to_string(OpKind k) {
  switch (k) {
    case OpKind::TxnStart: return "txn-start";
    case OpKind::TxnEnd: return "txn-end";
    case OpKind::ReadReturn: return "read-return";
    case OpKind::WriteAck: return "write-ack";
  }
  return "?";
}

OpKind op_kind_from_string(const std::string& s) {
  if (s == "txn-start") return OpKind::TxnStart;
  if (s == "txn-end") return OpKind::TxnEnd;
  if (s == "read-return") return OpKind::ReadReturn;
  if (s == "write-ack") return OpKind::WriteAck;
  throw SimError("unknown op kind: " + s);
}

namespace {

struct RawTxn {
  ClientId client = -1;
  std::optional<Tick> start, end;
  std::vector<const OpEvent*> returns;  // read-return / write-ack in event order
};

std::map<TxnId, RawTxn> collect(const History& h) {
  std::map<TxnId, RawTxn> raw;
  for (const auto& e : h.events) {
    auto& r = raw[e.txn];
    if (r.client == -1) r.client = e.client;
    if (r.client != e.client)
      throw SimError("transaction " + std::to_string(e.txn) + " spans two clients");
    switch (e.kind) {
      case OpKind::TxnStart:
        if (r.start) throw SimError("duplicate txn-start for " + std::to_string(e.txn));
        r.start = e.time;
        break;
      case OpKind::TxnEnd:
        if (r.end) throw SimError("duplicate txn-end for " + std::to_string(e.txn));
        r.end = e.time;
        break;
      default:
        r.returns.push_back(&e);
        break;
    }
  }
  return raw;
}

}  // namespace

void History::validate() const {
  Tick last = 0;
  for (const auto& e : events) {
    if (e.time < last) throw SimError("history events are not time-ordered");
    last = e.time;
  }
  auto raw = collect(*this);
  std::map<ClientId, std::vector<std::pair<Tick, Tick>>> spans;
  for (auto& [id, r] : raw) {
    if (!r.start || !r.end)
      throw SimError("transaction " + std::to_string(id) + " lacks start or end");
    if (!(*r.start < *r.end))
      throw SimError("transaction " + std::to_string(id) + " start not before end");
    for (const OpEvent* e : r.returns) {
      if (!(e->time > *r.start && e->time < *r.end))
        throw SimError("return event of txn " + std::to_string(id) +
                       " outside its (start,end) window");
      if (!e->object) throw SimError("return event without object");
      if (e->kind == OpKind::ReadReturn && !e->value)
        throw SimError("read-return without value");
    }
    spans[r.client].push_back({*r.start, *r.end});
  }
  for (auto& [c, v] : spans) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i].first <= v[i - 1].second)
        throw SimError("client " + std::to_string(c) + " transactions overlap");
  }
}

std::vector<ClientId> History::clients() const {
  std::set<ClientId> s;
  for (const auto& e : events) s.insert(e.client);
  return {s.begin(), s.end()};
}

std::vector<TxnInfo> History::transactions() const {
  auto raw = collect(*this);
  std::vector<TxnInfo> out;
  for (auto& [id, r] : raw) {
    TxnInfo t;
    t.txn.id = id;
    t.txn.client = r.client;
    t.start = r.start.value_or(0);
    t.end = r.end.value_or(t.start + 1);
    for (const OpEvent* e : r.returns) {
      if (e->kind == OpKind::ReadReturn) {
        t.txn.reads.push_back(*e->object);
      } else if (e->kind == OpKind::WriteAck) {
        ValueId v = e->value.value_or(ValueId::bot());
        t.txn.writes[*e->object] = v;
      }
    }
    std::sort(t.txn.reads.begin(), t.txn.reads.end());
    t.txn.reads.erase(std::unique(t.txn.reads.begin(), t.txn.reads.end()),
                      t.txn.reads.end());
    out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end(), [](const TxnInfo& a, const TxnInfo& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.txn.id < b.txn.id;
  });
  return out;
}

std::vector<Transaction> project_client(const History& h, ClientId c) {
  std::vector<Transaction> out;
  for (auto& t : h.transactions())
    if (t.txn.client == c) out.push_back(t.txn);
  return out;
}

CausalGraph causal_precedes(const History& h) {
  h.validate();
  CausalGraph g;

  // One op node per read-return and per write (from write-ack events).
  // Per-client program order follows (txn start order, event time, stable).
  struct Keyed {
    ClientId client;
    Tick txn_start;
    TxnId txn;
    Tick time;
    std::size_t event_index;
    CausalGraph::Op op;
  };
  std::vector<Keyed> keyed;
  std::map<TxnId, Tick> starts;
  for (const auto& e : h.events)
    if (e.kind == OpKind::TxnStart) starts[e.txn] = e.time;
  for (std::size_t i = 0; i < h.events.size(); ++i) {
    const auto& e = h.events[i];
    if (e.kind != OpKind::ReadReturn && e.kind != OpKind::WriteAck) continue;
    CausalGraph::Op op;
    op.txn = e.txn;
    op.client = e.client;
    op.is_write = e.kind == OpKind::WriteAck;
    op.object = *e.object;
    op.value = e.value.value_or(ValueId::bot());
    op.time = e.time;
    keyed.push_back({e.client, starts[e.txn], e.txn, e.time, i, std::move(op)});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.client != b.client) return a.client < b.client;
    if (a.txn_start != b.txn_start) return a.txn_start < b.txn_start;
    if (a.time != b.time) return a.time < b.time;
    return a.event_index < b.event_index;
  });
  for (auto& k : keyed) g.ops.push_back(std::move(k.op));

  const int n = g.size();
  if (n > 2000)
    throw BudgetExceeded("causal_precedes: history has " + std::to_string(n) +
                         " operations, cap is 2000");

  const std::size_t words = (static_cast<std::size_t>(n) + 63) / 64;
  g.reach_.assign(n, std::vector<std::uint64_t>(words, 0));
  auto set_edge = [&](int a, int b) { g.reach_[a][static_cast<std::size_t>(b) >> 6] |= 1ull << (b & 63); };

  // Clause 1: program order (consecutive ops of one client; closure fills the rest).
  for (int i = 0; i + 1 < n; ++i) {
    if (g.ops[i].client == g.ops[static_cast<std::size_t>(i) + 1].client) {
      set_edge(i, i + 1);
      g.program_edges.push_back({i, i + 1});
    }
  }

  // Clause 2: read-from. A non-bottom read must match some write of the
  // same (object, value) pair.
  for (int r = 0; r < n; ++r) {
    const auto& rd = g.ops[r];
    if (rd.is_write || rd.value.bottom) continue;
    bool found = false;
    for (int w = 0; w < n; ++w) {
      const auto& wr = g.ops[w];
      if (!wr.is_write || wr.object != rd.object || !(wr.value == rd.value)) continue;
      set_edge(w, r);
      g.read_from_edges.push_back({w, r});
      found = true;
    }
    if (!found)
      throw DanglingRead("read of " + rd.value.str() + " on object '" +
                         rd.object.name + "' has no matching write");
  }

  // Clause 3: transitive closure (Floyd–Warshall over bitset rows).
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      if (g.reaches(i, k))
        for (std::size_t w = 0; w < words; ++w) g.reach_[i][w] |= g.reach_[k][w];
    }
  }
  return g;
}

}  // namespace ccsim
