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

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "ccsim/history.hpp"

namespace ccsim::testing {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(mix64(seed)) {}
  std::uint64_t next() { return state = mix64(state); }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  double unit() { return static_cast<double>(next() % 1000000) / 1000000.0; }
};

// --- compact history construction ------------------------------------------

struct TxnSpec {
  ClientId client;
  TxnId id;
  std::vector<std::pair<ObjectId, ValueId>> reads;
  std::vector<std::pair<ObjectId, ValueId>> writes;
};

/// Lays transactions out sequentially, ten ticks apart, in list order.
inline History make_history(const std::vector<TxnSpec>& txns) {
  History h;
  Tick t = 0;
  for (const auto& s : txns) {
    OpEvent start{OpKind::TxnStart, s.id, s.client, t, std::nullopt, std::nullopt};
    h.events.push_back(start);
    Tick inner = t + 1;
    for (const auto& [o, v] : s.reads) {
      ValueId vv = v;
      if (!vv.bottom) vv.object = o;
      h.events.push_back({OpKind::ReadReturn, s.id, s.client, inner++, o, vv});
    }
    for (const auto& [o, v] : s.writes) {
      ValueId vv = v;
      vv.object = o;
      h.events.push_back({OpKind::WriteAck, s.id, s.client, inner++, o, vv});
    }
    h.events.push_back({OpKind::TxnEnd, s.id, s.client, inner, std::nullopt, std::nullopt});
    t = inner + 2;
  }
  std::stable_sort(h.events.begin(), h.events.end(),
                   [](const OpEvent& a, const OpEvent& b) { return a.time < b.time; });
  return h;
}

// --- random histories --------------------------------------------------------

/**
 * A valid history: transactions execute one after another against a
 * sequential store, reads returning the store's current value. The
 * result is serializable in execution order, hence causally consistent.
 */
inline History random_valid_history(std::uint64_t seed, int clients, int objects,
                                    int txns) {
  Rng rng(seed);
  std::vector<ObjectId> objs;
  for (int i = 0; i < objects; ++i) objs.push_back(ObjectId{"k" + std::to_string(i)});
  std::map<ObjectId, ValueId> store;
  std::map<ClientId, std::int64_t> seq;

  std::vector<TxnSpec> specs;
  for (int i = 0; i < txns; ++i) {
    TxnSpec s;
    s.client = static_cast<ClientId>(rng.below(static_cast<std::uint64_t>(clients)));
    s.id = i + 1;
    double dice = rng.unit();
    auto pick = [&](int n) {
      std::set<ObjectId> out;
      while (static_cast<int>(out.size()) < n)
        out.insert(objs[rng.below(objs.size())]);
      return out;
    };
    if (dice < 0.45) {  // read-only
      for (const auto& o : pick(1 + static_cast<int>(rng.below(2)))) {
        auto it = store.find(o);
        s.reads.push_back({o, it == store.end() ? ValueId::bot() : it->second});
      }
    } else if (dice < 0.8) {  // write-only
      for (const auto& o : pick(1 + static_cast<int>(rng.below(2)))) {
        ValueId v = ValueId::make(s.client, ++seq[s.client], o);
        s.writes.push_back({o, v});
      }
    } else {  // read-write
      for (const auto& o : pick(1)) {
        auto it = store.find(o);
        s.reads.push_back({o, it == store.end() ? ValueId::bot() : it->second});
      }
      for (const auto& o : pick(1)) {
        ValueId v = ValueId::make(s.client, ++seq[s.client], o);
        s.writes.push_back({o, v});
      }
    }
    for (const auto& [o, v] : s.writes) store[o] = v;
    specs.push_back(std::move(s));
  }
  return make_history(specs);
}

/// Rewrites one read-return to a different written value (or bottom) of
/// the same object; the result stays structurally valid but is usually a
/// causality violation.
inline History mutate_history(History h, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> read_idx;
  std::map<ObjectId, std::vector<ValueId>> written;
  for (std::size_t i = 0; i < h.events.size(); ++i) {
    const auto& e = h.events[i];
    if (e.kind == OpKind::ReadReturn) read_idx.push_back(i);
    if (e.kind == OpKind::WriteAck) written[*e.object].push_back(*e.value);
  }
  if (read_idx.empty()) return h;
  for (int attempt = 0; attempt < 16; ++attempt) {
    auto& e = h.events[read_idx[rng.below(read_idx.size())]];
    auto& cands = written[*e.object];
    std::vector<ValueId> alt;
    for (const auto& v : cands)
      if (!(v == *e.value)) alt.push_back(v);
    alt.push_back(ValueId::bot());
    ValueId pick = alt[rng.below(alt.size())];
    if (!(pick == *e.value)) {
      if (!pick.bottom) pick.object = *e.object;
      e.value = pick;
      return h;
    }
  }
  return h;
}

// --- exhaustive serialization oracle ----------------------------------------
//
// Enumerates every total order of the write-containing transactions plus
// one client's transactions and checks the serialization clauses
// directly. Causality is recomputed here with a plain DFS so the oracle
// shares nothing with the library's checker implementation.

struct OracleTxn {
  TxnId id;
  ClientId client;
  Tick start;
  std::vector<std::pair<ObjectId, ValueId>> reads;
  std::vector<std::pair<ObjectId, ValueId>> writes;
};

inline std::vector<OracleTxn> oracle_txns(const History& h) {
  std::map<TxnId, OracleTxn> m;
  for (const auto& e : h.events) {
    auto& t = m[e.txn];
    t.id = e.txn;
    t.client = e.client;
    if (e.kind == OpKind::TxnStart) t.start = e.time;
    if (e.kind == OpKind::ReadReturn) t.reads.push_back({*e.object, *e.value});
    if (e.kind == OpKind::WriteAck) t.writes.push_back({*e.object, *e.value});
  }
  std::vector<OracleTxn> out;
  for (auto& [id, t] : m) out.push_back(std::move(t));
  std::sort(out.begin(), out.end(),
            [](const OracleTxn& a, const OracleTxn& b) { return a.start < b.start; });
  return out;
}

/// Op-level causality (program order, read-from, transitive) via DFS.
struct OracleCausality {
  struct Op {
    TxnId txn;
    ClientId client;
    bool is_write;
    ObjectId object;
    ValueId value;
  };
  std::vector<Op> ops;
  std::vector<std::vector<int>> adj;

  explicit OracleCausality(const History& h) {
    std::map<TxnId, Tick> start;
    for (const auto& e : h.events)
      if (e.kind == OpKind::TxnStart) start[e.txn] = e.time;
    struct K {
      ClientId c;
      Tick s;
      std::size_t i;
      Op op;
    };
    std::vector<K> ks;
    for (std::size_t i = 0; i < h.events.size(); ++i) {
      const auto& e = h.events[i];
      if (e.kind != OpKind::ReadReturn && e.kind != OpKind::WriteAck) continue;
      ks.push_back({e.client, start[e.txn], i,
                    Op{e.txn, e.client, e.kind == OpKind::WriteAck, *e.object,
                       e.value.value_or(ValueId::bot())}});
    }
    std::sort(ks.begin(), ks.end(), [](const K& a, const K& b) {
      if (a.c != b.c) return a.c < b.c;
      if (a.s != b.s) return a.s < b.s;
      return a.i < b.i;
    });
    for (auto& k : ks) ops.push_back(k.op);
    adj.assign(ops.size(), {});
    for (std::size_t i = 0; i + 1 < ops.size(); ++i)
      if (ops[i].client == ops[i + 1].client)
        adj[i].push_back(static_cast<int>(i + 1));
    for (std::size_t r = 0; r < ops.size(); ++r) {
      if (ops[r].is_write || ops[r].value.bottom) continue;
      for (std::size_t w = 0; w < ops.size(); ++w)
        if (ops[w].is_write && ops[w].object == ops[r].object &&
            ops[w].value == ops[r].value)
          adj[w].push_back(static_cast<int>(r));
    }
  }

  bool reaches(int a, int b) const {
    std::vector<int> stack;
    std::set<int> seen;
    for (int y : adj[static_cast<std::size_t>(a)])
      if (seen.insert(y).second) stack.push_back(y);
    while (!stack.empty()) {
      int x = stack.back();
      stack.pop_back();
      if (x == b) return true;
      for (int y : adj[static_cast<std::size_t>(x)])
        if (seen.insert(y).second) stack.push_back(y);
    }
    return false;
  }

  bool txn_precedes(TxnId a, TxnId b) const {
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (ops[i].txn != a) continue;
      for (std::size_t j = 0; j < ops.size(); ++j) {
        if (ops[j].txn != b) continue;
        if (reaches(static_cast<int>(i), static_cast<int>(j))) return true;
      }
    }
    return false;
  }
};

/// Checks one explicit order against the three serialization clauses.
/// `precedes(a, b)` is the txn-level causality relation.
template <typename Precedes>
inline bool oracle_order_ok_prec(const std::vector<const OracleTxn*>& order,
                                 Precedes&& precedes) {
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j)
      if (precedes(order[j]->id, order[i]->id)) return false;
  for (std::size_t p = 0; p < order.size(); ++p) {
    for (const auto& [o, v] : order[p]->reads) {
      const ValueId* last = nullptr;
      for (std::size_t q = 0; q < p; ++q)
        for (const auto& [wo, wv] : order[q]->writes)
          if (wo == o) last = &wv;
      if (v.bottom) {
        if (last) return false;
      } else {
        if (!last || !(*last == v)) return false;
      }
    }
  }
  return true;
}

inline bool oracle_order_ok(const std::vector<const OracleTxn*>& order,
                            const OracleCausality& causality) {
  return oracle_order_ok_prec(order, [&](TxnId a, TxnId b) {
    return causality.txn_precedes(a, b);
  });
}

inline bool oracle_client_serializable(const History& h, ClientId c) {
  auto txns = oracle_txns(h);
  OracleCausality causality(h);
  std::vector<const OracleTxn*> set;
  for (const auto& t : txns)
    if (!t.writes.empty() || t.client == c) set.push_back(&t);
  std::sort(set.begin(), set.end(),
            [](const OracleTxn* a, const OracleTxn* b) { return a->id < b->id; });
  // The precedence relation does not change across permutations.
  std::map<std::pair<TxnId, TxnId>, bool> prec;
  for (const OracleTxn* a : set)
    for (const OracleTxn* b : set)
      if (a != b) prec[{a->id, b->id}] = causality.txn_precedes(a->id, b->id);
  auto precedes = [&](TxnId a, TxnId b) {
    auto it = prec.find({a, b});
    return it != prec.end() && it->second;
  };
  do {
    if (oracle_order_ok_prec(set, precedes)) return true;
  } while (std::next_permutation(set.begin(), set.end(),
                                 [](const OracleTxn* a, const OracleTxn* b) {
                                   return a->id < b->id;
                                 }));
  return false;
}

inline bool oracle_serializable(const History& h) {
  std::set<ClientId> clients;
  for (const auto& e : h.events) clients.insert(e.client);
  for (ClientId c : clients)
    if (!oracle_client_serializable(h, c)) return false;
  return true;
}

/// Removes one transaction's events (used for ROT-removal monotonicity).
inline History without_txn(const History& h, TxnId id) {
  History out;
  for (const auto& e : h.events)
    if (e.txn != id) out.events.push_back(e);
  return out;
}

}  // namespace ccsim::testing
