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

#include "ccsim/one_round.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <set>

#include "ccsim/json_io.hpp"

namespace ccsim {

namespace {

// ---------------------------------------------------------------------------
// async-visible
// ---------------------------------------------------------------------------

struct D1Record {
  ValueId value;
  VersionKey key;
  std::vector<DepRef> deps;
  bool visible = false;
};

struct Served {
  ValueId value;
  VersionKey key;  // key of the returned value ({} for bottom)
};

class D1Server final : public ServerCore {
 public:
  D1Server(int index, std::vector<ObjectId> stored) : index_(index) {
    for (auto& o : stored) {
      store_[o] = {};
      old_tx_[o] = {};
      current_[o] = {};
      queue_[o] = {};
    }
  }

  void on_message(const Message& m, Env& env) override {
    const Payload& p = m.payload;
    if (p.kind == kind::D1_WRITE) {
      on_write(m, env);
    } else if (p.kind == kind::D1_ROT_REQ) {
      on_rot(m, env);
    } else if (p.kind == kind::VIS_REQ) {
      if (!try_answer_vis(m, env)) parked_vis_.push_back(m);
    } else if (p.kind == kind::VIS_RESP) {
      on_vis_resp(m, env);
    }
  }

  nlohmann::json dump_state() const override {
    nlohmann::json objs = nlohmann::json::object();
    for (const auto& [o, recs] : store_) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : recs)
        arr.push_back({{"value", r.value.str()},
                       {"key", r.key.str()},
                       {"visible", r.visible}});
      objs[o.name] = arr;
    }
    nlohmann::json old = nlohmann::json::object();
    for (const auto& [o, tbl] : old_tx_) {
      nlohmann::json t = nlohmann::json::object();
      for (const auto& [tx, v] : tbl) t[std::to_string(tx)] = v.str();
      old[o.name] = t;
    }
    nlohmann::json cur = nlohmann::json::object();
    for (const auto& [o, tbl] : current_) {
      nlohmann::json t = nlohmann::json::object();
      for (const auto& [tx, s] : tbl) t[std::to_string(tx)] = s.value.str();
      cur[o.name] = t;
    }
    return {{"clock", clock_},
            {"objects", objs},
            {"old_tx", old},
            {"current", cur},
            {"known_old", std::vector<TxnId>(known_old_.begin(), known_old_.end())}};
  }

  bool is_visible(const ObjectId& o, const ValueId& v) const override {
    auto it = store_.find(o);
    if (it == store_.end()) return false;
    for (const auto& r : it->second)
      if (r.value == v && r.visible) return true;
    return false;
  }

  std::optional<ValueId> newest_visible(const ObjectId& o) const override {
    auto it = store_.find(o);
    if (it == store_.end()) return std::nullopt;
    const D1Record* best = nullptr;
    for (const auto& r : it->second)
      if (r.visible && (!best || best->key < r.key)) best = &r;
    if (!best) return std::nullopt;
    return best->value;
  }

 private:
  struct Prop {
    bool active = false;
    VersionKey key;
    std::set<int> awaiting;         // servers owed a VIS_RESP
    std::vector<DepRef> local_deps; // same-server deps to wait on
  };

  void on_write(const Message& m, Env& env) {
    const Payload& p = m.payload;
    clock_ = std::max(clock_, p.clock) + 1;
    const ValueItem& it = p.values.at(0);
    D1Record r;
    r.value = it.value;
    r.key = {clock_, m.src.index};
    r.deps = p.deps;
    store_.at(it.object).push_back(r);
    queue_.at(it.object).push_back(r.key);

    Payload ack;
    ack.kind = kind::D1_WACK;
    ack.txn = p.txn;
    ack.values.push_back({it.object, it.value, r.key, {}});
    ack.ref = r.key;
    env.send(m.src, std::move(ack));

    start_propagation(it.object, env);
  }

  void start_propagation(const ObjectId& o, Env& env) {
    auto& prop = prop_[o];
    if (prop.active || queue_.at(o).empty()) return;
    prop.active = true;
    prop.key = queue_.at(o).front();
    prop.awaiting.clear();
    prop.local_deps.clear();

    const D1Record& w = record(o, prop.key);
    std::map<int, std::vector<DepRef>> remote;
    for (const auto& d : w.deps) {
      int s = env.server_of(d.object);
      if (s == index_)
        prop.local_deps.push_back(d);
      else
        remote[s].push_back(d);
    }
    for (auto& [s, deps] : remote) {
      prop.awaiting.insert(s);
      Payload req;
      req.kind = kind::VIS_REQ;
      req.ref_object = o;
      req.ref = prop.key;
      req.deps = deps;
      env.send(ProcessId::server(s), std::move(req));
    }
    maybe_complete(o, env);
  }

  bool deps_visible(const std::vector<DepRef>& deps) const {
    for (const auto& d : deps) {
      auto it = store_.find(d.object);
      if (it == store_.end()) return false;
      bool ok = false;
      for (const auto& r : it->second)
        if (r.key == d.key && r.visible) ok = true;
      if (!ok) return false;
    }
    return true;
  }

  bool try_answer_vis(const Message& m, Env& env) {
    if (!deps_visible(m.payload.deps)) return false;
    Payload resp;
    resp.kind = kind::VIS_RESP;
    resp.ref_object = m.payload.ref_object;
    resp.ref = m.payload.ref;
    resp.old_txns.assign(known_old_.begin(), known_old_.end());
    env.send(m.src, std::move(resp));
    return true;
  }

  void on_vis_resp(const Message& m, Env& env) {
    for (TxnId tx : m.payload.old_txns) known_old_.insert(tx);
    auto pit = prop_.find(m.payload.ref_object);
    if (pit == prop_.end() || !pit->second.active || pit->second.key != m.payload.ref)
      return;
    pit->second.awaiting.erase(m.src.index);
    maybe_complete(m.payload.ref_object, env);
  }

  void maybe_complete(const ObjectId& o, Env& env) {
    auto& prop = prop_.at(o);
    if (!prop.active || !prop.awaiting.empty() || !deps_visible(prop.local_deps))
      return;

    const VersionKey wkey = prop.key;
    D1Record& w = record(o, wkey);

    // Current transactions that returned a value written before w move to
    // OldTx pinned to what they actually returned.
    auto& cur = current_.at(o);
    for (auto it = cur.begin(); it != cur.end();) {
      if (it->second.key < wkey) {
        old_tx_.at(o)[it->first] = it->second.value;
        known_old_.insert(it->first);
        it = cur.erase(it);
      } else {
        ++it;
      }
    }
    // Every other transaction known to be old gets the last value written
    // before w (bottom if w is the object's first value).
    const D1Record* last_before = nullptr;
    for (const auto& r : store_.at(o))
      if (r.key < wkey && (!last_before || last_before->key < r.key)) last_before = &r;
    for (TxnId tx : known_old_) {
      if (old_tx_.at(o).count(tx) || cur.count(tx)) continue;
      old_tx_.at(o)[tx] = last_before ? last_before->value : ValueId::bot();
    }

    w.visible = true;
    prop.active = false;
    queue_.at(o).pop_front();
    start_propagation(o, env);
    recheck(env);
  }

  // A visibility flip can unblock parked VIS_REQs and other objects'
  // local dependencies; iterate to a fixpoint.
  void recheck(Env& env) {
    bool progress = true;
    while (progress) {
      progress = false;
      std::vector<Message> keep;
      for (auto& m : parked_vis_) {
        if (try_answer_vis(m, env))
          progress = true;
        else
          keep.push_back(std::move(m));
      }
      parked_vis_ = std::move(keep);
      for (auto& [o, prop] : prop_) {
        if (!prop.active || !prop.awaiting.empty()) continue;
        if (deps_visible(prop.local_deps)) {
          maybe_complete(o, env);
          progress = true;
        }
      }
    }
  }

  void on_rot(const Message& m, Env& env) {
    const Payload& p = m.payload;
    clock_ = std::max(clock_, p.clock) + 1;
    Payload resp;
    resp.kind = kind::D1_ROT_RESP;
    resp.txn = p.txn;
    for (const auto& o : p.objects) {
      auto& old_tbl = old_tx_.at(o);
      auto oit = old_tbl.find(p.txn);
      if (oit != old_tbl.end()) {
        resp.values.push_back({o, oit->second, key_of(o, oit->second), {}});
        continue;
      }
      // Newest among visible versions and versions the client has
      // already observed (named in its context).
      const D1Record* best = nullptr;
      for (const auto& r : store_.at(o))
        if (r.visible && (!best || best->key < r.key)) best = &r;
      for (const auto& d : p.deps) {
        if (!(d.object == o)) continue;
        for (const auto& r : store_.at(o))
          if (r.key == d.key && (!best || best->key < r.key)) best = &r;
      }
      if (best) {
        resp.values.push_back({o, best->value, best->key, {}});
        current_.at(o)[p.txn] = {best->value, best->key};
      } else {
        resp.values.push_back({o, ValueId::bot(), {}, {}});
        current_.at(o)[p.txn] = {ValueId::bot(), {}};
      }
    }
    env.send(m.src, std::move(resp));
  }

  D1Record& record(const ObjectId& o, const VersionKey& k) {
    for (auto& r : store_.at(o))
      if (r.key == k) return r;
    throw SimError("no record " + k.str() + " for object " + o.name);
  }

  VersionKey key_of(const ObjectId& o, const ValueId& v) const {
    if (v.bottom) return {};
    for (const auto& r : store_.at(o))
      if (r.value == v) return r.key;
    return {};
  }

  int index_;
  std::uint64_t clock_ = 0;
  std::map<ObjectId, std::vector<D1Record>> store_;
  std::map<ObjectId, std::map<TxnId, ValueId>> old_tx_;
  std::map<ObjectId, std::map<TxnId, Served>> current_;
  std::set<TxnId> known_old_;
  std::map<ObjectId, std::deque<VersionKey>> queue_;
  std::map<ObjectId, Prop> prop_;
  std::vector<Message> parked_vis_;
};

class D1Client final : public ClientCore {
 public:
  explicit D1Client(ClientId id) : id_(id) {}

  void on_start(const Transaction& txn, ClientEnv& env) override {
    txn_ = txn;
    await_.clear();
    got_.clear();
    if (!txn.reads.empty()) {
      std::map<int, std::vector<ObjectId>> by_server;
      for (const auto& o : txn.reads) by_server[env.server_of(o)].push_back(o);
      for (auto& [s, objs] : by_server) {
        await_.insert(s);
        Payload req;
        req.kind = kind::D1_ROT_REQ;
        req.txn = txn.id;
        req.objects = objs;
        for (const auto& [co, ck] : ctx_) req.deps.push_back({co, ck});
        req.clock = ++clock_;
        env.send(ProcessId::server(s), std::move(req));
      }
    } else {
      const auto& [o, v] = *txn.writes.begin();
      Payload req;
      req.kind = kind::D1_WRITE;
      req.txn = txn.id;
      req.values.push_back({o, v, {}, {}});
      for (const auto& [co, ck] : ctx_) req.deps.push_back({co, ck});
      req.clock = ++clock_;
      env.send(ProcessId::server(env.server_of(o)), std::move(req));
    }
  }

  void on_message(const Message& m, ClientEnv& env) override {
    const Payload& p = m.payload;
    if (p.kind == kind::D1_ROT_RESP) {
      clock_ = std::max(clock_, p.clock);
      for (const auto& it : p.values) got_[it.object] = it;
      await_.erase(m.src.index);
      if (await_.empty()) {
        for (const auto& o : txn_.reads) {
          const ValueItem& it = got_.at(o);
          env.read_return(o, it.value);
          if (!it.value.bottom) note_ctx(o, it.key);
        }
        env.end_txn();
      }
    } else if (p.kind == kind::D1_WACK) {
      clock_ = std::max(clock_, p.ref.lamport);
      const ObjectId& o = p.values.at(0).object;
      note_ctx(o, p.ref);
      env.write_ack(o, txn_.writes.at(o));
      env.end_txn();
    }
  }

 private:
  void note_ctx(const ObjectId& o, const VersionKey& k) {
    auto [it, inserted] = ctx_.emplace(o, k);
    if (!inserted && it->second < k) it->second = k;
  }

  ClientId id_;
  std::uint64_t clock_ = 0;
  std::map<ObjectId, VersionKey> ctx_;
  Transaction txn_;
  std::set<int> await_;
  std::map<ObjectId, ValueItem> got_;
};

class D1Protocol final : public Protocol {
 public:
  std::string name() const override { return "async-visible"; }
  bool supports_generic(const ProtocolConfig&) const override { return false; }
  std::unique_ptr<ClientCore> make_client(ClientId id,
                                          const ProtocolConfig&) const override {
    return std::make_unique<D1Client>(id);
  }
  std::unique_ptr<ServerCore> make_server(int index, std::vector<ObjectId> stored,
                                          const ProtocolConfig&) const override {
    return std::make_unique<D1Server>(index, std::move(stored));
  }
};

// ---------------------------------------------------------------------------
// ts-global
// ---------------------------------------------------------------------------

class D2Server final : public ServerCore {
 public:
  explicit D2Server(std::vector<ObjectId> stored) {
    for (auto& o : stored) store_[std::move(o)] = {};
  }

  void on_message(const Message& m, Env& env) override {
    const Payload& p = m.payload;
    if (p.kind == kind::D2_WRITE) {
      const ValueItem& it = p.values.at(0);
      store_.at(it.object).push_back({it.value, p.ref});
      Payload ack;
      ack.kind = kind::D2_RESP;
      ack.txn = p.txn;
      ack.round = 2;
      ack.values.push_back({it.object, it.value, p.ref, {}});
      env.send(m.src, std::move(ack));
    } else if (p.kind == kind::D2_READ) {
      Payload resp;
      resp.kind = kind::D2_RESP;
      resp.txn = p.txn;
      resp.round = 1;
      for (const auto& o : p.objects) {
        const std::pair<ValueId, VersionKey>* best = nullptr;
        for (const auto& rec : store_.at(o))
          if (rec.second < p.ref && (!best || best->second < rec.second)) best = &rec;
        if (best)
          resp.values.push_back({o, best->first, best->second, {}});
        else
          resp.values.push_back({o, ValueId::bot(), {}, {}});
      }
      env.send(m.src, std::move(resp));
    }
  }

  nlohmann::json dump_state() const override {
    nlohmann::json objs = nlohmann::json::object();
    for (const auto& [o, recs] : store_) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& [v, k] : recs)
        arr.push_back({{"value", v.str()}, {"stamp", k.str()}});
      objs[o.name] = arr;
    }
    return {{"objects", objs}};
  }

  bool is_visible(const ObjectId& o, const ValueId& v) const override {
    auto it = store_.find(o);
    if (it == store_.end()) return false;
    for (const auto& [rv, rk] : it->second)
      if (rv == v) return true;
    return false;
  }

  std::optional<ValueId> newest_visible(const ObjectId& o) const override {
    auto it = store_.find(o);
    if (it == store_.end() || it->second.empty()) return std::nullopt;
    const std::pair<ValueId, VersionKey>* best = nullptr;
    for (const auto& rec : it->second)
      if (!best || best->second < rec.second) best = &rec;
    return best->first;
  }

 private:
  std::map<ObjectId, std::vector<std::pair<ValueId, VersionKey>>> store_;
};

class D2Client final : public ClientCore {
 public:
  D2Client(ClientId id, Tick u) : id_(id), u_(u) {}

  void on_start(const Transaction& txn, ClientEnv& env) override {
    txn_ = txn;
    got_.clear();
    pending_reads_.clear();
    pending_writes_.clear();
    Tick now = env.now();
    stamp_ = {static_cast<std::uint64_t>(now), id_};

    if (!txn.reads.empty()) {
      VersionKey threshold = stamp_;
      if (u_ > 0) {
        if (threshold.lamport > static_cast<std::uint64_t>(2 * u_)) {
          threshold.lamport -= 2 * u_;
        } else {
          // ts - 2u lies before the start of time: the arrival guarantee
          // covers no value yet, so the snapshot must be empty.
          threshold = VersionKey{0, std::numeric_limits<ClientId>::min()};
        }
      }
      std::map<int, std::vector<ObjectId>> by_server;
      for (const auto& o : txn.reads) by_server[env.server_of(o)].push_back(o);
      for (auto& [s, objs] : by_server) {
        pending_reads_.insert(s);
        Payload req;
        req.kind = kind::D2_READ;
        req.txn = txn.id;
        req.objects = objs;
        req.ref = threshold;
        env.send(ProcessId::server(s), std::move(req));
      }
    }
    for (const auto& [o, v] : txn.writes) {
      pending_writes_.insert(o);
      Payload req;
      req.kind = kind::D2_WRITE;
      req.txn = txn.id;
      req.values.push_back({o, v, {}, {}});
      req.ref = stamp_;
      env.send(ProcessId::server(env.server_of(o)), std::move(req));
    }
    if (u_ > 0) env.set_timer(now + 2 * u_);
    timer_fired_ = u_ == 0;
  }

  void on_message(const Message& m, ClientEnv& env) override {
    const Payload& p = m.payload;
    if (p.kind != kind::D2_RESP) return;
    if (p.round == 1) {
      for (const auto& it : p.values) got_[it.object] = it.value;
      pending_reads_.erase(m.src.index);
    } else {
      pending_writes_.erase(p.values.at(0).object);
    }
    maybe_finish(env);
  }

  void on_timer(Tick, ClientEnv& env) override {
    timer_fired_ = true;
    maybe_finish(env);
  }

 private:
  void maybe_finish(ClientEnv& env) {
    if (!pending_reads_.empty() || !pending_writes_.empty() || !timer_fired_)
      return;
    for (const auto& o : txn_.reads) env.read_return(o, got_.at(o));
    for (const auto& [o, v] : txn_.writes) env.write_ack(o, v);
    env.end_txn();
  }

  ClientId id_;
  Tick u_;
  Transaction txn_;
  VersionKey stamp_;
  bool timer_fired_ = false;
  std::set<int> pending_reads_;
  std::set<ObjectId> pending_writes_;
  std::map<ObjectId, ValueId> got_;
};

class D2Protocol final : public Protocol {
 public:
  std::string name() const override { return "ts-global"; }
  bool clock_access() const override { return true; }
  bool supports_generic(const ProtocolConfig& cfg) const override {
    return cfg.u > 0;
  }
  std::unique_ptr<ClientCore> make_client(ClientId id,
                                          const ProtocolConfig& cfg) const override {
    return std::make_unique<D2Client>(id, cfg.u);
  }
  std::unique_ptr<ServerCore> make_server(int, std::vector<ObjectId> stored,
                                          const ProtocolConfig&) const override {
    return std::make_unique<D2Server>(std::move(stored));
  }
};

}  // namespace

std::shared_ptr<const Protocol> make_async_visible() {
  return std::make_shared<D1Protocol>();
}

std::shared_ptr<const Protocol> make_ts_global() {
  return std::make_shared<D2Protocol>();
}

}  // namespace ccsim
