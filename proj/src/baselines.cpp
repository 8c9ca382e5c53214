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

#include "ccsim/baselines.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ccsim/json_io.hpp"

namespace ccsim {

namespace {

// ---------------------------------------------------------------------------
// slow-2round / fast-visible
//
// Writes: prepare at every write server (server proposes a timestamp),
// then commit everywhere with the maximum proposal as the shared commit
// timestamp. Sibling writes are patched into each record's dependency
// list at commit time, so a round-1 read of one sibling names the others.
// Single-object write transactions prepare-and-commit in one round.
//
// Reads: round 1 asks each involved server for its newest visible
// version. If some returned version's dependencies name a newer version
// of another read object, round 2 refetches exactly those versions
// (the server parks the request until the version is visible).
// fast-visible skips round 2 and accepts the round-1 snapshot.
// ---------------------------------------------------------------------------

struct TwoRoundOpts {
  std::string name;
  bool round2 = true;
  bool use_sync = false;  // honor ProtocolConfig::sync_rounds
};

struct Record {
  ValueId value;
  VersionKey key;
  std::vector<DepRef> deps;
  TxnId txn = kNoTxn;
  bool committed = false;
  bool visible = false;
};

class TwoRoundServer final : public ServerCore {
 public:
  TwoRoundServer(int index, std::vector<ObjectId> stored, int sync_rounds)
      : index_(index), sync_rounds_(sync_rounds) {
    for (auto& o : stored) store_[std::move(o)] = {};
  }

  void on_message(const Message& m, Env& env) override {
    const Payload& p = m.payload;
    if (p.kind == kind::WRITE_PREPARE) {
      on_prepare(m, env);
    } else if (p.kind == kind::WRITE_COMMIT) {
      on_commit(m, env);
    } else if (p.kind == kind::ROT_REQ) {
      on_rot(m, env);
    } else if (p.kind == kind::ROT_REQ2) {
      on_rot2(m, env);
    } else if (p.kind == kind::VIS_REQ) {
      on_vis_req(m, env);
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
                       {"committed", r.committed},
                       {"visible", r.visible}});
      objs[o.name] = arr;
    }
    return {{"clock", clock_}, {"objects", objs}};
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
    const Record* best = nullptr;
    for (const auto& r : it->second)
      if (r.visible && (!best || best->key < r.key)) best = &r;
    if (!best) return std::nullopt;
    return best->value;
  }

 private:
  void on_prepare(const Message& m, Env& env) {
    const Payload& p = m.payload;
    clock_ = std::max(clock_, p.clock) + 1;
    const ValueItem& it = p.values.at(0);
    Record r;
    r.value = it.value;
    r.key = {clock_, m.src.index};
    r.deps = p.deps;
    r.txn = p.txn;
    if (p.flag) {  // single-object fast path: commit immediately
      r.committed = true;
      r.visible = true;
    }
    store_.at(it.object).push_back(r);
    Payload ack;
    ack.kind = kind::WRITE_ACK;
    ack.txn = p.txn;
    ack.values.push_back({it.object, it.value, r.key, {}});
    ack.ref = r.key;
    ack.round = p.flag ? 2 : 1;
    env.send(m.src, std::move(ack));
    if (p.flag) serve_parked(it.object, env);
  }

  void on_commit(const Message& m, Env& env) {
    const Payload& p = m.payload;
    clock_ = std::max(clock_, p.ref.lamport);
    auto& recs = store_.at(p.ref_object);
    Record* rec = nullptr;
    for (auto& r : recs)
      if (r.txn == p.txn && !r.committed) rec = &r;
    if (!rec) throw SimError("commit for unknown prepare");
    rec->key = p.ref;
    rec->committed = true;
    for (const auto& d : p.deps) rec->deps.push_back(d);  // sibling writes

    bool needs_sync = p.flag;
    if (!needs_sync) {
      rec->visible = true;
      serve_parked(p.ref_object, env);
    } else {
      // Visibility gated on the inter-server sync phase.
      auto& task = sync_[p.txn];
      task.local_objects.push_back(p.ref_object);
      std::set<int> parts;
      for (const auto& o : p.objects) parts.insert(env.server_of(o));
      task.participants.assign(parts.begin(), parts.end());
      task.lead = *parts.begin();
      maybe_flip_sync(p.txn, env);
      if (index_ == task.lead && !task.started) {
        task.started = true;
        start_round(p.txn, 1, env);
      }
    }

    Payload ack;
    ack.kind = kind::WRITE_ACK;
    ack.txn = p.txn;
    ack.values.push_back({p.ref_object, rec->value, rec->key, {}});
    ack.ref = rec->key;
    ack.round = 2;
    env.send(m.src, std::move(ack));
  }

  void on_rot(const Message& m, Env& env) {
    // Read serving is trace-free and clock-neutral.
    Payload resp;
    resp.kind = kind::ROT_RESP;
    resp.txn = m.payload.txn;
    resp.round = 1;
    for (const auto& o : m.payload.objects) {
      const Record* best = nullptr;
      for (const auto& r : store_.at(o))
        if (r.visible && (!best || best->key < r.key)) best = &r;
      if (best)
        resp.values.push_back({o, best->value, best->key, best->deps});
      else
        resp.values.push_back({o, ValueId::bot(), {}, {}});
    }
    env.send(m.src, std::move(resp));
  }

  void on_rot2(const Message& m, Env& env) {
    if (!try_serve2(m, env)) parked_.push_back(m);
  }

  // A refetch names exact versions (payload.deps); it is answered once
  // every named version is visible.
  bool try_serve2(const Message& m, Env& env) {
    const Payload& p = m.payload;
    std::vector<const Record*> found;
    for (const auto& d : p.deps) {
      const Record* hit = nullptr;
      for (const auto& r : store_.at(d.object))
        if (r.key == d.key && r.visible) hit = &r;
      if (!hit) return false;
      found.push_back(hit);
    }
    Payload resp;
    resp.kind = kind::ROT_RESP;
    resp.txn = p.txn;
    resp.round = 2;
    for (std::size_t i = 0; i < found.size(); ++i)
      resp.values.push_back(
          {p.deps[i].object, found[i]->value, found[i]->key, found[i]->deps});
    env.send(m.src, std::move(resp));
    return true;
  }

  void serve_parked(const ObjectId&, Env& env) {
    std::vector<Message> keep;
    for (auto& m : parked_) {
      if (try_serve2(m, env)) continue;
      keep.push_back(std::move(m));
    }
    parked_ = std::move(keep);
  }

  // Sync phase (fast-visible helping): lead drives sync_rounds_ rounds of
  // VIS_REQ/VIS_RESP with every other participant; followers flip visible
  // on the final VIS_REQ, the lead on the final round's last VIS_RESP.
  struct SyncTask {
    std::vector<ObjectId> local_objects;
    std::vector<int> participants;
    int lead = 0;
    int round = 0;
    int resp_count = 0;
    bool started = false;
    bool final_seen = false;
    bool done = false;
  };

  void start_round(TxnId txn, int round, Env& env) {
    auto& task = sync_[txn];
    task.round = round;
    task.resp_count = 0;
    for (int s : task.participants) {
      if (s == index_) continue;
      Payload req;
      req.kind = kind::VIS_REQ;
      req.txn = txn;
      req.round = round;
      req.flag = round == sync_rounds_;
      env.send(ProcessId::server(s), std::move(req));
    }
  }

  void on_vis_req(const Message& m, Env& env) {
    auto& task = sync_[m.payload.txn];
    if (m.payload.flag) {
      task.final_seen = true;
      maybe_flip_sync(m.payload.txn, env);
    }
    Payload resp;
    resp.kind = kind::VIS_RESP;
    resp.txn = m.payload.txn;
    resp.round = m.payload.round;
    resp.flag = m.payload.flag;
    env.send(m.src, std::move(resp));
  }

  void on_vis_resp(const Message& m, Env& env) {
    auto& task = sync_[m.payload.txn];
    if (++task.resp_count < static_cast<int>(task.participants.size()) - 1) return;
    if (task.round < sync_rounds_) {
      start_round(m.payload.txn, task.round + 1, env);
    } else {
      task.final_seen = true;
      maybe_flip_sync(m.payload.txn, env);
    }
  }

  void maybe_flip_sync(TxnId txn, Env& env) {
    auto& task = sync_[txn];
    if (task.done || !task.final_seen) return;
    bool all_committed = !task.local_objects.empty();
    for (const auto& o : task.local_objects) {
      bool found = false;
      for (const auto& r : store_.at(o))
        if (r.txn == txn && r.committed) found = true;
      all_committed = all_committed && found;
    }
    if (!all_committed) return;
    task.done = true;
    for (const auto& o : task.local_objects) {
      for (auto& r : store_.at(o))
        if (r.txn == txn) r.visible = true;
      serve_parked(o, env);
    }
  }

  int index_;
  int sync_rounds_;
  std::uint64_t clock_ = 0;
  std::map<ObjectId, std::vector<Record>> store_;
  std::vector<Message> parked_;
  std::map<TxnId, SyncTask> sync_;
};

class TwoRoundClient final : public ClientCore {
 public:
  TwoRoundClient(ClientId id, TwoRoundOpts opts, int sync_rounds)
      : id_(id), opts_(opts), sync_rounds_(sync_rounds) {}

  void on_start(const Transaction& txn, ClientEnv& env) override {
    txn_ = txn;
    got_.clear();
    need_.clear();
    await_.clear();
    pending_.clear();
    proposals_.clear();
    if (!txn.reads.empty()) {
      phase_ = Phase::Read1;
      std::map<int, std::vector<ObjectId>> by_server;
      for (const auto& o : txn.reads) by_server[env.server_of(o)].push_back(o);
      for (auto& [s, objs] : by_server) {
        await_.insert(s);
        Payload req;
        req.kind = kind::ROT_REQ;
        req.txn = txn.id;
        req.objects = objs;
        env.send(ProcessId::server(s), std::move(req));
      }
    } else {
      begin_writes(env);
    }
  }

  void on_message(const Message& m, ClientEnv& env) override {
    const Payload& p = m.payload;
    if (p.kind == kind::ROT_RESP) {
      if (p.round == 1 && phase_ == Phase::Read1) {
        for (const auto& it : p.values) got_[it.object] = it;
        await_.erase(m.src.index);
        if (await_.empty()) reads_round1_done(env);
      } else if (p.round == 2 && phase_ == Phase::Read2) {
        for (const auto& it : p.values) {
          got_[it.object] = it;
          need_.erase(it.object);
        }
        if (need_.empty()) finish_reads(env);
      }
    } else if (p.kind == kind::WRITE_ACK) {
      clock_ = std::max(clock_, p.ref.lamport);
      const ObjectId& o = p.values.at(0).object;
      if (p.round == 1 && phase_ == Phase::Prepare) {
        proposals_[o] = p.ref;
        pending_.erase(o);
        if (pending_.empty()) begin_commit(env);
      } else if (p.round == 2 && (phase_ == Phase::Commit || phase_ == Phase::Prepare)) {
        // round 2 in Prepare phase is the single-object fast path
        env.write_ack(o, txn_.writes.at(o));
        ctx_[o] = p.ref;
        pending_.erase(o);
        if (pending_.empty()) env.end_txn();
      }
    }
  }

 private:
  enum class Phase { Read1, Read2, Prepare, Commit };

  void reads_round1_done(ClientEnv& env) {
    if (opts_.round2) {
      for (const auto& [o, it] : got_) {
        for (const auto& d : it.deps) {
          if (!std::binary_search(txn_.reads.begin(), txn_.reads.end(), d.object))
            continue;
          auto g = got_.find(d.object);
          if (g != got_.end() && g->second.key < d.key) {
            auto [nit, inserted] = need_.emplace(d.object, d.key);
            if (!inserted && nit->second < d.key) nit->second = d.key;
          }
        }
      }
    }
    if (!need_.empty()) {
      phase_ = Phase::Read2;
      std::map<int, std::vector<DepRef>> by_server;
      for (const auto& [o, key] : need_)
        by_server[env.server_of(o)].push_back({o, key});
      for (auto& [s, refs] : by_server) {
        Payload req;
        req.kind = kind::ROT_REQ2;
        req.txn = txn_.id;
        req.deps = refs;
        env.send(ProcessId::server(s), std::move(req));
      }
    } else {
      finish_reads(env);
    }
  }

  void finish_reads(ClientEnv& env) {
    for (const auto& o : txn_.reads) {
      const ValueItem& it = got_.at(o);
      env.read_return(o, it.value);
      if (!it.value.bottom) {
        auto [cit, inserted] = ctx_.emplace(o, it.key);
        if (!inserted && cit->second < it.key) cit->second = it.key;
      }
    }
    if (!txn_.writes.empty())
      begin_writes(env);
    else
      env.end_txn();
  }

  void begin_writes(ClientEnv& env) {
    phase_ = Phase::Prepare;
    bool single = txn_.writes.size() == 1;
    for (const auto& [o, v] : txn_.writes) {
      pending_.insert(o);
      Payload req;
      req.kind = kind::WRITE_PREPARE;
      req.txn = txn_.id;
      req.values.push_back({o, v, {}, {}});
      for (const auto& [co, ck] : ctx_) req.deps.push_back({co, ck});
      req.clock = ++clock_;
      req.flag = single;
      env.send(ProcessId::server(env.server_of(o)), std::move(req));
    }
  }

  void begin_commit(ClientEnv& env) {
    phase_ = Phase::Commit;
    VersionKey commit{0, id_};
    for (const auto& [o, k] : proposals_)
      commit.lamport = std::max(commit.lamport, k.lamport);
    std::set<int> write_servers;
    for (const auto& [o, v] : txn_.writes) write_servers.insert(env.server_of(o));
    bool needs_sync = sync_rounds_ > 0 && write_servers.size() > 1;
    for (const auto& [o, v] : txn_.writes) {
      pending_.insert(o);
      Payload req;
      req.kind = kind::WRITE_COMMIT;
      req.txn = txn_.id;
      req.ref_object = o;
      req.ref = commit;
      req.flag = needs_sync;
      for (const auto& [so, sv] : txn_.writes) {
        req.objects.push_back(so);
        if (!(so == o)) req.deps.push_back({so, commit});
      }
      env.send(ProcessId::server(env.server_of(o)), std::move(req));
    }
  }

  ClientId id_;
  TwoRoundOpts opts_;
  int sync_rounds_;
  std::uint64_t clock_ = 0;
  std::map<ObjectId, VersionKey> ctx_;

  Transaction txn_;
  Phase phase_ = Phase::Read1;
  std::map<ObjectId, ValueItem> got_;
  std::map<ObjectId, VersionKey> need_;
  std::set<int> await_;
  std::set<ObjectId> pending_;
  std::map<ObjectId, VersionKey> proposals_;
};

class TwoRoundProtocol final : public Protocol {
 public:
  explicit TwoRoundProtocol(TwoRoundOpts opts) : opts_(std::move(opts)) {}
  std::string name() const override { return opts_.name; }
  bool supports_generic(const ProtocolConfig&) const override { return true; }
  std::unique_ptr<ClientCore> make_client(ClientId id,
                                          const ProtocolConfig& cfg) const override {
    return std::make_unique<TwoRoundClient>(id, opts_, effective_sync(cfg));
  }
  std::unique_ptr<ServerCore> make_server(int index, std::vector<ObjectId> stored,
                                          const ProtocolConfig& cfg) const override {
    return std::make_unique<TwoRoundServer>(index, std::move(stored),
                                            effective_sync(cfg));
  }

 private:
  int effective_sync(const ProtocolConfig& cfg) const {
    return opts_.use_sync ? cfg.sync_rounds : 0;
  }
  TwoRoundOpts opts_;
};

// ---------------------------------------------------------------------------
// naive-invisible: one round, latest value per server, no trace, no
// dependency bookkeeping. Values become visible on arrival, ordered by
// arrival.
// ---------------------------------------------------------------------------

class NaiveServer final : public ServerCore {
 public:
  explicit NaiveServer(std::vector<ObjectId> stored) {
    for (auto& o : stored) store_[std::move(o)] = {};
  }

  void on_message(const Message& m, Env& env) override {
    const Payload& p = m.payload;
    if (p.kind == kind::WRITE_PREPARE) {
      const ValueItem& it = p.values.at(0);
      auto& recs = store_.at(it.object);
      VersionKey key{static_cast<std::uint64_t>(recs.size() + 1), m.src.index};
      recs.push_back({it.value, key});
      Payload ack;
      ack.kind = kind::WRITE_ACK;
      ack.txn = p.txn;
      ack.values.push_back({it.object, it.value, key, {}});
      ack.ref = key;
      ack.round = 2;
      env.send(m.src, std::move(ack));
    } else if (p.kind == kind::ROT_REQ) {
      Payload resp;
      resp.kind = kind::ROT_RESP;
      resp.txn = p.txn;
      resp.round = 1;
      for (const auto& o : p.objects) {
        const auto& recs = store_.at(o);
        if (recs.empty())
          resp.values.push_back({o, ValueId::bot(), {}, {}});
        else
          resp.values.push_back({o, recs.back().first, recs.back().second, {}});
      }
      env.send(m.src, std::move(resp));
    }
  }

  nlohmann::json dump_state() const override {
    nlohmann::json objs = nlohmann::json::object();
    for (const auto& [o, recs] : store_) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& [v, k] : recs) arr.push_back(v.str());
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
    return it->second.back().first;
  }

 private:
  std::map<ObjectId, std::vector<std::pair<ValueId, VersionKey>>> store_;
};

class NaiveClient final : public ClientCore {
 public:
  explicit NaiveClient(ClientId id) : id_(id) {}

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
        req.kind = kind::ROT_REQ;
        req.txn = txn.id;
        req.objects = objs;
        env.send(ProcessId::server(s), std::move(req));
      }
    } else {
      const auto& [o, v] = *txn.writes.begin();
      Payload req;
      req.kind = kind::WRITE_PREPARE;
      req.txn = txn.id;
      req.values.push_back({o, v, {}, {}});
      req.flag = true;
      env.send(ProcessId::server(env.server_of(o)), std::move(req));
    }
  }

  void on_message(const Message& m, ClientEnv& env) override {
    const Payload& p = m.payload;
    if (p.kind == kind::ROT_RESP) {
      for (const auto& it : p.values) got_[it.object] = it.value;
      await_.erase(m.src.index);
      if (await_.empty()) {
        for (const auto& o : txn_.reads) env.read_return(o, got_.at(o));
        env.end_txn();
      }
    } else if (p.kind == kind::WRITE_ACK) {
      const ObjectId& o = p.values.at(0).object;
      env.write_ack(o, txn_.writes.at(o));
      env.end_txn();
    }
  }

 private:
  ClientId id_;
  Transaction txn_;
  std::set<int> await_;
  std::map<ObjectId, ValueId> got_;
};

class NaiveProtocol final : public Protocol {
 public:
  std::string name() const override { return "naive-invisible"; }
  bool supports_generic(const ProtocolConfig&) const override { return false; }
  std::unique_ptr<ClientCore> make_client(ClientId id,
                                          const ProtocolConfig&) const override {
    return std::make_unique<NaiveClient>(id);
  }
  std::unique_ptr<ServerCore> make_server(int, std::vector<ObjectId> stored,
                                          const ProtocolConfig&) const override {
    return std::make_unique<NaiveServer>(std::move(stored));
  }
};

}  // namespace

std::shared_ptr<const Protocol> make_slow2round() {
  return std::make_shared<TwoRoundProtocol>(TwoRoundOpts{"slow-2round", true, false});
}

std::shared_ptr<const Protocol> make_fast_visible() {
  return std::make_shared<TwoRoundProtocol>(TwoRoundOpts{"fast-visible", false, true});
}

std::shared_ptr<const Protocol> make_naive_invisible() {
  return std::make_shared<NaiveProtocol>();
}

}  // namespace ccsim
