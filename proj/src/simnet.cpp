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

#include "ccsim/simnet.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <limits>

#include "ccsim/json_io.hpp"

namespace ccsim {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t channel_key(std::uint64_t seed, const ProcessId& a, const ProcessId& b) {
  std::uint64_t k = mix64(seed);
  k = mix64(k ^ (a.role == Role::Client ? 0x11ull : 0x22ull) ^
            (static_cast<std::uint64_t>(a.index) << 8));
  k = mix64(k ^ (b.role == Role::Client ? 0x33ull : 0x44ull) ^
            (static_cast<std::uint64_t>(b.index) << 8));
  return k;
}

bool restricted_ok(const Transaction& t) {
  if (t.writes.empty()) return true;                    // read-only
  return t.reads.empty() && t.writes.size() == 1;       // single write
}

class Simulator;

class ClientEnvImpl;
class ServerEnvImpl;

struct ClientRuntime {
  std::unique_ptr<ClientCore> core;
  std::deque<WorkloadItem> queue;
  std::optional<Transaction> open;  // current transaction
  Tick start_time = 0;
  Tick available_from = 0;
  std::set<ObjectId> reads_seen, writes_seen;
};

class Simulator {
 public:
  Simulator(const WorldConfig& world, const Workload& workload,
            const Schedule& sched, const RunOptions& opts)
      : world_(world), sched_(sched), opts_(opts) {
    if (world.servers < 2) throw SimError("world needs at least two servers");
    if (world.objects.empty()) throw SimError("world has no objects");
    proto_ = find_protocol(world.protocol);
    if (proto_->clock_access() && !world.allow_clock)
      throw ClockAccessDenied("protocol '" + world.protocol +
                              "' needs a global clock; this world forbids it");
    for (std::size_t i = 0; i < world.objects.size(); ++i)
      placement_[world.objects[i]] = static_cast<int>(i % world.servers);

    std::vector<std::vector<ObjectId>> stored(world.servers);
    for (const auto& [o, s] : placement_) stored[s].push_back(o);
    for (int s = 0; s < world.servers; ++s)
      servers_.push_back(proto_->make_server(s, stored[s], world.pconfig));

    clients_.resize(world.clients);
    for (int c = 0; c < world.clients; ++c)
      clients_[c].core = proto_->make_client(c, world.pconfig);
    for (const auto& item : workload.items) {
      if (item.client < 0 || item.client >= world.clients)
        throw SimError("workload references unknown client");
      if (!proto_->supports_generic(world.pconfig) && !restricted_ok(item.txn))
        throw ProtocolShapeMismatch(
            "protocol '" + world.protocol +
            "' is restricted-model; transaction " + std::to_string(item.txn.id) +
            " writes inside a transaction");
      for (const auto& o : item.txn.reads)
        if (!placement_.count(o)) throw SimError("read of unplaced object " + o.name);
      for (const auto& [o, v] : item.txn.writes)
        if (!placement_.count(o)) throw SimError("write of unplaced object " + o.name);
      clients_[item.client].queue.push_back(item);
    }
    for (const auto& r : sched.releases) releases_[r.at].push_back(r);
    override_hits_.assign(sched.overrides.size(), 0);
    for (const auto& w : opts.watches) watch_results_.push_back({w, std::nullopt});
    snapshot_points_.assign(opts.snapshot_at.begin(), opts.snapshot_at.end());
    std::sort(snapshot_points_.begin(), snapshot_points_.end());
  }

  RunResult take() && {
    loop();
    RunResult r;
    flush_pending_events(std::numeric_limits<Tick>::max());
    r.history.events = std::move(events_);
    r.log = std::move(log_);
    r.snapshots = std::move(snapshots_);
    for (const auto& s : servers_) r.final_states.push_back(s->dump_state());
    r.watches = std::move(watch_results_);
    r.end_tick = now_;
    r.quiescence_tick = quiescence_tick_;
    return r;
  }

  // --- used by Env implementations -------------------------------------

  void send_message(ProcessId src, ProcessId dst, Payload p) {
    Message m;
    m.id = ++msg_counter_;
    m.src = src;
    m.dst = dst;
    m.sent_at = now_;
    m.payload = std::move(p);
    m.sent_seq = global_seq_;
    // The channel stream is always consumed so that overriding one
    // message never shifts the draws of later messages.
    Tick span = sched_.delay_max - sched_.delay_min + 1;
    std::uint64_t ck = channel_key(sched_.seed, src, dst);
    std::uint64_t n = channel_counters_[ck]++;
    Tick drawn = sched_.delay_min +
                 static_cast<Tick>(mix64(ck ^ mix64(n + 1)) % static_cast<std::uint64_t>(span));
    Tick deliver = m.sent_at + std::max<Tick>(1, drawn);

    for (std::size_t i = 0; i < sched_.overrides.size(); ++i) {
      const auto& ov = sched_.overrides[i];
      if (!ov.match.matches_fields(m)) continue;
      ++override_hits_[i];
      if (ov.match.occurrence && override_hits_[i] != *ov.match.occurrence) continue;
      if (ov.hold()) {
        held_.push_back(std::move(m));
        return;
      }
      deliver = std::max(*ov.deliver_at, m.sent_at + 1);
      break;
    }
    m.deliver_at = deliver;
    buckets_[deliver].push_back(std::move(m));
  }

  void set_timer(ClientId c, Tick at) {
    timers_[std::max(at, now_ + 1)].insert(c);
  }

  Tick clock_now(bool from_client_handler) const {
    (void)from_client_handler;
    if (!proto_->clock_access())
      throw ClockAccessDenied("protocol '" + world_.protocol +
                              "' read the clock without clock access");
    return now_;
  }

  int server_of(const ObjectId& o) const {
    auto it = placement_.find(o);
    if (it == placement_.end()) throw SimError("unplaced object " + o.name);
    return it->second;
  }
  int server_count() const { return world_.servers; }

  void record_read_return(ClientId c, const ObjectId& o, const ValueId& v) {
    auto& cl = clients_[c];
    if (!cl.open) throw SimError("read_return outside a transaction");
    if (!std::binary_search(cl.open->reads.begin(), cl.open->reads.end(), o))
      throw SimError("read_return for object not in the read set: " + o.name);
    if (!cl.reads_seen.insert(o).second)
      throw SimError("second value returned for object " + o.name +
                     " in txn " + std::to_string(cl.open->id));
    OpEvent e;
    e.kind = OpKind::ReadReturn;
    e.txn = cl.open->id;
    e.client = c;
    e.time = now_;
    e.object = o;
    ValueId vv = v;
    if (!vv.bottom) vv.object = o;
    e.value = vv;
    events_.push_back(std::move(e));
  }

  void record_write_ack(ClientId c, const ObjectId& o, const ValueId& v) {
    auto& cl = clients_[c];
    if (!cl.open) throw SimError("write_ack outside a transaction");
    auto it = cl.open->writes.find(o);
    if (it == cl.open->writes.end())
      throw SimError("write_ack for object not in the write set: " + o.name);
    if (!(it->second == v)) throw SimError("write_ack value mismatch on " + o.name);
    if (!cl.writes_seen.insert(o).second)
      throw SimError("second ack for write of " + o.name);
    OpEvent e;
    e.kind = OpKind::WriteAck;
    e.txn = cl.open->id;
    e.client = c;
    e.time = now_;
    e.object = o;
    e.value = it->second;
    events_.push_back(std::move(e));
  }

  void end_txn(ClientId c) {
    auto& cl = clients_[c];
    if (!cl.open) throw SimError("end_txn without an open transaction");
    const Transaction& t = *cl.open;
    if (cl.reads_seen.size() != t.reads.size())
      throw SimError("txn " + std::to_string(t.id) + " ended with " +
                     std::to_string(cl.reads_seen.size()) + "/" +
                     std::to_string(t.reads.size()) + " reads returned");
    if (cl.writes_seen.size() != t.writes.size())
      throw SimError("txn " + std::to_string(t.id) + " ended with missing write acks");
    OpEvent e;
    e.kind = OpKind::TxnEnd;
    e.txn = t.id;
    e.client = c;
    e.time = now_ + 1;
    pending_events_.push_back(std::move(e));
    cl.available_from = now_ + 2;
    cl.open.reset();
    cl.reads_seen.clear();
    cl.writes_seen.clear();
    if (opts_.snapshot_on_txn_end_of && *opts_.snapshot_on_txn_end_of == c)
      snapshot_due_ = true;
  }

 private:
  void flush_pending_events(Tick up_to) {
    std::stable_sort(pending_events_.begin(), pending_events_.end(),
                     [](const OpEvent& a, const OpEvent& b) { return a.time < b.time; });
    std::size_t i = 0;
    while (i < pending_events_.size() && pending_events_[i].time <= up_to)
      events_.push_back(pending_events_[i++]);
    pending_events_.erase(pending_events_.begin(),
                          pending_events_.begin() + static_cast<std::ptrdiff_t>(i));
  }

  std::optional<Tick> next_tick() const {
    std::optional<Tick> t;
    auto consider = [&](Tick c) {
      if (!t || c < *t) t = c;
    };
    if (!buckets_.empty()) consider(buckets_.begin()->first);
    if (!timers_.empty()) consider(timers_.begin()->first);
    for (auto& [at, v] : releases_)
      if (!v.empty()) {
        consider(at);
        break;
      }
    for (std::size_t c = 0; c < clients_.size(); ++c) {
      const auto& cl = clients_[c];
      if (cl.open || cl.queue.empty()) continue;
      const auto& head = cl.queue.front();
      if (head.after_drain && !drained_) continue;
      consider(std::max({head.not_before, cl.available_from, now_}));
    }
    return t;
  }

  bool all_idle_no_main_work() const {
    if (!buckets_.empty() || !timers_.empty()) return false;
    for (const auto& cl : clients_) {
      if (cl.open) return false;
      if (!cl.queue.empty() && !cl.queue.front().after_drain) return false;
    }
    return true;
  }

  bool anything_left() const {
    if (!buckets_.empty() || !timers_.empty()) return true;
    for (const auto& cl : clients_) {
      if (cl.open) return true;
      if (!cl.queue.empty()) {
        if (!cl.queue.front().after_drain || drained_) return true;
      }
    }
    return false;
  }

  void loop();
  void process_tick(Tick t);
  void post_tick();

  // Marks the main workload drained and schedules probe items strictly
  // after the quiescence tick.
  void activate_probes() {
    drained_ = true;
    quiescence_tick_ = now_;
    for (auto& cl : clients_)
      for (auto& item : cl.queue)
        if (item.after_drain) item.not_before = std::max(item.not_before, now_ + 1);
  }

 public:
  WorldConfig world_;
  Schedule sched_;
  RunOptions opts_;
  std::shared_ptr<const Protocol> proto_;
  std::map<ObjectId, int> placement_;
  std::vector<std::unique_ptr<ServerCore>> servers_;
  std::vector<ClientRuntime> clients_;

  std::map<Tick, std::vector<Message>> buckets_;
  std::vector<Message> held_;
  std::map<Tick, std::set<ClientId>> timers_;
  std::map<Tick, std::vector<ReleaseStep>> releases_;
  std::vector<int> override_hits_;
  std::vector<Tick> snapshot_points_;

  std::vector<OpEvent> events_, pending_events_;
  MessageLog log_;
  std::map<Tick, std::vector<nlohmann::json>> snapshots_;
  std::vector<WatchResult> watch_results_;

  Tick now_ = 0;
  std::int64_t msg_counter_ = 0;
  std::int64_t global_seq_ = -1;
  bool drained_ = false;
  bool snapshot_due_ = false;
  Tick quiescence_tick_ = 0;
  std::map<std::uint64_t, std::uint64_t> channel_counters_;
};

class ClientEnvImpl final : public ClientEnv {
 public:
  ClientEnvImpl(Simulator& sim, ClientId id) : sim_(sim), id_(id) {}
  void send(ProcessId dst, Payload p) override {
    sim_.send_message(ProcessId::client(id_), dst, std::move(p));
  }
  Tick now() override { return sim_.clock_now(true); }
  int server_of(const ObjectId& o) const override { return sim_.server_of(o); }
  int server_count() const override { return sim_.server_count(); }
  void read_return(const ObjectId& o, const ValueId& v) override {
    sim_.record_read_return(id_, o, v);
  }
  void write_ack(const ObjectId& o, const ValueId& v) override {
    sim_.record_write_ack(id_, o, v);
  }
  void end_txn() override { sim_.end_txn(id_); }
  void set_timer(Tick at) override { sim_.set_timer(id_, at); }

 private:
  Simulator& sim_;
  ClientId id_;
};

class ServerEnvImpl final : public Env {
 public:
  ServerEnvImpl(Simulator& sim, int index) : sim_(sim), index_(index) {}
  void send(ProcessId dst, Payload p) override {
    sim_.send_message(ProcessId::server(index_), dst, std::move(p));
  }
  Tick now() override { return sim_.clock_now(false); }
  int server_of(const ObjectId& o) const override { return sim_.server_of(o); }
  int server_count() const override { return sim_.server_count(); }

 private:
  Simulator& sim_;
  int index_;
};

void Simulator::process_tick(Tick t) {
  now_ = t;
  flush_pending_events(t);

  // Phase 1: releases of held messages.
  auto rit = releases_.find(t);
  if (rit != releases_.end()) {
    for (const auto& step : rit->second) {
      std::vector<Message> keep;
      for (auto& m : held_) {
        if (step.match.matches_fields(m)) {
          m.deliver_at = std::max(t, m.sent_at + 1);
          buckets_[m.deliver_at].push_back(std::move(m));
        } else {
          keep.push_back(std::move(m));
        }
      }
      held_ = std::move(keep);
    }
    releases_.erase(rit);
  }

  // Phase 2: deliveries in message-id order.
  auto bit = buckets_.find(t);
  if (bit != buckets_.end()) {
    std::vector<Message> batch = std::move(bit->second);
    buckets_.erase(bit);
    std::sort(batch.begin(), batch.end(),
              [](const Message& a, const Message& b) { return a.id < b.id; });
    for (auto& m : batch) {
      log_.push_back(m);
      // sent_seq of any message sent while handling this delivery equals
      // the delivery's log index.
      global_seq_ = static_cast<std::int64_t>(log_.size()) - 1;
      if (m.dst.role == Role::Server) {
        ServerEnvImpl env(*this, m.dst.index);
        servers_[m.dst.index]->on_message(m, env);
      } else {
        ClientEnvImpl env(*this, m.dst.index);
        clients_[m.dst.index].core->on_message(m, env);
      }
    }
  }

  // Phase 3: timers.
  auto tit = timers_.find(t);
  if (tit != timers_.end()) {
    std::set<ClientId> fired = std::move(tit->second);
    timers_.erase(tit);
    for (ClientId c : fired) {

      ClientEnvImpl env(*this, c);
      clients_[c].core->on_timer(t, env);
    }
  }

  // Phase 4: closed-loop injections.
  for (std::size_t c = 0; c < clients_.size(); ++c) {
    auto& cl = clients_[c];
    if (cl.open || cl.queue.empty()) continue;
    const auto& head = cl.queue.front();
    if (head.after_drain && !drained_) continue;
    if (head.not_before > t || cl.available_from > t) continue;
    WorkloadItem item = std::move(cl.queue.front());
    cl.queue.pop_front();
    item.txn.normalize();
    cl.open = item.txn;
    cl.start_time = t;
    OpEvent e;
    e.kind = OpKind::TxnStart;
    e.txn = item.txn.id;
    e.client = static_cast<ClientId>(c);
    e.time = t;
    events_.push_back(std::move(e));

    ClientEnvImpl env(*this, static_cast<ClientId>(c));
    cl.core->on_start(*cl.open, env);
  }

  post_tick();
}

void Simulator::post_tick() {
  for (auto& wr : watch_results_) {
    if (wr.visible_at) continue;
    if (servers_[wr.watch.server]->is_visible(wr.watch.object, wr.watch.value))
      wr.visible_at = now_;
  }
  while (!snapshot_points_.empty() && snapshot_points_.front() <= now_) {
    Tick at = snapshot_points_.front();
    snapshot_points_.erase(snapshot_points_.begin());
    auto& v = snapshots_[at];
    v.clear();
    for (const auto& s : servers_) v.push_back(s->dump_state());
  }
  if (snapshot_due_) {
    snapshot_due_ = false;
    auto& v = snapshots_[now_];
    v.clear();
    for (const auto& s : servers_) v.push_back(s->dump_state());
  }
}

void Simulator::loop() {
  while (true) {
    auto t = next_tick();
    if (!t) {
      if (!drained_ && all_idle_no_main_work()) {
        bool has_probe_items = false;
        for (const auto& cl : clients_)
          if (!cl.queue.empty()) has_probe_items = true;
        activate_probes();
        if (has_probe_items) continue;
      }
      if (!held_.empty())
        throw UnreleasedHold(std::to_string(held_.size()) +
                             " held message(s) never released");
      if (anything_left())
        throw SimError("run is stuck at tick " + std::to_string(now_));
      break;
    }
    if (*t > opts_.horizon) {
      if (!held_.empty())
        throw UnreleasedHold("held message(s) survive past horizon " +
                             std::to_string(opts_.horizon));
      throw SimError("horizon " + std::to_string(opts_.horizon) +
                     " exceeded with work remaining");
    }
    // Snapshot points strictly before the next processed tick capture the
    // current (unchanged) state.
    while (!snapshot_points_.empty() && snapshot_points_.front() < *t) {
      Tick at = snapshot_points_.front();
      snapshot_points_.erase(snapshot_points_.begin());
      auto& v = snapshots_[at];
      v.clear();
      for (const auto& s : servers_) v.push_back(s->dump_state());
    }
    process_tick(*t);
    if (!drained_ && all_idle_no_main_work()) {
      bool pending_probe = false;
      for (const auto& cl : clients_)
        if (!cl.queue.empty() && cl.queue.front().after_drain) pending_probe = true;
      if (pending_probe) activate_probes();
    }
  }
  if (!drained_) quiescence_tick_ = now_;
}

}  // namespace

RunResult run(const WorldConfig& world, const Workload& workload,
              const Schedule& sched, const RunOptions& opts) {
  Simulator sim(world, workload, sched, opts);
  return std::move(sim).take();
}

nlohmann::json StateDiff::to_json() const {
  nlohmann::json sd = nlohmann::json::array();
  for (const auto& d : server_diffs)
    sd.push_back({{"at", d.at}, {"server", d.server}, {"a", d.a}, {"b", d.b}});
  nlohmann::json md = nlohmann::json::array();
  for (const auto& d : message_diffs)
    md.push_back({{"index", d.index}, {"a", d.a}, {"b", d.b}});
  return {{"server_diffs", sd}, {"message_diffs", md}, {"empty", empty()}};
}

namespace {

nlohmann::json message_compare_key(const Message& m) {
  return nlohmann::json{{"src", m.src.str()},
                        {"dst", m.dst.str()},
                        {"sent_at", m.sent_at},
                        {"deliver_at", m.deliver_at},
                        {"payload", payload_to_json(m.payload)}};
}

}  // namespace

PairedResult paired_run(const WorldConfig& world, const Workload& with_probe,
                        const Workload& without_probe, ClientId probe_client,
                        const Schedule& sched, const RunOptions& opts) {
  for (const auto& a : with_probe.items)
    for (const auto& b : without_probe.items)
      if (a.client == b.client && a.client == probe_client)
        throw SimError("probe client appears in both workloads");

  RunOptions oa = opts;
  oa.snapshot_on_txn_end_of = probe_client;
  PairedResult pr;
  pr.with_probe = run(world, with_probe, sched, oa);

  RunOptions ob = opts;
  ob.snapshot_on_txn_end_of.reset();
  for (const auto& [at, v] : pr.with_probe.snapshots) ob.snapshot_at.push_back(at);
  pr.without_probe = run(world, without_probe, sched, ob);

  StateDiff& d = pr.diff;
  for (const auto& [at, va] : pr.with_probe.snapshots) {
    auto it = pr.without_probe.snapshots.find(at);
    if (it == pr.without_probe.snapshots.end()) continue;
    for (std::size_t s = 0; s < va.size(); ++s)
      if (va[s] != it->second[s])
        d.server_diffs.push_back({at, static_cast<int>(s), va[s], it->second[s]});
  }
  for (std::size_t s = 0; s < pr.with_probe.final_states.size(); ++s)
    if (pr.with_probe.final_states[s] != pr.without_probe.final_states[s])
      d.server_diffs.push_back({-1, static_cast<int>(s),
                                pr.with_probe.final_states[s],
                                pr.without_probe.final_states[s]});

  auto filter = [&](const MessageLog& log) {
    std::vector<nlohmann::json> out;
    for (const auto& m : log) {
      if ((m.src.role == Role::Client && m.src.index == probe_client) ||
          (m.dst.role == Role::Client && m.dst.index == probe_client))
        continue;
      out.push_back(message_compare_key(m));
    }
    return out;
  };
  auto la = filter(pr.with_probe.log);
  auto lb = filter(pr.without_probe.log);
  std::size_t n = std::max(la.size(), lb.size());
  for (std::size_t i = 0; i < n && d.message_diffs.size() < 32; ++i) {
    nlohmann::json a = i < la.size() ? la[i] : nlohmann::json();
    nlohmann::json b = i < lb.size() ? lb[i] : nlohmann::json();
    if (a != b) d.message_diffs.push_back({i, a, b});
  }
  return pr;
}

}  // namespace ccsim
