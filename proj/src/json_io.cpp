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

#include "ccsim/json_io.hpp"

#include <fstream>
#include <sstream>

namespace ccsim {

using nlohmann::json;

ProcessId ProcessId::parse(const std::string& s) {
  if (s.size() < 2 || (s[0] != 'C' && s[0] != 'S'))
    throw SimError("bad process id: " + s);
  ProcessId p;
  p.role = s[0] == 'C' ? Role::Client : Role::Server;
  p.index = std::stoi(s.substr(1));
  return p;
}

json value_to_json(const ValueId& v) {
  if (v.bottom) return json{{"bottom", true}};
  return json{{"bottom", false}, {"writer", v.writer}, {"seq", v.seq}};
}

ValueId value_from_json(const json& j) {
  if (j.value("bottom", false)) return ValueId::bot();
  ValueId v;
  v.writer = j.at("writer").get<ClientId>();
  v.seq = j.at("seq").get<std::int64_t>();
  return v;
}

json event_to_json(const OpEvent& e) {
  json j{{"time", e.time},
         {"client", e.client},
         {"txn", e.txn},
         {"kind", to_string(e.kind)}};
  if (e.object) j["object"] = e.object->name;
  if (e.value) j["value"] = value_to_json(*e.value);
  return j;
}

OpEvent event_from_json(const json& j) {
  OpEvent e;
  e.time = j.at("time").get<Tick>();
  e.client = j.at("client").get<ClientId>();
  e.txn = j.at("txn").get<TxnId>();
  e.kind = op_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("object")) e.object = ObjectId{j.at("object").get<std::string>()};
  if (j.contains("value")) {
    e.value = value_from_json(j.at("value"));
    if (e.object) e.value->object = *e.object;
  }
  return e;
}

std::string history_to_jsonl(const History& h) {
  std::string out;
  for (const auto& e : h.events) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

History history_from_jsonl(const std::string& text) {
  History h;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    h.events.push_back(event_from_json(json::parse(line)));
  }
  return h;
}

namespace {

json key_to_json(const VersionKey& k) {
  return json{{"lamport", k.lamport}, {"writer", k.writer}};
}
VersionKey key_from_json(const json& j) {
  return {j.at("lamport").get<std::uint64_t>(), j.at("writer").get<ClientId>()};
}

json depref_to_json(const DepRef& d) {
  return json{{"object", d.object.name}, {"key", key_to_json(d.key)}};
}
DepRef depref_from_json(const json& j) {
  return {ObjectId{j.at("object").get<std::string>()}, key_from_json(j.at("key"))};
}

json item_to_json(const ValueItem& it) {
  json j{{"object", it.object.name},
         {"value", value_to_json(it.value)},
         {"key", key_to_json(it.key)}};
  if (!it.deps.empty()) {
    json deps = json::array();
    for (const auto& d : it.deps) deps.push_back(depref_to_json(d));
    j["deps"] = deps;
  }
  return j;
}

ValueItem item_from_json(const json& j) {
  ValueItem it;
  it.object = ObjectId{j.at("object").get<std::string>()};
  it.value = value_from_json(j.at("value"));
  it.value.object = it.object;
  it.key = key_from_json(j.at("key"));
  if (j.contains("deps"))
    for (const auto& d : j.at("deps")) it.deps.push_back(depref_from_json(d));
  return it;
}

}  // namespace

json payload_to_json(const Payload& p) {
  json j{{"kind", p.kind}};
  if (p.txn != kNoTxn) j["txn"] = p.txn;
  if (!p.objects.empty()) {
    json a = json::array();
    for (const auto& o : p.objects) a.push_back(o.name);
    j["objects"] = a;
  }
  if (!p.values.empty()) {
    json a = json::array();
    for (const auto& it : p.values) a.push_back(item_to_json(it));
    j["values"] = a;
  }
  if (!p.deps.empty()) {
    json a = json::array();
    for (const auto& d : p.deps) a.push_back(depref_to_json(d));
    j["deps"] = a;
  }
  if (!p.old_txns.empty()) j["old_txns"] = p.old_txns;
  if (!p.ref_object.name.empty()) j["ref_object"] = p.ref_object.name;
  if (p.ref != VersionKey{}) j["ref"] = key_to_json(p.ref);
  if (p.clock != 0) j["clock"] = p.clock;
  if (p.round != 0) j["round"] = p.round;
  if (p.flag) j["flag"] = true;
  return j;
}

Payload payload_from_json(const json& j) {
  Payload p;
  p.kind = j.at("kind").get<std::string>();
  p.txn = j.value("txn", kNoTxn);
  if (j.contains("objects"))
    for (const auto& o : j.at("objects")) p.objects.push_back(ObjectId{o.get<std::string>()});
  if (j.contains("values"))
    for (const auto& it : j.at("values")) p.values.push_back(item_from_json(it));
  if (j.contains("deps"))
    for (const auto& d : j.at("deps")) p.deps.push_back(depref_from_json(d));
  if (j.contains("old_txns")) p.old_txns = j.at("old_txns").get<std::vector<TxnId>>();
  if (j.contains("ref_object")) p.ref_object = ObjectId{j.at("ref_object").get<std::string>()};
  if (j.contains("ref")) p.ref = key_from_json(j.at("ref"));
  p.clock = j.value("clock", std::uint64_t{0});
  p.round = j.value("round", 0);
  p.flag = j.value("flag", false);
  return p;
}

json message_to_json(const Message& m) {
  return json{{"id", m.id},
              {"src", m.src.str()},
              {"dst", m.dst.str()},
              {"sent_at", m.sent_at},
              {"deliver_at", m.deliver_at},
              {"payload_kind", m.payload.kind},
              {"seq", m.sent_seq},
              {"payload", payload_to_json(m.payload)}};
}

Message message_from_json(const json& j) {
  Message m;
  m.id = j.at("id").get<std::int64_t>();
  m.src = ProcessId::parse(j.at("src").get<std::string>());
  m.dst = ProcessId::parse(j.at("dst").get<std::string>());
  m.sent_at = j.at("sent_at").get<Tick>();
  m.deliver_at = j.at("deliver_at").get<Tick>();
  m.sent_seq = j.value("seq", std::int64_t{-1});
  if (j.contains("payload")) {
    m.payload = payload_from_json(j.at("payload"));
  } else {
    m.payload.kind = j.at("payload_kind").get<std::string>();
  }
  return m;
}

std::string message_log_to_jsonl(const MessageLog& log) {
  std::string out;
  for (const auto& m : log) {
    out += message_to_json(m).dump();
    out += '\n';
  }
  return out;
}

MessageLog message_log_from_jsonl(const std::string& text) {
  MessageLog log;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    log.push_back(message_from_json(json::parse(line)));
  }
  return log;
}

namespace {

json match_to_json(const MessageMatch& m) {
  json j = json::object();
  if (m.src) j["src"] = *m.src;
  if (m.dst) j["dst"] = *m.dst;
  if (m.kind) j["kind"] = *m.kind;
  if (m.txn) j["txn"] = *m.txn;
  if (m.occurrence) j["occurrence"] = *m.occurrence;
  return j;
}

MessageMatch match_from_json(const json& j) {
  MessageMatch m;
  if (j.contains("src")) m.src = j.at("src").get<std::string>();
  if (j.contains("dst")) m.dst = j.at("dst").get<std::string>();
  if (j.contains("kind")) m.kind = j.at("kind").get<std::string>();
  if (j.contains("txn")) m.txn = j.at("txn").get<TxnId>();
  if (j.contains("occurrence")) m.occurrence = j.at("occurrence").get<int>();
  return m;
}

}  // namespace

json schedule_to_json(const Schedule& s) {
  json overrides = json::array();
  for (const auto& o : s.overrides) {
    json jo{{"match", match_to_json(o.match)}};
    if (o.deliver_at)
      jo["deliver_at"] = *o.deliver_at;
    else
      jo["hold"] = true;
    overrides.push_back(jo);
  }
  json releases = json::array();
  for (const auto& r : s.releases)
    releases.push_back(json{{"match", match_to_json(r.match)}, {"at", r.at}});
  return json{{"seed", s.seed},
              {"delay_min", s.delay_min},
              {"delay_max", s.delay_max},
              {"overrides", overrides},
              {"releases", releases}};
}

Schedule schedule_from_json(const json& j) {
  Schedule s;
  s.seed = j.value("seed", std::uint64_t{1});
  s.delay_min = j.value("delay_min", Tick{1});
  s.delay_max = j.value("delay_max", Tick{1});
  if (j.contains("overrides")) {
    for (const auto& jo : j.at("overrides")) {
      DelayOverride o;
      o.match = match_from_json(jo.at("match"));
      if (jo.contains("deliver_at")) o.deliver_at = jo.at("deliver_at").get<Tick>();
      s.overrides.push_back(std::move(o));
    }
  }
  if (j.contains("releases")) {
    for (const auto& jr : j.at("releases")) {
      ReleaseStep r;
      r.match = match_from_json(jr.at("match"));
      r.at = jr.at("at").get<Tick>();
      s.releases.push_back(std::move(r));
    }
  }
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot write file: " + path);
  out << content;
}

}  // namespace ccsim
