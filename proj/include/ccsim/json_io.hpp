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

#include <string>

#include <json.hpp>

#include "ccsim/history.hpp"
#include "ccsim/wire.hpp"

namespace ccsim {

// History interchange: JSON Lines, one OpEvent per line with fields
// {time, client, txn, kind, object?, value?{writer,seq,bottom}}.
nlohmann::json event_to_json(const OpEvent& e);
OpEvent event_from_json(const nlohmann::json& j);
std::string history_to_jsonl(const History& h);
History history_from_jsonl(const std::string& text);

nlohmann::json value_to_json(const ValueId& v);
ValueId value_from_json(const nlohmann::json& j);

// MessageLog: JSON Lines {id, src, dst, sent_at, deliver_at, payload_kind}
// plus "seq" and "payload" so file-based checkers can run.
nlohmann::json message_to_json(const Message& m);
Message message_from_json(const nlohmann::json& j);
std::string message_log_to_jsonl(const MessageLog& log);
MessageLog message_log_from_jsonl(const std::string& text);

nlohmann::json payload_to_json(const Payload& p);
Payload payload_from_json(const nlohmann::json& j);

// Schedule config: {seed, delay_min, delay_max, overrides:[...], releases:[...]}.
nlohmann::json schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace ccsim
