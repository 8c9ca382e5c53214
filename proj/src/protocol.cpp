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

#include "ccsim/protocol.hpp"

#include <map>
#include <mutex>

#include "ccsim/one_round.hpp"
#include "ccsim/baselines.hpp"

namespace ccsim {

namespace {

std::map<std::string, ProtocolFactory>& registry() {
  static std::map<std::string, ProtocolFactory> r;
  return r;
}

void ensure_builtins() {
  static std::once_flag once;
  std::call_once(once, [] {
    register_protocol("slow-2round", [] { return make_slow2round(); });
    register_protocol("fast-visible", [] { return make_fast_visible(); });
    register_protocol("naive-invisible", [] { return make_naive_invisible(); });
    register_protocol("async-visible", [] { return make_async_visible(); });
    register_protocol("ts-global", [] { return make_ts_global(); });
  });
}

}  // namespace

ProtocolHandle register_protocol(const std::string& name, ProtocolFactory factory) {
  auto [it, inserted] = registry().emplace(name, std::move(factory));
  if (!inserted) throw DuplicateName("protocol already registered: " + name);
  return ProtocolHandle{name};
}

std::shared_ptr<const Protocol> find_protocol(const std::string& name) {
  ensure_builtins();
  auto it = registry().find(name);
  if (it == registry().end()) throw UnknownProtocol("no such protocol: " + name);
  return it->second();
}

std::vector<std::string> registered_protocols() {
  ensure_builtins();
  std::vector<std::string> names;
  for (const auto& [n, f] : registry()) names.push_back(n);
  return names;
}

}  // namespace ccsim
