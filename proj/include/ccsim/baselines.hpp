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

#include <memory>

#include "ccsim/protocol.hpp"

namespace ccsim {

// Two-round generic-transaction baseline: snapshot reads completed by a
// dependency-driven second round, writes committed with a shared
// transaction timestamp so they become visible atomically per object.
std::shared_ptr<const Protocol> make_slow2round();

// The fast generic-transaction candidate: slow-2round with the second
// read round disabled, plus an optional inter-server sync phase
// (ProtocolConfig::sync_rounds) that gates visibility of multi-server
// write transactions. Its ROTs are fast by construction and its
// consistency under adversarial schedules is exactly what the scenario
// runner probes.
std::shared_ptr<const Protocol> make_fast_visible();

// One-round read-only transactions with zero server-side bookkeeping;
// writes are single-object and visible on arrival. Deliberately broken:
// an adversarial schedule makes it return a mix of old and new values.
std::shared_ptr<const Protocol> make_naive_invisible();

}  // namespace ccsim
