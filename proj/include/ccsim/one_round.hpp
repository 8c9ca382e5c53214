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

// One-round visible read-only transactions with asynchronous propagation
// (restricted model: writes are single-object, outside transactions).
// Servers keep per-object OldTx tables assigning pre-computed old values
// to transactions known to have read stale data elsewhere; visibility of
// a write is gated on collecting OldTx knowledge from every server that
// stores one of its dependencies.
std::shared_ptr<const Protocol> make_async_visible();

// Timestamp-based reads against a global clock. With u == 0: restricted
// model, reads return the highest-stamped value below the transaction's
// stamp, one round, invisible. With u > 0 (bounded message delay):
// generic transactions, every transaction runs for 2u ticks and reads
// compare stamps against ts - 2u.
std::shared_ptr<const Protocol> make_ts_global();

}  // namespace ccsim
