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

#include <stdexcept>
#include <string>

namespace ccsim {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A non-bottom read value has no matching write in the history.
class DanglingRead : public Error {
 public:
  explicit DanglingRead(const std::string& what) : Error(what) {}
};

// Input exceeds a checker's declared search budget.
class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& what) : Error(what) {}
};

class DuplicateName : public Error {
 public:
  explicit DuplicateName(const std::string& what) : Error(what) {}
};

class UnknownProtocol : public Error {
 public:
  explicit UnknownProtocol(const std::string& what) : Error(what) {}
};

// Workload or scenario shape the protocol cannot execute (e.g. a
// multi-object write transaction against a restricted-model binding).
class ProtocolShapeMismatch : public Error {
 public:
  explicit ProtocolShapeMismatch(const std::string& what) : Error(what) {}
};

// A handler asked for the global clock without clock access.
class ClockAccessDenied : public Error {
 public:
  explicit ClockAccessDenied(const std::string& what) : Error(what) {}
};

// A HOLD override survived past the end of the run.
class UnreleasedHold : public Error {
 public:
  explicit UnreleasedHold(const std::string& what) : Error(what) {}
};

// Some checker precondition on its inputs was violated.
class NoProbeReads : public Error {
 public:
  explicit NoProbeReads(const std::string& what) : Error(what) {}
};

// Simulator-internal contract violation (malformed world, stuck run,
// protocol result not matching the transaction's read/write sets).
class SimError : public Error {
 public:
  explicit SimError(const std::string& what) : Error(what) {}
};

}  // namespace ccsim
