//
// Copyright 2026 The attnlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace attnlab {

/// Violated API contract: bad shapes, out-of-range ids, empty batches.
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric-domain failure: non-finite inputs, diverging losses.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or unreadable input data (files, records).
class IngestError : public std::runtime_error {
 public:
  explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

/// Checkpoint/state container problems: bad magic, checksum, config mismatch.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

/// Poisoning plan cannot be realized (e.g. not enough target-class records).
class PlanError : public std::runtime_error {
 public:
  explicit PlanError(const std::string& what) : std::runtime_error(what) {}
};

/// A single trigger insertion had to be skipped; carries the reason.
class TriggerSkip : public std::runtime_error {
 public:
  explicit TriggerSkip(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace attnlab
