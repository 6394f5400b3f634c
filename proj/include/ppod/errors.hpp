/*
 * Copyright 2026 The PPOD Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
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
#include <utility>

namespace ppod {

// Bad argument to a library call (shape mismatch, out-of-range budget, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// CSV ingestion failure. Carries the 1-based file line and the column name
// when they are known (line 0 / empty column otherwise).
class ParseError : public std::runtime_error {
 public:
  enum class Kind { kMissingFile, kHeaderMismatch, kRowWidth, kNonNumeric, kUnknownLabel };

  ParseError(Kind kind, const std::string& what, std::size_t line = 0, std::string column = {})
      : std::runtime_error(what), kind_(kind), line_(line), column_(std::move(column)) {}

  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }
  const std::string& column() const { return column_; }

 private:
  Kind kind_;
  std::size_t line_;
  std::string column_;
};

// Shards could not be put back together.
class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A scenario was configured inconsistently (schema mismatch, n = 0, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A message violated the tier topology or was sent to a node that cannot
// handle its kind.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The event loop ended in a non-quiescent state.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ppod
