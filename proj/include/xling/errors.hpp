// Copyright 2026 The xling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace xling {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape or rank mismatch between tensors.
struct DimensionError : Error {
  using Error::Error;
};

// Input outside an operation's mathematical domain (log of <= 0, zero vector).
struct DomainError : Error {
  using Error::Error;
};

// Out-of-range index (embedding row, cross-entropy target).
struct IndexError : Error {
  using Error::Error;
};

// API used out of contract (backward twice, non-scalar loss).
struct StateError : Error {
  using Error::Error;
};

// NaN or Inf produced where finite values are required.
struct NumericError : Error {
  using Error::Error;
};

// Malformed input text (bad JSON line, bad file header).
struct ParseError : Error {
  using Error::Error;
};

// Well-formed input that violates a schema (missing field, unknown label).
struct SchemaError : Error {
  using Error::Error;
};

// Invalid configuration (bad batch size, missing corpus).
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem failure.
struct IoError : Error {
  using Error::Error;
};

// Inputs that contradict each other (same label, different checkpoints).
struct ConsistencyError : Error {
  using Error::Error;
};

}  // namespace xling
