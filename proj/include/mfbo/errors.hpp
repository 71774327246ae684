// Copyright 2026 The mfbo Authors. All Rights Reserved.
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
// =============================================================================

#ifndef MFBO_ERRORS_HPP
#define MFBO_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfbo {

/// Base class for every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix extents that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Sobol stream requested beyond the embedded direction-number table.
class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

/// Cholesky failed even after the jitter ladder was exhausted.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, std::size_t pivot)
      : Error(what + " (failing pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Categorical level outside its declared cardinality.
class EncodingError : public Error {
 public:
  using Error::Error;
};

/// Every restart of the hyperparameter search failed.
class TrainingFailure : public Error {
 public:
  using Error::Error;
};

/// No finite acquisition value was found for any source.
class ProposalFailure : public Error {
 public:
  using Error::Error;
};

/// Benchmark input outside the declared domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset, schema or configuration file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid argument to a public entry point.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfbo

#endif  // MFBO_ERRORS_HPP
