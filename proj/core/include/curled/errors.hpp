// Copyright 2026 The curled-wm Authors
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

namespace curled {

/// Base class of every error raised by the library. The CLI maps all of
/// these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor or buffer shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation (log of a
/// non-positive value, normalizing a zero vector).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition on arguments or object state.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced where finite values are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File system or parse failure on an external artifact.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace curled
