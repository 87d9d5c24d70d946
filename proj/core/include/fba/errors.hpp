// Copyright 2026 The fba Authors. All rights reserved.
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

namespace fba {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Caller passed an argument outside an operation's domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A serialized artifact could not be decoded.
class FormatError : public Error {
 public:
  enum class Kind { bad_magic, version_mismatch, inconsistent, truncated, syntax };

  FormatError(Kind kind, const std::string& what);

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Invalid configuration or command-line usage (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Upstream artifacts missing, stale, or inconsistent with each other.
class ProvenanceError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

const char* to_string(FormatError::Kind kind) noexcept;

}  // namespace fba
