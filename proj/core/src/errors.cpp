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

#include "fba/errors.hpp"

namespace fba {

const char* to_string(FormatError::Kind kind) noexcept {
  switch (kind) {
    case FormatError::Kind::bad_magic:
      return "bad magic";
    case FormatError::Kind::version_mismatch:
      return "version mismatch";
    case FormatError::Kind::inconsistent:
      return "inconsistent metadata";
    case FormatError::Kind::truncated:
      return "truncated payload";
    case FormatError::Kind::syntax:
      return "syntax error";
  }
  return "unknown";
}

FormatError::FormatError(Kind kind, const std::string& what)
    : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace fba
