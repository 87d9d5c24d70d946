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

#include <cstddef>
#include <string>
#include <vector>

#include "fba/tensor.hpp"

namespace fba {

/// One labeled image, pixels [C,H,W] in [0,1].
struct ImageRecord {
  std::string id;
  Tensor pixels;
  int label = 0;  // index into Dataset::categories
};

struct Dataset {
  std::vector<std::string> categories;
  std::vector<ImageRecord> images;

  std::size_t count(int label) const;
  /// Indices of images with the given label, in dataset order.
  std::vector<std::size_t> indices_of(int label) const;
  int label_of(const std::string& category) const;  // throws ArgumentError if unknown
};

}  // namespace fba
