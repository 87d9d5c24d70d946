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
#include <optional>
#include <set>
#include <string>

#include "fba/attention.hpp"

namespace fba {

enum class ImagesetKind { normal, array, merged };

const char* to_string(ImagesetKind kind) noexcept;
ImagesetKind parse_imageset(const std::string& text);

/// The attention part of a sweep cell; absent for the unattended baseline.
struct AttentionTag {
  ModulationMode mode = ModulationMode::multiplicative;
  Rectification rectification = Rectification::bidirectional;
  std::set<int> layers;
  double beta = 0.0;

  /// "multiplicative-bidirectional"
  std::string option() const;
  bool operator==(const AttentionTag&) const = default;
};

/// Layer sets print as "5" or "4+5".
std::string layers_string(const std::set<int>& layers);
std::set<int> parse_layers(const std::string& text);

/// Detection counts of one fold's classifier on one test set.
struct EvalRecord {
  std::string category;
  ImagesetKind imageset = ImagesetKind::normal;
  std::optional<AttentionTag> attention;
  std::size_t fold = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  double accuracy() const noexcept {
    return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
  }
  double tpr() const noexcept { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  double fpr() const noexcept { return fp + tn ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0; }
  double fnr() const noexcept { return tp + fn ? static_cast<double>(fn) / static_cast<double>(tp + fn) : 0.0; }

  bool operator==(const EvalRecord&) const = default;
};

}  // namespace fba
