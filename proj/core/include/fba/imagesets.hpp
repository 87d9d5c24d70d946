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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fba/dataset.hpp"
#include "fba/tensor.hpp"

namespace fba {

enum class CompositeKind { array, merged };

const char* to_string(CompositeKind kind) noexcept;

/// A synthesized test image with its ground truth. For arrays, `layout[i]` is
/// the quadrant (0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right) of
/// source i; for merged images it is the blend weight of source i.
struct CompositeRecord {
  std::string id;
  CompositeKind kind = CompositeKind::array;
  Tensor pixels;
  std::vector<std::string> sources;
  std::vector<int> categories;  // label of each source, same order
  std::vector<double> layout;
  std::uint64_t seed = 0;

  bool contains(int label) const;
};

/// Bilinear resampling with half-pixel centres. Same-size resizes return an
/// exact copy and constant images stay constant.
Tensor resize(const Tensor& image, std::size_t new_h, std::size_t new_w);

struct ArrayOptions {
  /// When set, every composite holds exactly one image of this label.
  std::optional<int> target_label;
  /// Source ids that must never be used.
  std::set<std::string> exclude;
};

/// 2x2 grids of four distinct pool images, each resized to target_size/2.
/// Composite i draws from derive_seed(seed, {i}).
std::vector<CompositeRecord> make_array(const Dataset& pool, std::size_t count, std::uint64_t seed,
                                        std::size_t target_size, const ArrayOptions& options = {});

/// weight * A + (1 - weight) * B for images A, B of different categories.
std::vector<CompositeRecord> make_merged(const Dataset& pool, std::size_t count, std::uint64_t seed, double weight = 0.5,
                                         const std::set<std::string>& exclude = {});

/// Rebuilds a composite's pixels from its provenance alone.
Tensor render_composite(const Dataset& pool, const CompositeRecord& record, std::size_t target_size);

/// Manifest: '#' header lines, then one tab-separated record per line:
///   id  kind  sources(,)  categories(,)  layout(,)  seed
void write_manifest(const std::vector<CompositeRecord>& records, const std::vector<std::string>& category_names,
                    const std::filesystem::path& path, const std::string& provenance);
/// Records come back without pixels.
std::vector<CompositeRecord> read_manifest(const std::filesystem::path& path,
                                           const std::vector<std::string>& category_names,
                                           std::string* provenance = nullptr);

/// Stacks composite pixels into one [N,C,H,W] tensor and back.
Tensor stack_pixels(const std::vector<CompositeRecord>& records);
void unstack_pixels(const Tensor& bundle, std::vector<CompositeRecord>& records);

}  // namespace fba
