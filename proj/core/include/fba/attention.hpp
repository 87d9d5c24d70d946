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
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fba/network.hpp"

namespace fba {

enum class Rectification { bidirectional, positive };

const char* to_string(ModulationMode mode) noexcept;
const char* to_string(Rectification rect) noexcept;
ModulationMode parse_mode(const std::string& text);
Rectification parse_rectification(const std::string& text);

/// Mean activity of each feature map at one ReLU layer: element k averages
/// map k over its h*w positions. Fully connected layers return the node
/// activities themselves.
std::vector<double> spatial_average(const ForwardTrace& trace, int relu_index);

/// Per-layer activity statistics over a labelled image set: overall mean and
/// population standard deviation, plus per-category means. Partial summaries
/// merge with Chan's pairwise update, so accumulation order only affects
/// floating-point rounding.
class ActivitySummary {
 public:
  ActivitySummary() = default;
  /// `channels[r-1]` is the map count of ReLU r.
  ActivitySummary(std::vector<std::string> categories, std::vector<std::size_t> channels);

  /// Adds one image: `activity[r-1]` is spatial_average at ReLU r.
  void add(int category, const std::vector<std::vector<double>>& activity);
  void merge(const ActivitySummary& other);

  const std::vector<std::string>& categories() const noexcept { return categories_; }
  const std::vector<std::size_t>& channels() const noexcept { return channels_; }
  int layers() const noexcept { return static_cast<int>(channels_.size()); }
  std::size_t total() const noexcept { return total_; }
  std::size_t count(int category) const { return counts_.at(static_cast<std::size_t>(category)); }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }

  std::vector<double> mean(int relu_index) const;
  std::vector<double> stddev(int relu_index) const;  // population (1/N)
  std::vector<double> category_mean(int relu_index, int category) const;

 private:
  struct Moments {
    std::size_t n = 0;
    std::vector<double> mean;
    std::vector<double> m2;
    void add(const std::vector<double>& x);
    void merge(const Moments& other);
  };
  const Moments& moments(int relu_index, int category) const;

  std::vector<std::string> categories_;
  std::vector<std::size_t> channels_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
  std::vector<std::vector<Moments>> moments_;  // [category][layer]
};

/// Category feature patterns: for ReLU layer r and category c, the category
/// mean activity minus the overall mean, divided by the overall standard
/// deviation, per feature map.
struct FeaturePatternSet {
  Rectification rectification = Rectification::bidirectional;
  std::vector<std::string> categories;
  std::vector<std::size_t> counts;    // source images per category
  std::vector<std::size_t> channels;  // per ReLU layer
  std::map<std::pair<int, int>, std::vector<float>> patterns;  // (relu_index, category) -> f

  bool has(int relu_index, int category) const { return patterns.contains({relu_index, category}); }
  const std::vector<float>& at(int relu_index, int category) const;
  int category_index(const std::string& name) const;
  /// Copy with the given rectification applied (positive clamps negatives to 0).
  FeaturePatternSet rectified(Rectification rect) const;
};

/// Feature maps whose standard deviation is zero get a zero pattern element.
FeaturePatternSet build_patterns(const ActivitySummary& summary, Rectification rectification);

struct AttentionConfig {
  ModulationMode mode = ModulationMode::multiplicative;
  Rectification rectification = Rectification::bidirectional;
  std::set<int> layers;
  double beta = 0.0;
  /// Strength multiplier used when more than one layer is targeted.
  double multi_layer_scale = 0.5;
  /// Floors multiplicative slopes at zero; off reproduces (1 + beta f) literally.
  bool clamp_slope = false;

  double effective_beta() const { return layers.size() > 1 ? beta * multi_layer_scale : beta; }
  void validate() const;
};

/// Per-map terms for one layer: beta_eff * f (additive) or 1 + beta_eff * f
/// (multiplicative), with f rectified per the config.
std::vector<double> modulation_terms(const AttentionConfig& config, const FeaturePatternSet& patterns, int relu_index,
                                     int category);

/// Terms for every targeted layer. Throws before any compute if a pattern is missing.
ReluModulation make_modulation(const AttentionConfig& config, const FeaturePatternSet& patterns, int category);

/// Forward pass with attention to `category` applied per `config`.
ForwardTrace attended_forward(const Model& model, const Tensor& image, const AttentionConfig& config,
                              const FeaturePatternSet& patterns, int category);

/// Structured-text pattern file; see pattern_io.cpp for the layout. Values are
/// written with 9 significant digits, which round-trips float exactly.
void save_patterns(const FeaturePatternSet& patterns, const std::filesystem::path& path, const std::string& network_hash);
FeaturePatternSet load_patterns(const std::filesystem::path& path, std::string* network_hash = nullptr);
std::string encode_patterns(const FeaturePatternSet& patterns, const std::string& network_hash);
FeaturePatternSet decode_patterns(const std::string& text, std::string* network_hash = nullptr);

}  // namespace fba
