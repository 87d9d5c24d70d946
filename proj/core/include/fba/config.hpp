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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fba/attention.hpp"
#include "fba/evaluate.hpp"
#include "fba/records.hpp"
#include "fba/trainer.hpp"

namespace fba {

struct DatasetConfig {
  std::string source = "synthetic";  // "synthetic" or "directory"
  std::filesystem::path root;        // directory source: <root>/train and <root>/test
  std::size_t categories = 6;
  std::size_t train_per_category = 120;
  std::size_t test_per_category = 60;
  std::size_t size = 32;
};

struct BackboneConfig {
  std::vector<std::size_t> conv{8, 16, 32};
  std::vector<std::size_t> fc{64, 32};
  TrainHyper hyper;
};

struct ImagesetConfig {
  std::size_t array_count = 360;
  std::size_t merged_count = 360;
  double merged_weight = 0.5;
  bool write_images = false;
};

struct EvaluateConfig {
  std::vector<ImagesetKind> imagesets{ImagesetKind::normal, ImagesetKind::array, ImagesetKind::merged};
  /// Imagesets swept with attention; the rest get baseline rows only.
  std::vector<ImagesetKind> attended{ImagesetKind::array, ImagesetKind::merged};
  std::vector<std::string> categories;  // empty: all
  std::vector<ModulationMode> modes{ModulationMode::additive, ModulationMode::multiplicative};
  std::vector<Rectification> rectifications{Rectification::bidirectional, Rectification::positive};
  std::vector<std::set<int>> layer_sets;  // empty: every single ReLU layer
  std::map<ModulationMode, std::vector<double>> beta{
      {ModulationMode::additive, {4, 8, 12, 16, 20, 24}},
      {ModulationMode::multiplicative, {0.2, 0.4, 0.6, 0.8, 1.0, 1.2}}};
  std::size_t folds = 20;
  std::size_t train_positives = 40;
  std::size_t train_negatives = 40;
  std::size_t test_positives = 50;
  std::size_t test_negatives = 50;
  double reg = 1.0;
  double multi_layer_scale = 0.5;
  bool clamp_slope = false;
  /// Repeat every attended cell with perturbed patterns into control.csv.
  bool control = true;
  PerturbSpec perturb{PerturbSpec::Kind::shuffle, 0.0};
  std::size_t topk = 5;
};

struct AnalyzeConfig {
  double alpha = 0.05;
};

struct RunPaths {
  std::filesystem::path out = "fba-run";
  std::filesystem::path weights;    // default <out>/weights.fbaw
  std::filesystem::path patterns;   // default <out>/patterns.txt
  std::filesystem::path imagesets;  // default <out>/imagesets
  std::filesystem::path results;    // default <out>/results.csv
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  RunPaths paths;
  DatasetConfig dataset;
  BackboneConfig backbone;
  std::size_t pattern_images = 0;  // per category; 0 uses the whole training split
  ImagesetConfig imagesets;
  EvaluateConfig evaluate;
  AnalyzeConfig analyze;

  std::uint64_t master_seed() const;
  /// Canonical JSON of one section ("dataset", "backbone", "patterns",
  /// "imagesets", "evaluate", "analyze"), used for provenance hashing. Paths
  /// are never part of it.
  std::string canonical(const std::string& section) const;
};

/// Parses a JSON config. Unknown keys, wrong types and out-of-range values are
/// rejected with a ConfigError naming the key.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Fills default paths under `out`, then checks values and that the dataset
/// root exists. Throws ConfigError.
void finalize_config(RunConfig& config);

}  // namespace fba
