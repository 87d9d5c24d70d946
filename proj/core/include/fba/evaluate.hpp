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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fba/attention.hpp"
#include "fba/imagesets.hpp"
#include "fba/records.hpp"

namespace fba {

/// Mean-over-folds accuracy of one attended cell against its category's
/// unattended baseline. Accuracies are fractions; delta is in percentage points.
struct DeltaRow {
  std::string category;
  ImagesetKind imageset = ImagesetKind::normal;
  AttentionTag attention;
  double baseline_accuracy = 0.0;
  double accuracy = 0.0;
  double delta = 0.0;
  std::size_t folds = 0;
};

/// One row per (category, imageset, option, layer set, beta), in first-seen
/// order. Throws if an attended cell has no baseline records.
std::vector<DeltaRow> accuracy_delta(std::span<const EvalRecord> records);

/// Best strength per (category, imageset, option, layer set) by mean fold
/// accuracy; ties go to the smaller beta.
std::vector<DeltaRow> best_beta(std::span<const DeltaRow> rows);

struct RocPoint {
  double beta = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Fold-averaged (FPR, TPR) per strength for one (category, imageset, option,
/// layer set) group, ordered by beta. The unattended baseline is the beta = 0
/// point unless the records carry explicit beta = 0 cells.
std::vector<RocPoint> roc_by_strength(std::span<const EvalRecord> records, const std::string& category,
                                      ImagesetKind imageset, ModulationMode mode, Rectification rect,
                                      const std::set<int>& layers);

struct RatePoint {
  double beta = 0.0;
  double delta_fpr = 0.0;  // change from baseline
  double delta_fnr = 0.0;
};

std::vector<RatePoint> rate_trajectory(std::span<const EvalRecord> records, const std::string& category,
                                       ImagesetKind imageset, ModulationMode mode, Rectification rect,
                                       const std::set<int>& layers);

/// Fraction of merged images where neither source category is among the k most
/// probable classes. `probabilities[i]` belongs to `composites[i]`; ranking
/// ties go to the lower class index.
double topk_merged_error(std::span<const std::vector<float>> probabilities, std::span<const CompositeRecord> composites,
                         std::size_t k);

enum class ComparisonAxis { layers, options, mode_within_rectification, rectification_within_mode };

const char* to_string(ComparisonAxis axis) noexcept;

struct ComparisonRequest {
  ComparisonAxis axis = ComparisonAxis::options;
  ImagesetKind imageset = ImagesetKind::array;
  /// Fixed rectification for mode_within_rectification.
  Rectification rectification = Rectification::bidirectional;
  /// Fixed mode for rectification_within_mode.
  ModulationMode mode = ModulationMode::multiplicative;
  /// Option order: swapping it swaps nothing but row order in the result.
  std::vector<std::string> option_order;
  double alpha = 0.05;
};

/// Outcome of one comparison cell (a category, plus a layer or option context).
struct CellComparison {
  std::string category;
  std::string context;
  std::string winner;  // empty on a tie for first place
  std::string runner_up;
  double winner_mean = 0.0;
  double runner_up_mean = 0.0;
  double p_value = 1.0;  // winner vs runner-up over folds
  bool significant = false;
};

struct ComparisonResult {
  std::string axis;
  std::string test;
  std::vector<std::string> options;
  std::vector<std::size_t> wins;
  std::vector<std::size_t> significant_wins;
  /// Per option: two-sided binomial test of its win count against equal
  /// chances for every option.
  std::vector<double> p_values;
  std::vector<CellComparison> cells;
  std::size_t comparisons = 0;
};

/// Win counts: per cell, each option is represented by its best-beta fold
/// accuracies; the highest mean wins, and the win is significant when a paired
/// two-sided Wilcoxon signed-rank test against the runner-up gives p < alpha.
/// Every compared option must cover the same fold ids, with at least two.
ComparisonResult win_histograms(std::span<const EvalRecord> records, const ComparisonRequest& request);

struct PerturbSpec {
  enum class Kind { gaussian, shuffle } kind = Kind::gaussian;
  double scale = 0.0;  // gaussian standard deviation
};

/// Gaussian noise added elementwise, or a permutation of each (layer,
/// category) vector; the stream for (layer, category) is derive_seed(seed, {layer, category}).
FeaturePatternSet perturb_patterns(const FeaturePatternSet& patterns, const PerturbSpec& spec, std::uint64_t seed);

}  // namespace fba
