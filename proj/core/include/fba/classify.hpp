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
#include <span>
#include <string>
#include <vector>

#include "fba/records.hpp"

namespace fba {

using FeatureVector = std::vector<float>;

/// L2-regularized logistic regression on standardized features.
struct BinaryClassifier {
  std::vector<double> weights;
  double bias = 0.0;
  double reg = 1.0;
  std::vector<double> feature_mean;   // standardization from the training fold
  std::vector<double> feature_scale;  // 1 / stddev, or 1 for constant dimensions
  std::string category;
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  // Fit diagnostics.
  double objective = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
};

struct BinaryFitOptions {
  std::size_t max_iterations = 50000;
  double tolerance = 1e-6;  // on the gradient norm of the objective
  bool standardize = true;
};

/// Minimizes sum_i log(1 + exp(-y_i s_i)) + reg/2 |w|^2 by full-batch gradient
/// descent with backtracking, starting from a small seeded random w.
/// `labels` are 1 (present) or 0 (absent); both must occur.
BinaryClassifier train_binary(std::span<const FeatureVector> features, std::span<const int> labels, double reg,
                              std::uint64_t seed, const BinaryFitOptions& options = {});

/// Objective value of a classifier on (unstandardized) training data.
double binary_objective(const BinaryClassifier& model, std::span<const FeatureVector> features,
                        std::span<const int> labels);

struct Prediction {
  double score = 0.0;
  bool present = false;  // score > 0; an exact tie counts as absent
};

Prediction predict(const BinaryClassifier& model, std::span<const float> features);

/// Per-fold training subsets, as row indices into a feature table.
struct Fold {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  std::uint64_t seed = 0;
};

struct FoldPlan {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::vector<Fold> folds;
};

/// Fold f samples n_pos of `positive_pool` and n_neg of `negative_pool` without
/// replacement from derive_seed(seed, {f}).
FoldPlan make_fold_plan(std::span<const std::size_t> positive_pool, std::span<const std::size_t> negative_pool,
                        std::size_t n_pos, std::size_t n_neg, std::size_t folds, std::uint64_t seed);

/// Features with presence labels for one category's test images.
struct TestSet {
  std::vector<FeatureVector> features;
  std::vector<int> present;  // 1 if the category is in the image
};

std::vector<BinaryClassifier> train_folds(const FoldPlan& plan, std::span<const FeatureVector> table,
                                          const std::string& category, double reg);

/// One EvalRecord per classifier; `key` supplies category, imageset and attention.
std::vector<EvalRecord> score_folds(std::span<const BinaryClassifier> classifiers, const TestSet& test,
                                    const EvalRecord& key);

/// train_folds followed by score_folds. Classifiers always see the
/// unattended training features; only the test features carry attention.
std::vector<EvalRecord> run_folds(const FoldPlan& plan, std::span<const FeatureVector> table, const TestSet& test,
                                  const EvalRecord& key, double reg);

}  // namespace fba
