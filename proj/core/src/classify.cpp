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

#include "fba/classify.hpp"

#include <algorithm>
#include <cmath>

#include "fba/errors.hpp"
#include "fba/random.hpp"

namespace fba {

const char* to_string(ImagesetKind kind) noexcept {
  switch (kind) {
    case ImagesetKind::normal:
      return "normal";
    case ImagesetKind::array:
      return "array";
    case ImagesetKind::merged:
      return "merged";
  }
  return "?";
}

ImagesetKind parse_imageset(const std::string& text) {
  if (text == "normal") return ImagesetKind::normal;
  if (text == "array") return ImagesetKind::array;
  if (text == "merged") return ImagesetKind::merged;
  throw ArgumentError("unknown imageset '" + text + "' (normal|array|merged)");
}

std::string AttentionTag::option() const {
  return std::string(to_string(mode)) + "-" + to_string(rectification);
}

std::string layers_string(const std::set<int>& layers) {
  std::string out;
  for (int l : layers) {
    if (!out.empty()) out += '+';
    out += std::to_string(l);
  }
  return out;
}

std::set<int> parse_layers(const std::string& text) {
  std::set<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('+', start), text.size());
    const std::string part = text.substr(start, end - start);
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw ArgumentError("bad layer set '" + text + "'");
    }
    out.insert(std::stoi(part));
    start = end + 1;
  }
  return out;
}

namespace {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }
double sigmoid(double t) { return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t)); }

struct Problem {
  std::vector<std::vector<double>> z;  // standardized rows
  std::vector<double> y;               // +1 / -1
  double reg;

  double value(const std::vector<double>& w, double b) const {
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) total += softplus(-y[i] * score(w, b, i));
    double sq = 0.0;
    for (double v : w) sq += v * v;
    return total + 0.5 * reg * sq;
  }

  double score(const std::vector<double>& w, double b, std::size_t i) const {
    double s = b;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * z[i][j];
    return s;
  }

  /// Gradient; returns the objective value as a by-product.
  double gradient(const std::vector<double>& w, double b, std::vector<double>& gw, double& gb) const {
    gw.assign(w.size(), 0.0);
    gb = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double m = -y[i] * score(w, b, i);
      total += softplus(m);
      const double coef = -y[i] * sigmoid(m);
      for (std::size_t j = 0; j < w.size(); ++j) gw[j] += coef * z[i][j];
      gb += coef;
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      gw[j] += reg * w[j];
      sq += w[j] * w[j];
    }
    return total + 0.5 * reg * sq;
  }
};

double norm(const std::vector<double>& gw, double gb) {
  double sq = gb * gb;
  for (double v : gw) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace

BinaryClassifier train_binary(std::span<const FeatureVector> features, std::span<const int> labels, double reg,
                              std::uint64_t seed, const BinaryFitOptions& options) {
  if (features.size() != labels.size() || features.empty()) {
    throw ArgumentError("classifier training needs aligned, non-empty features and labels");
  }
  if (!(reg > 0.0)) throw ArgumentError("regularization strength must be positive");
  const std::size_t n = features.size(), d = features.front().size();
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (features[i].size() != d) throw ShapeError("feature rows have different lengths");
    if (labels[i] != 0 && labels[i] != 1) throw ArgumentError("labels must be 0 or 1");
    positives += static_cast<std::size_t>(labels[i]);
  }
  if (positives == 0 || positives == n) throw ArgumentError("classifier training needs both present and absent examples");

  BinaryClassifier model;
  model.reg = reg;
  model.seed = seed;
  model.feature_mean.assign(d, 0.0);
  model.feature_scale.assign(d, 1.0);
  if (options.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += features[i][j];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) var += (features[i][j] - mean) * (features[i][j] - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      model.feature_mean[j] = mean;
      model.feature_scale[j] = sd > 0.0 ? 1.0 / sd : 1.0;
    }
  }

  Problem prob;
  prob.reg = reg;
  prob.z.assign(n, std::vector<double>(d));
  prob.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) prob.z[i][j] = (features[i][j] - model.feature_mean[j]) * model.feature_scale[j];
    prob.y[i] = labels[i] ? 1.0 : -1.0;
  }

  // Diagonal preconditioner from a curvature bound per coordinate.
  std::vector<double> precond(d);
  for (std::size_t j = 0; j < d; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += prob.z[i][j] * prob.z[i][j];
    precond[j] = 1.0 / (0.25 * sq + reg);
  }
  const double precond_b = 1.0 / (0.25 * static_cast<double>(n));

  Rng rng(seed);
  std::vector<double> w(d);
  for (double& v : w) v = 0.01 * normal01(rng);
  double b = 0.0;

  std::vector<double> gw, trial_w(d);
  double gb = 0.0;
  double f = prob.gradient(w, b, gw, gb);
  double step = 1.0;
  std::size_t it = 0;
  for (; it < options.max_iterations && norm(gw, gb) >= options.tolerance; ++it) {
    double decrease = gb * gb * precond_b;
    for (std::size_t j = 0; j < d; ++j) decrease += gw[j] * gw[j] * precond[j];
    step = std::min(step * 2.0, 1.0);
    double trial_b = 0.0, trial_f = 0.0;
    for (;;) {
      for (std::size_t j = 0; j < d; ++j) trial_w[j] = w[j] - step * precond[j] * gw[j];
      trial_b = b - step * precond_b * gb;
      trial_f = prob.value(trial_w, trial_b);
      if (trial_f <= f - 0.5 * step * decrease || step < 1e-12) break;
      step *= 0.5;
    }
    if (!(trial_f < f)) break;  // no further progress representable
    w.swap(trial_w);
    b = trial_b;
    f = prob.gradient(w, b, gw, gb);
  }
  model.weights = std::move(w);
  model.bias = b;
  model.objective = f;
  model.gradient_norm = norm(gw, gb);
  model.iterations = it;
  return model;
}

double binary_objective(const BinaryClassifier& model, std::span<const FeatureVector> features,
                        std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double s = predict(model, features[i]).score;
    total += softplus(labels[i] ? -s : s);
  }
  double sq = 0.0;
  for (double v : model.weights) sq += v * v;
  return total + 0.5 * model.reg * sq;
}

Prediction predict(const BinaryClassifier& model, std::span<const float> features) {
  if (features.size() != model.weights.size()) {
    throw ShapeError("classifier expects " + std::to_string(model.weights.size()) + " features, got " +
                     std::to_string(features.size()));
  }
  double s = model.bias;
  for (std::size_t j = 0; j < features.size(); ++j) {
    s += model.weights[j] * ((features[j] - model.feature_mean[j]) * model.feature_scale[j]);
  }
  return {s, s > 0.0};
}

FoldPlan make_fold_plan(std::span<const std::size_t> positive_pool, std::span<const std::size_t> negative_pool,
                        std::size_t n_pos, std::size_t n_neg, std::size_t folds, std::uint64_t seed) {
  if (n_pos == 0 || n_neg == 0 || folds == 0) throw ArgumentError("fold plan needs positive counts and at least one fold");
  if (positive_pool.size() < n_pos) {
    throw ArgumentError("need " + std::to_string(n_pos) + " positive training images per fold, only " +
                        std::to_string(positive_pool.size()) + " available");
  }
  if (negative_pool.size() < n_neg) {
    throw ArgumentError("need " + std::to_string(n_neg) + " negative training images per fold, only " +
                        std::to_string(negative_pool.size()) + " available");
  }
  FoldPlan plan{n_pos, n_neg, {}};
  for (std::size_t f = 0; f < folds; ++f) {
    Fold fold;
    fold.seed = derive_seed(seed, {f});
    Rng rng(fold.seed);
    auto draw = [&](std::span<const std::size_t> pool, std::size_t k) {
      std::vector<std::size_t> v(pool.begin(), pool.end());
      for (std::size_t i = 0; i < k; ++i) std::swap(v[i], v[i + uniform_index(rng, v.size() - i)]);
      v.resize(k);
      return v;
    };
    fold.positives = draw(positive_pool, n_pos);
    fold.negatives = draw(negative_pool, n_neg);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

std::vector<BinaryClassifier> train_folds(const FoldPlan& plan, std::span<const FeatureVector> table,
                                          const std::string& category, double reg) {
  std::vector<BinaryClassifier> out;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    const Fold& fold = plan.folds[f];
    std::vector<FeatureVector> x;
    std::vector<int> y;
    for (std::size_t i : fold.positives) {
      x.push_back(table[i]);
      y.push_back(1);
    }
    for (std::size_t i : fold.negatives) {
      x.push_back(table[i]);
      y.push_back(0);
    }
    BinaryClassifier c = train_binary(x, y, reg, fold.seed);
    c.category = category;
    c.fold = f;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<EvalRecord> score_folds(std::span<const BinaryClassifier> classifiers, const TestSet& test,
                                    const EvalRecord& key) {
  if (test.features.size() != test.present.size()) throw ArgumentError("test features and labels are misaligned");
  std::vector<EvalRecord> out;
  for (const auto& c : classifiers) {
    EvalRecord rec = key;
    rec.fold = c.fold;
    rec.tp = rec.fp = rec.tn = rec.fn = 0;
    for (std::size_t i = 0; i < test.features.size(); ++i) {
      const bool said = predict(c, test.features[i]).present;
      if (test.present[i]) {
        (said ? rec.tp : rec.fn) += 1;
      } else {
        (said ? rec.fp : rec.tn) += 1;
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<EvalRecord> run_folds(const FoldPlan& plan, std::span<const FeatureVector> table, const TestSet& test,
                                  const EvalRecord& key, double reg) {
  const auto classifiers = train_folds(plan, table, key.category, reg);
  return score_folds(classifiers, test, key);
}

}  // namespace fba
