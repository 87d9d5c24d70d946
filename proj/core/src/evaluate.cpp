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

#include "fba/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <tuple>

#include "fba/errors.hpp"
#include "fba/random.hpp"
#include "fba/stats.hpp"

namespace fba {

namespace {

using FoldAccuracies = std::map<std::size_t, double>;

double mean_of(const FoldAccuracies& folds) {
  double sum = 0.0;
  for (const auto& [fold, acc] : folds) sum += acc;
  return folds.empty() ? 0.0 : sum / static_cast<double>(folds.size());
}

std::string cell_key(const std::string& category, ImagesetKind imageset, const AttentionTag& tag, bool with_beta) {
  std::string key = category + '\x1f' + to_string(imageset) + '\x1f' + tag.option() + '\x1f' + layers_string(tag.layers);
  if (with_beta) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", tag.beta);
    key += '\x1f';
    key += buf;
  }
  return key;
}

std::map<std::pair<std::string, ImagesetKind>, std::vector<const EvalRecord*>> baselines(
    std::span<const EvalRecord> records) {
  std::map<std::pair<std::string, ImagesetKind>, std::vector<const EvalRecord*>> out;
  for (const auto& r : records) {
    if (!r.attention) out[{r.category, r.imageset}].push_back(&r);
  }
  return out;
}

bool same_group(const EvalRecord& r, const std::string& category, ImagesetKind imageset, ModulationMode mode,
                Rectification rect, const std::set<int>& layers) {
  return r.attention && r.category == category && r.imageset == imageset && r.attention->mode == mode &&
         r.attention->rectification == rect && r.attention->layers == layers;
}

struct Rates {
  double fpr = 0.0, tpr = 0.0, fnr = 0.0;
};

Rates fold_mean_rates(const std::vector<const EvalRecord*>& recs) {
  std::vector<const EvalRecord*> sorted = recs;
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->fold < b->fold; });
  Rates out;
  for (const auto* r : sorted) {
    out.fpr += r->fpr();
    out.tpr += r->tpr();
    out.fnr += r->fnr();
  }
  const double n = static_cast<double>(sorted.size());
  return {out.fpr / n, out.tpr / n, out.fnr / n};
}

/// Fold-averaged rates per beta, baseline included as beta 0 unless explicit.
std::map<double, Rates> rates_by_beta(std::span<const EvalRecord> records, const std::string& category,
                                      ImagesetKind imageset, ModulationMode mode, Rectification rect,
                                      const std::set<int>& layers) {
  std::map<double, std::vector<const EvalRecord*>> by_beta;
  for (const auto& r : records) {
    if (same_group(r, category, imageset, mode, rect, layers)) by_beta[r.attention->beta].push_back(&r);
  }
  std::map<double, Rates> out;
  for (const auto& [beta, recs] : by_beta) out[beta] = fold_mean_rates(recs);
  if (!out.contains(0.0)) {
    std::vector<const EvalRecord*> base;
    for (const auto& r : records) {
      if (!r.attention && r.category == category && r.imageset == imageset) base.push_back(&r);
    }
    if (!base.empty()) out[0.0] = fold_mean_rates(base);
  }
  return out;
}

}  // namespace

std::vector<DeltaRow> accuracy_delta(std::span<const EvalRecord> records) {
  const auto base = baselines(records);
  std::map<std::pair<std::string, ImagesetKind>, double> base_mean;
  for (const auto& [key, recs] : base) {
    FoldAccuracies folds;
    for (const auto* r : recs) folds[r->fold] = r->accuracy();
    base_mean[key] = mean_of(folds);
  }

  std::vector<std::string> order;
  std::map<std::string, std::pair<const EvalRecord*, FoldAccuracies>> cells;
  for (const auto& r : records) {
    if (!r.attention) continue;
    const std::string key = cell_key(r.category, r.imageset, *r.attention, true);
    auto [it, inserted] = cells.try_emplace(key, &r, FoldAccuracies{});
    if (inserted) order.push_back(key);
    it->second.second[r.fold] = r.accuracy();
  }

  std::vector<DeltaRow> rows;
  for (const auto& key : order) {
    const auto& [first, folds] = cells.at(key);
    const auto bit = base_mean.find({first->category, first->imageset});
    if (bit == base_mean.end()) {
      throw ArgumentError("no baseline records for category '" + first->category + "' on " +
                          to_string(first->imageset) + " images");
    }
    DeltaRow row;
    row.category = first->category;
    row.imageset = first->imageset;
    row.attention = *first->attention;
    row.baseline_accuracy = bit->second;
    row.accuracy = mean_of(folds);
    row.delta = 100.0 * row.accuracy - 100.0 * row.baseline_accuracy;
    row.folds = folds.size();
    rows.push_back(row);
  }
  return rows;
}

std::vector<DeltaRow> best_beta(std::span<const DeltaRow> rows) {
  std::vector<std::string> order;
  std::map<std::string, DeltaRow> best;
  for (const auto& row : rows) {
    const std::string key = cell_key(row.category, row.imageset, row.attention, false);
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(key, row);
      order.push_back(key);
    } else if (row.accuracy > it->second.accuracy ||
               (row.accuracy == it->second.accuracy && row.attention.beta < it->second.attention.beta)) {
      it->second = row;
    }
  }
  std::vector<DeltaRow> out;
  for (const auto& key : order) out.push_back(best.at(key));
  return out;
}

std::vector<RocPoint> roc_by_strength(std::span<const EvalRecord> records, const std::string& category,
                                      ImagesetKind imageset, ModulationMode mode, Rectification rect,
                                      const std::set<int>& layers) {
  std::vector<RocPoint> out;
  for (const auto& [beta, rates] : rates_by_beta(records, category, imageset, mode, rect, layers)) {
    out.push_back({beta, rates.fpr, rates.tpr});
  }
  return out;
}

std::vector<RatePoint> rate_trajectory(std::span<const EvalRecord> records, const std::string& category,
                                       ImagesetKind imageset, ModulationMode mode, Rectification rect,
                                       const std::set<int>& layers) {
  const auto rates = rates_by_beta(records, category, imageset, mode, rect, layers);
  const auto base = rates.find(0.0);
  if (base == rates.end()) {
    throw ArgumentError("no baseline for the rate trajectory of '" + category + "'");
  }
  std::vector<RatePoint> out;
  for (const auto& [beta, r] : rates) {
    out.push_back({beta, r.fpr - base->second.fpr, r.fnr - base->second.fnr});
  }
  return out;
}

double topk_merged_error(std::span<const std::vector<float>> probabilities, std::span<const CompositeRecord> composites,
                         std::size_t k) {
  if (probabilities.size() != composites.size()) {
    throw ArgumentError("top-k error: " + std::to_string(probabilities.size()) + " softmax outputs for " +
                        std::to_string(composites.size()) + " composites");
  }
  if (composites.empty()) throw ArgumentError("top-k error needs at least one composite");
  if (k == 0) throw ArgumentError("top-k error needs k >= 1");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < composites.size(); ++i) {
    const auto& p = probabilities[i];
    for (int c : composites[i].categories) {
      if (c < 0 || static_cast<std::size_t>(c) >= p.size()) {
        throw ArgumentError("composite " + composites[i].id + " has category " + std::to_string(c) +
                            " outside the softmax range");
      }
    }
    std::vector<std::size_t> idx(p.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    idx.resize(std::min(k, idx.size()));
    const bool hit = std::any_of(composites[i].categories.begin(), composites[i].categories.end(), [&](int c) {
      return std::find(idx.begin(), idx.end(), static_cast<std::size_t>(c)) != idx.end();
    });
    errors += hit ? 0 : 1;
  }
  return static_cast<double>(errors) / static_cast<double>(composites.size());
}

const char* to_string(ComparisonAxis axis) noexcept {
  switch (axis) {
    case ComparisonAxis::layers:
      return "layers";
    case ComparisonAxis::options:
      return "options";
    case ComparisonAxis::mode_within_rectification:
      return "mode-within-rectification";
    case ComparisonAxis::rectification_within_mode:
      return "rectification-within-mode";
  }
  return "?";
}

ComparisonResult win_histograms(std::span<const EvalRecord> records, const ComparisonRequest& request) {
  // Best-beta fold accuracies per (category, option, layer set).
  struct Cell {
    AttentionTag tag;
    std::map<double, FoldAccuracies> by_beta;
  };
  std::map<std::tuple<std::string, std::string, std::string>, Cell> cells;
  for (const auto& r : records) {
    if (!r.attention || r.imageset != request.imageset) continue;
    auto& cell = cells[{r.category, r.attention->option(), layers_string(r.attention->layers)}];
    cell.tag = *r.attention;
    cell.by_beta[r.attention->beta][r.fold] = r.accuracy();
  }

  // group key -> (candidate label -> fold accuracies)
  std::map<std::pair<std::string, std::string>, std::map<std::string, FoldAccuracies>> groups;
  for (const auto& [key, cell] : cells) {
    const FoldAccuracies* best = nullptr;
    double best_mean = -1.0;
    for (const auto& [beta, folds] : cell.by_beta) {  // ascending beta; strict > keeps the smaller on ties
      const double m = mean_of(folds);
      if (m > best_mean) {
        best_mean = m;
        best = &folds;
      }
    }
    const auto& [category, option, layers] = key;
    const AttentionTag& tag = cell.tag;
    switch (request.axis) {
      case ComparisonAxis::options:
        groups[{category, "layers " + layers}][option] = *best;
        break;
      case ComparisonAxis::layers:
        if (tag.layers.size() == 1) groups[{category, option}][layers] = *best;
        break;
      case ComparisonAxis::mode_within_rectification:
        if (tag.rectification == request.rectification) {
          groups[{category, "layers " + layers + " " + to_string(tag.rectification)}][to_string(tag.mode)] = *best;
        }
        break;
      case ComparisonAxis::rectification_within_mode:
        if (tag.mode == request.mode) {
          groups[{category, "layers " + layers + " " + to_string(tag.mode)}][to_string(tag.rectification)] = *best;
        }
        break;
    }
  }

  ComparisonResult result;
  result.axis = to_string(request.axis);
  result.test = "paired two-sided Wilcoxon signed-rank over folds, alpha " + std::to_string(request.alpha);
  std::set<std::string> seen;
  for (const auto& [gk, candidates] : groups) {
    for (const auto& [label, folds] : candidates) seen.insert(label);
  }
  result.options = request.option_order;
  for (const auto& label : seen) {
    if (std::find(result.options.begin(), result.options.end(), label) == result.options.end()) {
      result.options.push_back(label);
    }
  }
  if (request.axis == ComparisonAxis::layers && request.option_order.empty()) {
    std::sort(result.options.begin(), result.options.end(),
              [](const std::string& a, const std::string& b) { return std::stoi(a) < std::stoi(b); });
  }
  result.wins.assign(result.options.size(), 0);
  result.significant_wins.assign(result.options.size(), 0);
  auto index_of = [&](const std::string& label) {
    return static_cast<std::size_t>(std::find(result.options.begin(), result.options.end(), label) -
                                    result.options.begin());
  };

  for (const auto& [gk, candidates] : groups) {
    if (candidates.size() < 2) continue;
    const FoldAccuracies& reference = candidates.begin()->second;
    for (const auto& [label, folds] : candidates) {
      if (folds.size() < 2) {
        throw ArgumentError("comparison needs at least two folds per cell; '" + label + "' for '" + gk.first +
                            "' has " + std::to_string(folds.size()));
      }
      bool same = folds.size() == reference.size();
      for (auto a = folds.begin(), b = reference.begin(); same && a != folds.end(); ++a, ++b) same = a->first == b->first;
      if (!same) throw ArgumentError("unbalanced fold sets for category '" + gk.first + "' (" + gk.second + ")");
    }
    std::vector<std::pair<std::string, double>> ranked;
    for (const auto& [label, folds] : candidates) ranked.emplace_back(label, mean_of(folds));
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    CellComparison cmp;
    cmp.category = gk.first;
    cmp.context = gk.second;
    cmp.winner_mean = ranked[0].second;
    cmp.runner_up_mean = ranked[1].second;
    ++result.comparisons;
    if (ranked[0].second > ranked[1].second) {
      cmp.winner = ranked[0].first;
      cmp.runner_up = ranked[1].first;
      std::vector<double> a, b;
      for (const auto& [fold, acc] : candidates.at(cmp.winner)) a.push_back(acc);
      for (const auto& [fold, acc] : candidates.at(cmp.runner_up)) b.push_back(acc);
      cmp.p_value = wilcoxon_signed_rank(a, b).p_value;
      cmp.significant = cmp.p_value < request.alpha;
      const std::size_t w = index_of(cmp.winner);
      ++result.wins[w];
      if (cmp.significant) ++result.significant_wins[w];
    }
    result.cells.push_back(cmp);
  }
  for (std::size_t i = 0; i < result.options.size(); ++i) {
    result.p_values.push_back(result.comparisons && result.options.size() > 1
                                  ? binomial_test(result.wins[i], result.comparisons,
                                                  1.0 / static_cast<double>(result.options.size()))
                                  : 1.0);
  }
  return result;
}

FeaturePatternSet perturb_patterns(const FeaturePatternSet& patterns, const PerturbSpec& spec, std::uint64_t seed) {
  if (spec.kind == PerturbSpec::Kind::gaussian && !(spec.scale >= 0.0)) {
    throw ArgumentError("perturbation scale must be >= 0");
  }
  FeaturePatternSet out = patterns;
  if (spec.kind == PerturbSpec::Kind::gaussian && spec.scale == 0.0) return out;
  for (auto& [key, values] : out.patterns) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(key.first), static_cast<std::uint64_t>(key.second)}));
    if (spec.kind == PerturbSpec::Kind::shuffle) {
      shuffle(values.begin(), values.end(), rng);
    } else {
      for (float& v : values) v = static_cast<float>(v + spec.scale * normal01(rng));
    }
  }
  return out;
}

}  // namespace fba
