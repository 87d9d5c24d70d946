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

#include <gtest/gtest.h>

#include <algorithm>

#include "fba/errors.hpp"
#include "fba/evaluate.hpp"
#include "fba/random.hpp"

namespace {

using fba::EvalRecord;
using fba::ImagesetKind;
using fba::ModulationMode;
using fba::Rectification;

fba::AttentionTag tag(double beta, std::set<int> layers = {5}, ModulationMode mode = ModulationMode::multiplicative,
                      Rectification rect = Rectification::bidirectional) {
  return {mode, rect, std::move(layers), beta};
}

EvalRecord rec(const std::string& cat, std::optional<fba::AttentionTag> att, std::size_t fold, std::size_t tp,
               std::size_t fp, std::size_t tn, std::size_t fn, ImagesetKind set = ImagesetKind::array) {
  EvalRecord r;
  r.category = cat;
  r.imageset = set;
  r.attention = std::move(att);
  r.fold = fold;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  return r;
}

TEST(Records, RatesOnIntegerCounts) {
  const auto r = rec("a", std::nullopt, 0, 7, 3, 11, 5);
  EXPECT_DOUBLE_EQ(r.accuracy(), 18.0 / 26.0);
  EXPECT_DOUBLE_EQ(r.tpr(), 7.0 / 12.0);
  EXPECT_DOUBLE_EQ(r.fpr(), 3.0 / 14.0);
  EXPECT_DOUBLE_EQ(r.fnr(), 5.0 / 12.0);
  EXPECT_EQ(fba::layers_string({4, 5}), "4+5");
  EXPECT_EQ(fba::parse_layers("1+3+5"), (std::set<int>{1, 3, 5}));
  EXPECT_THROW(fba::parse_layers("1+"), fba::ArgumentError);
  EXPECT_EQ(tag(1.0).option(), "multiplicative-bidirectional");
}

TEST(AccuracyDelta, ReportedArrayGain) {
  // 59.29% without attention and 71.78% with it, over 10000 test images.
  const std::vector<EvalRecord> records{rec("cat", std::nullopt, 0, 2929, 2000, 3000, 2071),
                                        rec("cat", tag(0.8), 0, 4178, 0, 3000, 2822)};
  const auto rows = fba::accuracy_delta(records);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].baseline_accuracy, 0.5929, 1e-12);
  EXPECT_NEAR(rows[0].accuracy, 0.7178, 1e-12);
  EXPECT_NEAR(rows[0].delta, 12.49, 1e-9);
}

TEST(AccuracyDelta, FoldMeansAndZeroStrength) {
  std::vector<EvalRecord> records;
  for (std::size_t f = 0; f < 3; ++f) {
    records.push_back(rec("a", std::nullopt, f, 5 + f, 5, 5, 5 - f));
    records.push_back(rec("a", tag(0.0), f, 5 + f, 5, 5, 5 - f));
    records.push_back(rec("a", tag(0.4), f, 6 + f, 4, 6, 4 - f));
    records.push_back(rec("b", std::nullopt, f, 2, 8, 2, 8));
    records.push_back(rec("b", tag(0.0, {2}, ModulationMode::additive, Rectification::positive), f, 2, 8, 2, 8));
  }
  const auto rows = fba::accuracy_delta(records);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].attention.beta, 0.0);
  EXPECT_EQ(rows[0].delta, 0.0);
  EXPECT_EQ(rows[0].folds, 3u);
  // Baseline accuracies 10/20, 11/20, 12/20; attended 12/20, 13/20, 14/20.
  EXPECT_NEAR(rows[1].baseline_accuracy, 0.55, 1e-12);
  EXPECT_NEAR(rows[1].accuracy, 0.65, 1e-12);
  EXPECT_NEAR(rows[1].delta, 10.0, 1e-12);
  EXPECT_EQ(rows[2].category, "b");
  EXPECT_EQ(rows[2].delta, 0.0);

  records.push_back(rec("c", tag(0.2), 0, 1, 1, 1, 1));
  EXPECT_THROW(fba::accuracy_delta(records), fba::ArgumentError);
}

TEST(BestBeta, TiesGoToTheWeakerStrength) {
  std::vector<EvalRecord> records{rec("a", std::nullopt, 0, 5, 5, 5, 5)};
  for (double beta : {0.2, 0.4, 0.6, 0.8}) {
    const std::size_t good = beta == 0.4 || beta == 0.6 ? 8 : 6;
    records.push_back(rec("a", tag(beta), 0, good, 10 - good, good, 10 - good));
  }
  records.push_back(rec("a", tag(0.2, {3}), 0, 9, 1, 5, 5));
  const auto best = fba::best_beta(fba::accuracy_delta(records));
  ASSERT_EQ(best.size(), 2u);
  EXPECT_EQ(best[0].attention.layers, std::set<int>{5});
  EXPECT_EQ(best[0].attention.beta, 0.4);
  EXPECT_NEAR(best[0].delta, 30.0, 1e-12);
  EXPECT_EQ(best[1].attention.layers, std::set<int>{3});
}

TEST(Roc, PointsPerStrength) {
  std::vector<EvalRecord> records;
  for (std::size_t f = 0; f < 2; ++f) {
    records.push_back(rec("a", std::nullopt, f, 4, 2, 8, 6));          // tpr .4, fpr .2
    records.push_back(rec("a", tag(1.0), f, 10, 0, 10, 0));            // perfect
    records.push_back(rec("a", tag(0.5), f, 6 + f, 3, 7, 4 - f));      // tpr .6/.7, fpr .3
    records.push_back(rec("a", tag(0.5, {4}), f, 0, 10, 0, 10));       // other layer set
  }
  const auto roc = fba::roc_by_strength(records, "a", ImagesetKind::array, ModulationMode::multiplicative,
                                        Rectification::bidirectional, {5});
  ASSERT_EQ(roc.size(), 3u);
  EXPECT_EQ(roc[0].beta, 0.0);
  EXPECT_NEAR(roc[0].tpr, 0.4, 1e-12);
  EXPECT_NEAR(roc[0].fpr, 0.2, 1e-12);
  EXPECT_EQ(roc[1].beta, 0.5);
  EXPECT_NEAR(roc[1].tpr, 0.65, 1e-12);
  EXPECT_NEAR(roc[1].fpr, 0.3, 1e-12);
  EXPECT_EQ(roc[2].fpr, 0.0);
  EXPECT_EQ(roc[2].tpr, 1.0);

  const auto traj = fba::rate_trajectory(records, "a", ImagesetKind::array, ModulationMode::multiplicative,
                                         Rectification::bidirectional, {5});
  ASSERT_EQ(traj.size(), 3u);
  EXPECT_EQ(traj[0].delta_fpr, 0.0);
  EXPECT_EQ(traj[0].delta_fnr, 0.0);
  EXPECT_NEAR(traj[1].delta_fpr, 0.1, 1e-12);
  EXPECT_NEAR(traj[1].delta_fnr, -0.25, 1e-12);
  EXPECT_NEAR(traj[2].delta_fnr, -0.6, 1e-12);

  EXPECT_THROW(fba::rate_trajectory(records, "zzz", ImagesetKind::array, ModulationMode::multiplicative,
                                    Rectification::bidirectional, {5}),
               fba::ArgumentError);
}

fba::CompositeRecord merged_of(int a, int b) {
  fba::CompositeRecord r;
  r.kind = fba::CompositeKind::merged;
  r.categories = {a, b};
  r.sources = {"x", "y"};
  r.layout = {0.5, 0.5};
  return r;
}

TEST(TopK, HandTableAndMonotonicity) {
  const std::vector<std::vector<float>> probs{
      {0.5f, 0.3f, 0.1f, 0.1f},  // top1 {0}
      {0.1f, 0.2f, 0.3f, 0.4f},  // top1 {3}, top2 {3,2}
      {0.4f, 0.3f, 0.2f, 0.1f},  // top2 {0,1}
      {0.25f, 0.25f, 0.25f, 0.25f},  // ties by index: top1 {0}, top2 {0,1}
  };
  const std::vector<fba::CompositeRecord> comps{merged_of(0, 1), merged_of(2, 1), merged_of(2, 3), merged_of(1, 2)};
  EXPECT_DOUBLE_EQ(fba::topk_merged_error(probs, comps, 1), 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(fba::topk_merged_error(probs, comps, 2), 1.0 / 4.0);
  EXPECT_DOUBLE_EQ(fba::topk_merged_error(probs, comps, 3), 0.0);
  EXPECT_DOUBLE_EQ(fba::topk_merged_error(probs, comps, 4), 0.0);

  fba::Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<float>> p(20, std::vector<float>(6));
    std::vector<fba::CompositeRecord> c;
    for (auto& row : p) {
      for (float& v : row) v = static_cast<float>(fba::uniform01(rng));
      const int a = static_cast<int>(fba::uniform_index(rng, 6));
      c.push_back(merged_of(a, (a + 1 + static_cast<int>(fba::uniform_index(rng, 5))) % 6));
    }
    double prev = 1.0;
    for (std::size_t k = 1; k <= 6; ++k) {
      const double e = fba::topk_merged_error(p, c, k);
      EXPECT_LE(e, prev);
      prev = e;
    }
    EXPECT_EQ(prev, 0.0);
  }
}

TEST(TopK, DegenerateBlendWithPerfectClassifier) {
  // A weight->1 blend shows only source A; a perfect classifier puts all mass on it.
  std::vector<std::vector<float>> probs;
  std::vector<fba::CompositeRecord> comps;
  for (int a = 0; a < 5; ++a) {
    std::vector<float> p(5, 0.0f);
    p[static_cast<std::size_t>(a)] = 1.0f;
    probs.push_back(p);
    comps.push_back(merged_of(a, (a + 2) % 5));
  }
  EXPECT_EQ(fba::topk_merged_error(probs, comps, 1), 0.0);
}

TEST(TopK, Rejections) {
  const std::vector<std::vector<float>> probs{{0.5f, 0.5f}};
  EXPECT_THROW(fba::topk_merged_error(probs, std::vector<fba::CompositeRecord>{}, 1), fba::ArgumentError);
  EXPECT_THROW(fba::topk_merged_error(probs, std::vector<fba::CompositeRecord>{merged_of(0, 1)}, 0), fba::ArgumentError);
  EXPECT_THROW(fba::topk_merged_error(probs, std::vector<fba::CompositeRecord>{merged_of(0, 2)}, 1), fba::ArgumentError);
}

/// Records for two options over `folds` folds, with per-fold accuracies given in percent of 100 images.
std::vector<EvalRecord> two_options(const std::vector<int>& mult, const std::vector<int>& add,
                                    const std::string& category = "a") {
  std::vector<EvalRecord> out;
  for (std::size_t f = 0; f < mult.size(); ++f) {
    out.push_back(rec(category, tag(0.5), f, static_cast<std::size_t>(mult[f]), 0, 0, static_cast<std::size_t>(100 - mult[f])));
    out.push_back(rec(category, tag(4.0, {5}, ModulationMode::additive), f, static_cast<std::size_t>(add[f]), 0, 0,
                      static_cast<std::size_t>(100 - add[f])));
  }
  return out;
}

TEST(WinHistograms, IdenticalOptionsNeverWin) {
  const std::vector<int> acc{50, 52, 61, 58, 49, 55};
  fba::ComparisonRequest req;
  req.axis = fba::ComparisonAxis::mode_within_rectification;
  const auto result = fba::win_histograms(two_options(acc, acc), req);
  EXPECT_EQ(result.comparisons, 1u);
  for (std::size_t i = 0; i < result.options.size(); ++i) {
    EXPECT_EQ(result.wins[i], 0u);
    EXPECT_EQ(result.significant_wins[i], 0u);
  }
  ASSERT_EQ(result.cells.size(), 1u);
  EXPECT_TRUE(result.cells[0].winner.empty());
}

TEST(WinHistograms, UniformGainIsASignificantWin) {
  std::vector<int> base{50, 52, 61, 58, 49, 55, 40, 47, 62, 51}, better;
  for (int v : base) better.push_back(v + 10);
  fba::ComparisonRequest req;
  req.axis = fba::ComparisonAxis::mode_within_rectification;
  const auto result = fba::win_histograms(two_options(better, base), req);
  ASSERT_EQ(result.cells.size(), 1u);
  EXPECT_EQ(result.cells[0].winner, "multiplicative");
  EXPECT_TRUE(result.cells[0].significant);
  EXPECT_NEAR(result.cells[0].p_value, 2.0 / 1024.0, 1e-12);
  const auto idx = static_cast<std::size_t>(
      std::find(result.options.begin(), result.options.end(), "multiplicative") - result.options.begin());
  EXPECT_EQ(result.wins[idx], 1u);
  EXPECT_EQ(result.significant_wins[idx], 1u);
}

TEST(WinHistograms, SwappingOptionsSwapsWinners) {
  fba::Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<EvalRecord> records, swapped;
    for (int c = 0; c < 4; ++c) {
      std::vector<int> a, b;
      for (int f = 0; f < 8; ++f) {
        a.push_back(30 + static_cast<int>(fba::uniform_index(rng, 40)));
        b.push_back(30 + static_cast<int>(fba::uniform_index(rng, 40)));
      }
      const auto cat = "c" + std::to_string(c);
      const auto fwd = two_options(a, b, cat), back = two_options(b, a, cat);
      records.insert(records.end(), fwd.begin(), fwd.end());
      swapped.insert(swapped.end(), back.begin(), back.end());
    }
    fba::ComparisonRequest req;
    req.axis = fba::ComparisonAxis::mode_within_rectification;
    req.option_order = {"multiplicative", "additive"};
    const auto x = fba::win_histograms(records, req);
    const auto y = fba::win_histograms(swapped, req);
    EXPECT_EQ(x.wins[0], y.wins[1]);
    EXPECT_EQ(x.wins[1], y.wins[0]);
    EXPECT_EQ(x.significant_wins[0], y.significant_wins[1]);
    ASSERT_EQ(x.cells.size(), y.cells.size());
    for (std::size_t i = 0; i < x.cells.size(); ++i) {
      EXPECT_EQ(x.cells[i].p_value, y.cells[i].p_value);
      if (!x.cells[i].winner.empty()) {
        EXPECT_NE(x.cells[i].winner, y.cells[i].winner);
      }
    }
    std::size_t total = 0;
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_LE(x.significant_wins[i], x.wins[i]);
      total += x.wins[i];
    }
    EXPECT_LE(total, x.comparisons);
  }
}

TEST(WinHistograms, LayerAxisUsesBestStrengthPerLayer) {
  std::vector<EvalRecord> records;
  for (std::size_t f = 0; f < 4; ++f) {
    for (int layer = 1; layer <= 3; ++layer) {
      for (double beta : {0.2, 0.4}) {
        std::size_t tp = 50 + static_cast<std::size_t>(layer) * 5 + f;
        if (layer == 2 && beta == 0.4) tp = 90;
        records.push_back(rec("a", tag(beta, {layer}), f, tp, 0, 0, 100 - tp));
      }
    }
    records.push_back(rec("a", tag(0.4, {1, 2}), f, 99, 0, 0, 1));  // multi-layer sets are not layer candidates
  }
  fba::ComparisonRequest req;
  req.axis = fba::ComparisonAxis::layers;
  const auto result = fba::win_histograms(records, req);
  EXPECT_EQ(result.options, (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_EQ(result.wins, (std::vector<std::size_t>{0, 1, 0}));
  ASSERT_EQ(result.cells.size(), 1u);
  EXPECT_EQ(result.cells[0].runner_up, "3");
}

TEST(WinHistograms, RejectsUnbalancedOrSingleFoldCells) {
  auto records = two_options({50, 60, 70}, {40, 50, 60});
  records.pop_back();
  fba::ComparisonRequest req;
  req.axis = fba::ComparisonAxis::mode_within_rectification;
  EXPECT_THROW(fba::win_histograms(records, req), fba::ArgumentError);
  EXPECT_THROW(fba::win_histograms(two_options({50}, {40}), req), fba::ArgumentError);
}

fba::FeaturePatternSet some_patterns() {
  fba::FeaturePatternSet set;
  set.categories = {"a", "b"};
  set.counts = {3, 3};
  set.channels = {4, 6};
  fba::Rng rng(1);
  for (int r = 1; r <= 2; ++r)
    for (int c = 0; c < 2; ++c) {
      std::vector<float> f(set.channels[static_cast<std::size_t>(r - 1)]);
      for (float& v : f) v = static_cast<float>(fba::normal01(rng));
      set.patterns[{r, c}] = f;
    }
  return set;
}

TEST(Perturb, ScaleZeroShuffleAndDeterminism) {
  const auto set = some_patterns();
  EXPECT_EQ(fba::perturb_patterns(set, {fba::PerturbSpec::Kind::gaussian, 0.0}, 5).patterns, set.patterns);
  const auto shuffled = fba::perturb_patterns(set, {fba::PerturbSpec::Kind::shuffle, 0.0}, 5);
  EXPECT_NE(shuffled.patterns, set.patterns);
  for (const auto& [key, values] : set.patterns) {
    auto a = values, b = shuffled.patterns.at(key);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
  EXPECT_EQ(fba::perturb_patterns(set, {fba::PerturbSpec::Kind::shuffle, 0.0}, 5).patterns, shuffled.patterns);
  const auto noisy = fba::perturb_patterns(set, {fba::PerturbSpec::Kind::gaussian, 0.5}, 5);
  EXPECT_NE(noisy.patterns, set.patterns);
  EXPECT_EQ(fba::perturb_patterns(set, {fba::PerturbSpec::Kind::gaussian, 0.5}, 5).patterns, noisy.patterns);
  EXPECT_THROW(fba::perturb_patterns(set, {fba::PerturbSpec::Kind::gaussian, -1.0}, 5), fba::ArgumentError);
}

}  // namespace
