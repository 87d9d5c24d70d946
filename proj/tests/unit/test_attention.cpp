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
#include <bit>
#include <cmath>
#include <limits>

#include "fba/attention.hpp"
#include "fba/errors.hpp"
#include "fba/random.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

using fba::ActivitySummary;
using fba::Rectification;

fba::ForwardTrace trace_with(fba::Tensor relu1) {
  fba::ForwardTrace t;
  t.relu_outputs.push_back(std::move(relu1));
  return t;
}

TEST(SpatialAverage, Examples) {
  EXPECT_EQ(fba::spatial_average(trace_with(fba::Tensor({1, 2, 2}, std::vector<float>{1, 2, 3, 4})), 1),
            std::vector<double>{2.5});
  EXPECT_EQ(fba::spatial_average(trace_with(fba::Tensor({1, 3, 3}, 0.75f)), 1), std::vector<double>{0.75});
  EXPECT_EQ(fba::spatial_average(trace_with(fba::Tensor({3}, std::vector<float>{1, -2, 5})), 1),
            (std::vector<double>{1, -2, 5}));
  EXPECT_THROW(fba::spatial_average(trace_with(fba::Tensor({1})), 2), fba::ArgumentError);
}

TEST(SpatialAverage, MatchesLoopOracleExactly) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = fbatest::random_tensor({3, 4, 4}, seed, 0, 2);
    std::vector<double> expected(3);
    for (std::size_t k = 0; k < 3; ++k) {
      double s = 0;
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) s += static_cast<double>(x.at(k, i, j));
      expected[k] = s / 16.0;
    }
    EXPECT_EQ(fba::spatial_average(trace_with(x), 1), expected);
  }
}

ActivitySummary one_layer(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels, int categories) {
  std::vector<std::string> names;
  for (int c = 0; c < categories; ++c) names.push_back("c" + std::to_string(c));
  ActivitySummary s(names, {rows.front().size()});
  for (std::size_t i = 0; i < rows.size(); ++i) s.add(labels[i], {rows[i]});
  return s;
}

TEST(ActivitySummary, Examples) {
  const auto single = one_layer({{3.0, -1.0}}, {0}, 1);
  EXPECT_EQ(single.mean(1), (std::vector<double>{3.0, -1.0}));
  EXPECT_EQ(single.stddev(1), (std::vector<double>{0.0, 0.0}));

  const auto two = one_layer({{0.0}, {2.0}}, {0, 1}, 2);
  EXPECT_EQ(two.mean(1), std::vector<double>{1.0});
  EXPECT_EQ(two.stddev(1), std::vector<double>{1.0});
  EXPECT_EQ(two.total(), two.count(0) + two.count(1));

  ActivitySummary empty({"a"}, {1});
  EXPECT_THROW(empty.mean(1), fba::ArgumentError);
  EXPECT_THROW(fba::build_patterns(empty, Rectification::bidirectional), fba::ArgumentError);
  EXPECT_THROW(empty.add(0, {{1.0, 2.0}}), fba::ShapeError);
}

std::vector<std::vector<double>> random_rows(std::size_t n, std::size_t k, std::uint64_t seed) {
  fba::Rng rng(seed);
  std::vector<std::vector<double>> rows(n, std::vector<double>(k));
  for (auto& r : rows)
    for (auto& v : r) v = fba::uniform(rng, 0.0, 3.0);
  return rows;
}

TEST(ActivitySummary, MatchesTwoPassOracle) {
  const auto rows = random_rows(10, 5, 7);
  const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
  const auto s = one_layer(rows, labels, 3);
  const auto mean = s.mean(1);
  const auto sd = s.stddev(1);
  for (std::size_t k = 0; k < 5; ++k) {
    double m = 0, v = 0;
    for (const auto& r : rows) m += r[k];
    m /= 10;
    for (const auto& r : rows) v += (r[k] - m) * (r[k] - m);
    EXPECT_NEAR(mean[k], m, 1e-6);
    EXPECT_NEAR(sd[k], std::sqrt(v / 10), 1e-6);
  }
  const auto f = fba::build_patterns(s, Rectification::bidirectional);
  const auto expected = oracle::patterns(rows, labels, 3);
  for (int c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(f.at(1, c)[k], expected[static_cast<std::size_t>(c)][k], 1e-5);
}

TEST(Patterns, HandComputedExamples) {
  const auto s = one_layer({{2.0}, {0.0}}, {0, 1}, 2);
  const auto bi = fba::build_patterns(s, Rectification::bidirectional);
  EXPECT_EQ(bi.at(1, 0), std::vector<float>{1.0f});
  EXPECT_EQ(bi.at(1, 1), std::vector<float>{-1.0f});
  const auto pos = fba::build_patterns(s, Rectification::positive);
  EXPECT_EQ(pos.at(1, 0), std::vector<float>{1.0f});
  EXPECT_EQ(pos.at(1, 1), std::vector<float>{0.0f});

  // Category mean equal to the grand mean, and a dead map.
  const auto flat = fba::build_patterns(one_layer({{1.0, 4.0}, {3.0, 4.0}, {2.0, 4.0}, {2.0, 4.0}}, {0, 0, 1, 1}, 2),
                                        Rectification::bidirectional);
  EXPECT_EQ(flat.at(1, 0), (std::vector<float>{0.0f, 0.0f}));
  EXPECT_EQ(flat.at(1, 1), (std::vector<float>{0.0f, 0.0f}));
}

TEST(Patterns, BalancedCategoriesCenterToZero) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const int cats = 2 + static_cast<int>(seed % 4);
    const std::size_t per = 3 + seed % 5;
    std::vector<int> labels;
    for (std::size_t i = 0; i < per; ++i)
      for (int c = 0; c < cats; ++c) labels.push_back(c);
    const auto rows = random_rows(labels.size(), 6, seed);
    const auto f = fba::build_patterns(one_layer(rows, labels, cats), Rectification::bidirectional);
    for (std::size_t k = 0; k < 6; ++k) {
      double sum = 0;
      for (int c = 0; c < cats; ++c) sum += f.at(1, c)[k];
      EXPECT_NEAR(sum, 0.0, 1e-5) << "seed " << seed;
    }
  }
}

TEST(Patterns, PositiveIsClampedBidirectional) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto rows = random_rows(12, 4, 100 + seed);
    std::vector<int> labels;
    for (int i = 0; i < 12; ++i) labels.push_back(i % 3);
    const auto s = one_layer(rows, labels, 3);
    const auto bi = fba::build_patterns(s, Rectification::bidirectional);
    const auto pos = fba::build_patterns(s, Rectification::positive);
    EXPECT_EQ(pos.rectification, Rectification::positive);
    for (int c = 0; c < 3; ++c) {
      for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_GE(pos.at(1, c)[k], 0.0f);
        EXPECT_EQ(pos.at(1, c)[k], std::max(0.0f, bi.at(1, c)[k]));
      }
    }
    const auto again = bi.rectified(Rectification::positive);
    EXPECT_EQ(again.patterns, pos.patterns);
  }
}

TEST(Patterns, InvariantToActivityScale) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    fba::Rng rng(seed);
    const double scale = fba::uniform(rng, 0.01, 50.0);
    const auto rows = random_rows(15, 5, 200 + seed);
    auto scaled = rows;
    for (auto& r : scaled)
      for (auto& v : r) v *= scale;
    std::vector<int> labels;
    for (int i = 0; i < 15; ++i) labels.push_back(i % 3);
    const auto a = fba::build_patterns(one_layer(rows, labels, 3), Rectification::bidirectional);
    const auto b = fba::build_patterns(one_layer(scaled, labels, 3), Rectification::bidirectional);
    for (int c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(a.at(1, c)[k], b.at(1, c)[k], 1e-5);
  }
}

TEST(Patterns, MergeOrderDoesNotMatter) {
  const auto rows = random_rows(40, 6, 300);
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back((i * 7) % 4);
  const auto whole = one_layer(rows, labels, 4);
  // Split into uneven shards and merge in reverse order.
  std::vector<ActivitySummary> shards;
  const std::vector<std::size_t> cuts{0, 3, 4, 17, 29, 40};
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    ActivitySummary part({"c0", "c1", "c2", "c3"}, {6});
    for (std::size_t i = cuts[s]; i < cuts[s + 1]; ++i) part.add(labels[i], {rows[i]});
    shards.push_back(part);
  }
  ActivitySummary merged({"c0", "c1", "c2", "c3"}, {6});
  for (auto it = shards.rbegin(); it != shards.rend(); ++it) merged.merge(*it);
  EXPECT_EQ(merged.total(), whole.total());
  EXPECT_EQ(merged.counts(), whole.counts());
  const auto fa = fba::build_patterns(whole, Rectification::bidirectional);
  const auto fb = fba::build_patterns(merged, Rectification::bidirectional);
  for (int c = 0; c < 4; ++c)
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(fa.at(1, c)[k], fb.at(1, c)[k], 1e-5);

  ActivitySummary other({"x"}, {6});
  EXPECT_THROW(merged.merge(other), fba::ArgumentError);
}

fba::FeaturePatternSet single_pattern(std::vector<float> f, int layers = 2) {
  fba::FeaturePatternSet set;
  set.categories = {"a"};
  set.counts = {1};
  for (int r = 1; r <= layers; ++r) {
    set.channels.push_back(f.size());
    set.patterns[{r, 0}] = f;
  }
  return set;
}

TEST(ModulationTerms, Examples) {
  const auto set = single_pattern({0.5f, -0.25f});
  fba::AttentionConfig cfg;
  cfg.layers = {1};
  cfg.beta = 0.0;
  cfg.mode = fba::ModulationMode::additive;
  EXPECT_EQ(fba::modulation_terms(cfg, set, 1, 0), (std::vector<double>{0.0, 0.0}));
  cfg.mode = fba::ModulationMode::multiplicative;
  EXPECT_EQ(fba::modulation_terms(cfg, set, 1, 0), (std::vector<double>{1.0, 1.0}));

  cfg.beta = 1.2;
  EXPECT_NEAR(fba::modulation_terms(cfg, set, 1, 0)[0], 1.6, 1e-12);
  cfg.layers = {1, 2};
  EXPECT_NEAR(fba::modulation_terms(cfg, set, 1, 0)[0], 1.3, 1e-12);
  EXPECT_NEAR(fba::modulation_terms(cfg, set, 2, 0)[1], 1.0 - 0.6 * 0.25, 1e-12);

  cfg.rectification = Rectification::positive;
  EXPECT_EQ(fba::modulation_terms(cfg, set, 2, 0)[1], 1.0);
  cfg.mode = fba::ModulationMode::additive;
  cfg.layers = {2};
  EXPECT_NEAR(fba::modulation_terms(cfg, set, 2, 0)[0], 0.6, 1e-12);
}

TEST(ModulationTerms, MultiplicativeTermIncreasesWithStrength) {
  fba::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const float f = static_cast<float>(fba::uniform(rng, 1e-3, 3.0));
    const double b1 = fba::uniform(rng, 0.0, 5.0);
    const double b2 = b1 + fba::uniform(rng, 1e-3, 5.0);
    const auto set = single_pattern({f}, 1);
    fba::AttentionConfig lo{fba::ModulationMode::multiplicative, Rectification::bidirectional, {1}, b1};
    fba::AttentionConfig hi = lo;
    hi.beta = b2;
    EXPECT_LT(fba::modulation_terms(lo, set, 1, 0)[0], fba::modulation_terms(hi, set, 1, 0)[0]);
  }
}

TEST(AttentionConfig, Validation) {
  fba::AttentionConfig cfg;
  EXPECT_THROW(cfg.validate(), fba::ArgumentError);
  cfg.layers = {1};
  cfg.beta = -0.1;
  EXPECT_THROW(cfg.validate(), fba::ArgumentError);
  cfg.beta = 0.2;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.effective_beta(), 0.2);
  cfg.layers = {1, 4};
  EXPECT_EQ(cfg.effective_beta(), 0.1);
  EXPECT_THROW(fba::make_modulation(cfg, single_pattern({1.0f}, 2), 0), fba::ArgumentError);
  EXPECT_THROW(fba::parse_mode("mult"), fba::ArgumentError);
  EXPECT_EQ(fba::parse_rectification("positive"), Rectification::positive);
}

TEST(PatternFile, RoundTripsExactly) {
  fba::Rng rng(11);
  fba::FeaturePatternSet set;
  set.categories = {"disc", "ring", "cross"};
  set.counts = {10, 12, 9};
  set.channels = {3, 5};
  for (int r = 1; r <= 2; ++r) {
    for (int c = 0; c < 3; ++c) {
      std::vector<float> f(set.channels[static_cast<std::size_t>(r - 1)]);
      for (float& v : f) v = static_cast<float>(fba::normal01(rng) * std::pow(10.0, fba::uniform(rng, -6, 6)));
      set.patterns[{r, c}] = f;
    }
  }
  set.patterns[{1, 0}][0] = 0.0f;
  set.patterns[{1, 0}][1] = std::numeric_limits<float>::denorm_min();
  const auto dir = fbatest::temp_dir("patterns");
  fba::save_patterns(set, dir / "p.txt", "deadbeef");
  std::string hash;
  const auto back = fba::load_patterns(dir / "p.txt", &hash);
  EXPECT_EQ(hash, "deadbeef");
  EXPECT_EQ(back.categories, set.categories);
  EXPECT_EQ(back.counts, set.counts);
  EXPECT_EQ(back.channels, set.channels);
  ASSERT_EQ(back.patterns.size(), set.patterns.size());
  for (const auto& [key, values] : set.patterns) {
    const auto& got = back.patterns.at(key);
    for (std::size_t i = 0; i < values.size(); ++i) {
      EXPECT_EQ(std::bit_cast<std::uint32_t>(got[i]), std::bit_cast<std::uint32_t>(values[i]));
    }
  }
}

TEST(PatternFile, Diagnostics) {
  auto kind = [](const std::string& text) {
    try {
      fba::decode_patterns(text);
    } catch (const fba::FormatError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "decoded: " << text;
    return fba::FormatError::Kind::syntax;
  };
  EXPECT_EQ(kind(""), fba::FormatError::Kind::bad_magic);
  EXPECT_EQ(kind("fba-patterns 2\n"), fba::FormatError::Kind::version_mismatch);
  const std::string head = "fba-patterns 1\nnetwork x\nrectification bidirectional\ncategories a\ncounts 1\nchannels 2\n";
  EXPECT_EQ(kind(head + "pattern 1 0 0.5\n"), fba::FormatError::Kind::inconsistent);
  EXPECT_EQ(kind(head + "pattern 2 0 0.5 1\n"), fba::FormatError::Kind::syntax);
  EXPECT_EQ(kind(head + "pattern 1 0 0.5 zz\n"), fba::FormatError::Kind::syntax);
  EXPECT_NO_THROW(fba::decode_patterns(head + "pattern 1 0 0.5 1\n"));
  auto spaced = single_pattern({1.0f});
  spaced.categories = {"two words"};
  EXPECT_THROW(fba::encode_patterns(spaced, "h"), fba::ArgumentError);
}

}  // namespace
