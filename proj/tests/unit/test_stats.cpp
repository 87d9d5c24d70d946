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

#include <cmath>

#include "fba/random.hpp"
#include "fba/stats.hpp"
#include "oracles.hpp"

namespace {

TEST(Wilcoxon, HandExample) {
  // Differences 1, -2, 3, 4: ranks 1..4, W+ = 8, W- = 2.
  const std::vector<double> a{1, 0, 3, 4}, b{0, 2, 0, 0};
  const auto r = fba::wilcoxon_signed_rank(a, b);
  EXPECT_EQ(r.n, 4u);
  EXPECT_EQ(r.w_plus, 8.0);
  EXPECT_EQ(r.w_minus, 2.0);
  // Of 16 sign patterns, W+ <= 2 or >= 8 occurs for {0,1,2,8,9,10} -> 6 patterns.
  EXPECT_NEAR(r.p_value, 6.0 / 16.0, 1e-12);
}

TEST(Wilcoxon, IdenticalAndUniformShift) {
  std::vector<double> a(20), b(20);
  fba::Rng rng(1);
  for (std::size_t i = 0; i < 20; ++i) a[i] = b[i] = fba::uniform(rng, 0.4, 0.8);
  EXPECT_EQ(fba::wilcoxon_signed_rank(a, b).p_value, 1.0);
  EXPECT_EQ(fba::wilcoxon_signed_rank(a, b).n, 0u);
  for (auto& v : b) v += 0.1;
  const auto r = fba::wilcoxon_signed_rank(a, b);
  EXPECT_LT(r.p_value, 1e-5);
  EXPECT_EQ(r.w_plus, 0.0);
}

TEST(Wilcoxon, MatchesEnumerationOracle) {
  fba::Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + fba::uniform_index(rng, 14);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse values force zero differences and tied magnitudes.
      a[i] = static_cast<double>(fba::uniform_index(rng, 6)) / 20.0;
      b[i] = static_cast<double>(fba::uniform_index(rng, 6)) / 20.0;
    }
    const double expected = oracle::wilcoxon_enumerated(a, b);
    const auto got = fba::wilcoxon_signed_rank(a, b);
    EXPECT_NEAR(got.p_value, expected, 1e-9) << "trial " << trial;
    // Swapping the samples swaps the rank sums and keeps the p-value.
    const auto swapped = fba::wilcoxon_signed_rank(b, a);
    EXPECT_EQ(swapped.w_plus, got.w_minus);
    EXPECT_NEAR(swapped.p_value, got.p_value, 1e-12);
  }
}

/// Exact size of the level-alpha test with n untied differences: the null mass
/// of rank sums whose exact two-sided p-value is <= alpha.
double exact_size(int n, double alpha) {
  const int total = n * (n + 1) / 2;
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1;
  for (int r = 1; r <= n; ++r)
    for (int s = total; s >= r; --s) count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - r)];
  const double all = std::pow(2.0, n);
  std::vector<double> cdf(count.size());
  double run = 0;
  for (std::size_t s = 0; s < count.size(); ++s) cdf[s] = (run += count[s]) / all;
  double size = 0;
  for (int w = 0; w <= total; ++w) {
    const double p = std::min(1.0, 2.0 * cdf[static_cast<std::size_t>(std::min(w, total - w))]);
    if (p <= alpha) size += count[static_cast<std::size_t>(w)] / all;
  }
  return size;
}

TEST(Wilcoxon, NullRejectionRateMatchesExactSize) {
  const int n = 20, trials = 2000;
  fba::Rng rng(3);
  int rejections = 0;
  std::vector<double> a(n), b(n);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = fba::normal01(rng);
      b[static_cast<std::size_t>(i)] = fba::normal01(rng);
    }
    rejections += fba::wilcoxon_signed_rank(a, b).p_value <= 0.05;
  }
  const double size = exact_size(n, 0.05);
  EXPECT_GT(size, 0.04);
  EXPECT_LE(size, 0.05);
  const double rate = static_cast<double>(rejections) / trials;
  EXPECT_NEAR(rate, size, 4 * std::sqrt(size * (1 - size) / trials));
}

TEST(Wilcoxon, LargeSampleUsesNormalApproximation) {
  fba::Rng rng(4);
  std::vector<double> a(300), b(300);
  for (std::size_t i = 0; i < 300; ++i) {
    a[i] = fba::normal01(rng) + 0.05;
    b[i] = fba::normal01(rng);
  }
  const auto r = fba::wilcoxon_signed_rank(a, b);
  EXPECT_EQ(r.n, 300u);
  EXPECT_GT(r.p_value, 0.0);
  EXPECT_LE(r.p_value, 1.0);
  // Continuous symmetric statistic: mean 22575, sd ~ 1504.
  const double z = (r.w_plus - 300.0 * 301 / 4) / std::sqrt(300.0 * 301 * 601 / 24);
  EXPECT_NEAR(r.p_value, std::erfc(std::abs(z) / std::sqrt(2.0)), 0.01);
}

TEST(Binomial, HandValues) {
  EXPECT_NEAR(fba::binomial_test(5, 10, 0.5), 1.0, 1e-12);
  // P(X >= 9) + P(X <= 1) for Bin(10, 1/2) = 22/1024.
  EXPECT_NEAR(fba::binomial_test(9, 10, 0.5), 22.0 / 1024.0, 1e-12);
  // Bin(3, 1/4) masses are 27, 27, 9, 1 (/64).
  EXPECT_NEAR(fba::binomial_test(0, 3, 0.25), 1.0, 1e-12);
  EXPECT_NEAR(fba::binomial_test(2, 3, 0.25), 10.0 / 64.0, 1e-12);
  EXPECT_NEAR(fba::binomial_test(3, 3, 0.25), 1.0 / 64.0, 1e-12);
}

}  // namespace
