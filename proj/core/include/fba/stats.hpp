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
#include <span>

namespace fba {

struct WilcoxonResult {
  double w_plus = 0.0;   // rank sum of positive differences (a - b)
  double w_minus = 0.0;  // rank sum of negative differences
  std::size_t n = 0;     // non-zero differences
  double p_value = 1.0;  // two-sided
};

/// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped,
/// tied magnitudes get average ranks, and the p-value comes from the exact
/// sign-flip distribution of the (possibly tied) ranks for n <= 200, else the
/// tie-corrected normal approximation.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Two-sided exact binomial test of k successes in n trials at rate p: the
/// total probability of outcomes no more likely than k.
double binomial_test(std::size_t k, std::size_t n, double p);

}  // namespace fba
