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

#include "fba/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fba/errors.hpp"

namespace fba {

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("paired test needs samples of equal length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult res;
  res.n = diffs.size();
  if (res.n == 0) return res;

  std::vector<std::size_t> order(res.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::abs(diffs[i]) < std::abs(diffs[j]); });
  // Doubled average ranks are integers, which keeps the exact null exact under ties.
  std::vector<long> rank2(res.n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < res.n;) {
    std::size_t j = i;
    while (j + 1 < res.n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    const long doubled = static_cast<long>(i + j + 2);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = doubled;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  long plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < res.n; ++i) {
    total2 += rank2[i];
    if (diffs[i] > 0) plus2 += rank2[i];
  }
  res.w_plus = plus2 / 2.0;
  res.w_minus = (total2 - plus2) / 2.0;

  // Use the smaller tail statistic so swapping a and b leaves p unchanged.
  const long low2 = std::min(plus2, total2 - plus2);
  if (res.n <= 200) {
    std::vector<double> dist(static_cast<std::size_t>(total2) + 1, 0.0);
    dist[0] = 1.0;
    long reach = 0;
    for (long r : rank2) {
      for (long s = reach; s >= 0; --s) {
        const double here = dist[static_cast<std::size_t>(s)];
        dist[static_cast<std::size_t>(s + r)] += 0.5 * here;
        dist[static_cast<std::size_t>(s)] = 0.5 * here;
      }
      reach += r;
    }
    double tail = 0.0;
    for (long s = 0; s <= low2; ++s) tail += dist[static_cast<std::size_t>(s)];
    res.p_value = std::min(1.0, 2.0 * tail);
  } else {
    const double n = static_cast<double>(res.n);
    const double mean = n * (n + 1) / 4.0;
    const double var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
    const double z = (low2 / 2.0 - mean + 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, std::erfc(-z / std::sqrt(2.0)));
  }
  return res;
}

double binomial_test(std::size_t k, std::size_t n, double p) {
  if (k > n) throw ArgumentError("binomial test: successes exceed trials");
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("binomial test: rate must lie in (0,1)");
  std::vector<double> pmf(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                           static_cast<double>(i) * std::log(p) + static_cast<double>(n - i) * std::log1p(-p);
    pmf[i] = std::exp(log_pmf);
  }
  const double observed = pmf[k] * (1.0 + 1e-7);
  double total = 0.0;
  for (double v : pmf) {
    if (v <= observed) total += v;
  }
  return std::min(1.0, total);
}

}  // namespace fba
