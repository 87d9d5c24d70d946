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

#include "fba/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fba/errors.hpp"

namespace fba {

namespace {

constexpr std::array<const char*, kSyntheticCategoryLimit> kNames = {
    "disk", "square", "triangle", "ring", "cross", "stripes", "checker", "frame", "dots", "crescent"};

constexpr double kPi = 3.14159265358979323846;

/// Shape membership in object coordinates, where the shape fits the unit disk.
bool inside(std::size_t category, double u, double v) {
  const double r = std::hypot(u, v);
  const double m = std::max(std::abs(u), std::abs(v));
  switch (category) {
    case 0:  // disk
      return r <= 1.0;
    case 1:  // square
      return m <= 0.75;
    case 2: {  // triangle, apex up, inscribed in the unit circle
      const double s = std::sqrt(3.0);
      return v >= -0.5 && (s * u - v) <= 1.0 && (-s * u - v) <= 1.0;
    }
    case 3:  // ring
      return r <= 1.0 && r >= 0.6;
    case 4:  // cross
      return (std::abs(u) <= 0.28 && std::abs(v) <= 0.95) || (std::abs(v) <= 0.28 && std::abs(u) <= 0.95);
    case 5:  // three stripes in a square patch
      return m <= 0.8 && std::sin((u + 0.8) * kPi * 5.0 / 1.6) > 0.0;
    case 6:  // 4x4 checker in a square patch
      return m <= 0.8 && (static_cast<int>(std::floor((u + 0.8) * 2.5)) + static_cast<int>(std::floor((v + 0.8) * 2.5))) % 2 == 0;
    case 7:  // hollow square
      return m <= 0.8 && m >= 0.5;
    case 8: {  // 3x3 grid of dots
      const double gu = (u + 0.9) / 0.6, gv = (v + 0.9) / 0.6;
      if (gu < 0 || gv < 0 || gu >= 3 || gv >= 3) return false;
      const double du = gu - std::floor(gu) - 0.5, dv = gv - std::floor(gv) - 0.5;
      return std::hypot(du, dv) <= 0.3;
    }
    case 9:  // crescent
      return r <= 1.0 && std::hypot(u - 0.45, v) > 0.75;
    default:
      return false;
  }
}

}  // namespace

std::vector<std::string> synthetic_category_names(std::size_t categories) {
  if (categories < 2 || categories > kSyntheticCategoryLimit) {
    throw ArgumentError("synthetic categories must be in [2, " + std::to_string(kSyntheticCategoryLimit) + "]");
  }
  return {kNames.begin(), kNames.begin() + static_cast<std::ptrdiff_t>(categories)};
}

Tensor render_synthetic(std::size_t category, std::size_t size, Rng& rng) {
  if (category >= kSyntheticCategoryLimit) throw ArgumentError("unknown synthetic category " + std::to_string(category));
  const double n = static_cast<double>(size);
  const double radius = uniform(rng, 0.14, 0.42) * n;
  const double slack = std::max(0.0, 0.5 * n - radius);
  const double cx = 0.5 * n + uniform(rng, -slack, slack);
  const double cy = 0.5 * n + uniform(rng, -slack, slack);
  const double angle = uniform(rng, 0.0, 2.0 * kPi);
  const double ca = std::cos(angle), sa = std::sin(angle);
  std::array<double, 3> fg{}, bg{};
  for (auto& c : fg) c = uniform(rng, 0.55, 1.0);
  for (auto& c : bg) c = uniform(rng, 0.0, 0.35);

  Tensor image({3, size, size});
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      // 2x2 supersampled coverage
      int hits = 0;
      for (int sy = 0; sy < 2; ++sy) {
        for (int sx = 0; sx < 2; ++sx) {
          const double px = (static_cast<double>(x) + 0.25 + 0.5 * sx - cx) / radius;
          const double py = (static_cast<double>(y) + 0.25 + 0.5 * sy - cy) / radius;
          hits += inside(category, ca * px + sa * py, -sa * px + ca * py) ? 1 : 0;
        }
      }
      const double cover = hits / 4.0;
      const double noise = 0.04 * normal01(rng);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = bg[c] + cover * (fg[c] - bg[c]) + noise;
        image.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return image;
}

Dataset synthetic_dataset(std::size_t categories, std::size_t per_category, std::size_t size, std::uint64_t seed,
                          const std::string& split) {
  Dataset dataset;
  dataset.categories = synthetic_category_names(categories);
  std::uint64_t split_key = 1469598103934665603ULL;  // FNV-1a of the split name
  for (unsigned char ch : split) split_key = (split_key ^ ch) * 1099511628211ULL;
  dataset.images.reserve(categories * per_category);
  for (std::size_t i = 0; i < per_category; ++i) {
    for (std::size_t c = 0; c < categories; ++c) {
      Rng rng(derive_seed(seed, {split_key, c, i}));
      dataset.images.push_back(
          {split + "-" + dataset.categories[c] + "-" + std::to_string(i), render_synthetic(c, size, rng), static_cast<int>(c)});
    }
  }
  return dataset;
}

}  // namespace fba
