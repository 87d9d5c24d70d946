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
#include <string>
#include <vector>

#include "fba/dataset.hpp"
#include "fba/random.hpp"

namespace fba {

/// Parametric shape categories rendered as bright shapes on a noisy dark
/// background with random colour, scale, rotation and position.
inline constexpr std::size_t kSyntheticCategoryLimit = 10;

std::vector<std::string> synthetic_category_names(std::size_t categories);

/// Renders one [3,size,size] image of `category`.
Tensor render_synthetic(std::size_t category, std::size_t size, Rng& rng);

/// `per_category` images of each of the first `categories` shapes. Image i of
/// category c in split s is drawn from derive_seed(seed, {s, c, i}) and gets id
/// "<split>-<category name>-<i>"; images are interleaved by category.
Dataset synthetic_dataset(std::size_t categories, std::size_t per_category, std::size_t size, std::uint64_t seed,
                          const std::string& split);

}  // namespace fba
