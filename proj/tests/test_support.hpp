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

#include <filesystem>
#include <random>
#include <string>

#include "fba/network.hpp"
#include "fba/random.hpp"
#include "fba/tensor.hpp"

namespace fbatest {

inline fba::Tensor random_tensor(const fba::Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  fba::Tensor t(shape);
  fba::Rng rng(seed);
  for (float& v : t.data()) v = static_cast<float>(fba::uniform(rng, lo, hi));
  return t;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fba-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// conv(3x3)-relu-pool, conv(3x3)-relu, fc-relu, fc-softmax on 2x8x8 input:
/// three ReLU layers.
inline fba::NetworkSpec toy_spec(std::size_t classes = 3) {
  fba::NetworkSpec spec;
  spec.input = {2, 8, 8};
  spec.layers = {fba::ConvLayer{2, 4, 3, 3, 1, 1},
                 fba::ReluLayer{1},
                 fba::MaxPoolLayer{2, 2},
                 fba::ConvLayer{4, 3, 3, 3, 1, 1},
                 fba::ReluLayer{2},
                 fba::FcLayer{3 * 4 * 4, 6},
                 fba::ReluLayer{3},
                 fba::FcLayer{6, classes},
                 fba::SoftmaxLayer{}};
  return spec;
}

/// Weights with random (not zero) biases so no layer starts degenerate.
inline fba::Weights toy_weights(const fba::NetworkSpec& spec, std::uint64_t seed) {
  auto w = fba::init_weights(spec, seed);
  std::uint64_t s = seed;
  for (auto& p : w.layers) {
    if (p.empty()) continue;
    p.bias = random_tensor(p.bias.shape(), ++s * 977, -0.2, 0.2);
  }
  return w;
}

}  // namespace fbatest
