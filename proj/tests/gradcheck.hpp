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

// Central finite-difference check of the trainer's analytic gradient.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fba/network.hpp"
#include "fba/random.hpp"
#include "fba/trainer.hpp"

namespace fbatest {

/// Under 200 parameters: conv(1->2) relu pool conv(2->2) relu fc(18->4) relu fc(4->3) softmax on 1x6x6.
inline fba::NetworkSpec gradcheck_spec() {
  fba::NetworkSpec spec;
  spec.input = {1, 6, 6};
  spec.layers = {fba::ConvLayer{1, 2, 3, 3, 1, 1}, fba::ReluLayer{1}, fba::MaxPoolLayer{2, 2},
                 fba::ConvLayer{2, 2, 3, 3, 1, 1}, fba::ReluLayer{2}, fba::FcLayer{18, 4},
                 fba::ReluLayer{3},                fba::FcLayer{4, 3}, fba::SoftmaxLayer{}};
  return spec;
}

struct GradCheckResult {
  std::size_t parameters = 0;
  std::size_t checked = 0;
  double worst_relative = 0.0;
};

/// Compares every parameter's analytic gradient against (L(p+h) - L(p-h)) / 2h
/// in double precision. Relative error uses max(|analytic|, |numeric|, 1e-6).
inline GradCheckResult gradient_check(std::uint64_t seed, double h = 1e-6) {
  const auto spec = gradcheck_spec();
  fba::BasicWeights<double> w = fba::init_weights(spec, seed).cast<double>();
  fba::Rng rng(seed ^ 0x5eed);
  for (auto& p : w.layers) {
    if (p.empty()) continue;
    for (double& b : p.bias.data()) b = fba::uniform(rng, -0.3, 0.3);
  }
  std::vector<fba::BasicTensor<double>> images;
  std::vector<int> labels;
  for (int i = 0; i < 4; ++i) {
    fba::BasicTensor<double> img({1, 6, 6});
    for (double& v : img.data()) v = fba::uniform(rng, 0.0, 1.0);
    images.push_back(img);
    labels.push_back(i % 3);
  }
  const auto analytic = fba::loss_and_gradient<double>(spec, w, images, labels);
  GradCheckResult out;
  out.parameters = w.parameter_count();
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    if (w.layers[l].empty()) continue;
    for (int which = 0; which < 2; ++which) {
      auto& tensor = which == 0 ? w.layers[l].kernel : w.layers[l].bias;
      const auto& grad = which == 0 ? analytic.grads.layers[l].kernel : analytic.grads.layers[l].bias;
      for (std::size_t i = 0; i < tensor.size(); ++i) {
        const double saved = tensor[i];
        tensor[i] = saved + h;
        const double up = fba::loss_and_gradient<double>(spec, w, images, labels).loss;
        tensor[i] = saved - h;
        const double down = fba::loss_and_gradient<double>(spec, w, images, labels).loss;
        tensor[i] = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(grad[i]), std::abs(numeric), 1e-6});
        out.worst_relative = std::max(out.worst_relative, std::abs(grad[i] - numeric) / scale);
        ++out.checked;
      }
    }
  }
  return out;
}

}  // namespace fbatest
