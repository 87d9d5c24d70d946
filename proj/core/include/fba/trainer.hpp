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
#include <functional>
#include <span>
#include <vector>

#include "fba/dataset.hpp"
#include "fba/network.hpp"

namespace fba {

struct TrainHyper {
  double lr = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 10;
  std::size_t batch = 16;
  std::uint64_t seed = 1;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean cross-entropy over the epoch
  double accuracy = 0.0;  // fraction of training images classified correctly during the epoch
};

struct TrainResult {
  Weights weights;
  std::vector<EpochStats> history;
};

/// Mean softmax cross-entropy over a batch and its gradient with respect to
/// every parameter. The NetworkSpec must end in softmax.
template <typename T>
struct LossGradient {
  double loss = 0.0;
  std::size_t correct = 0;
  BasicWeights<T> grads;
};

template <typename T>
LossGradient<T> loss_and_gradient(const NetworkSpec& spec, const BasicWeights<T>& weights,
                                  std::span<const BasicTensor<T>> images, std::span<const int> labels);

/// Plain mini-batch SGD with momentum from init_weights(spec, hyper.seed).
/// Deterministic given the seed. Throws DivergenceError on a non-finite loss.
TrainResult train_backbone(const Dataset& dataset, const NetworkSpec& spec, const TrainHyper& hyper,
                           const std::function<void(const EpochStats&)>& on_epoch = {});

}  // namespace fba
