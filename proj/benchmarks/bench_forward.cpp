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

#include <benchmark/benchmark.h>

#include "fba/attention.hpp"
#include "fba/kernels.hpp"
#include "fba/network.hpp"
#include "fba/random.hpp"

namespace {

fba::Tensor random_tensor(const fba::Shape& shape, std::uint64_t seed) {
  fba::Tensor t(shape);
  fba::Rng rng(seed);
  for (float& v : t.data()) v = static_cast<float>(fba::uniform(rng, -1.0, 1.0));
  return t;
}

void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto input = random_tensor({c, 32, 32}, 1);
  const auto kernels = random_tensor({2 * c, c, 3, 3}, 2);
  const auto bias = random_tensor({2 * c}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(fba::conv2d(input, kernels, bias, 1, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(2 * c * c * 9 * 32 * 32));
}
BENCHMARK(BM_Conv2d)->Arg(3)->Arg(8)->Arg(16);

void BM_Forward(benchmark::State& state) {
  const auto spec = fba::desk_backbone(6);
  const auto weights = fba::init_weights(spec, 7);
  const auto image = random_tensor({3, 32, 32}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(fba::forward(spec, weights, image));
}
BENCHMARK(BM_Forward);

void BM_ForwardFromLateLayer(benchmark::State& state) {
  const auto spec = fba::desk_backbone(6);
  const auto weights = fba::init_weights(spec, 7);
  const auto image = random_tensor({3, 32, 32}, 4);
  const auto trace = fba::forward(spec, weights, image);
  const int layer = static_cast<int>(state.range(0));
  fba::ReluModulation mod;
  mod.terms[layer] = std::vector<double>(fba::relu_channels(spec, layer), 1.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        fba::forward_from(spec, weights, layer, trace.relu_inputs[static_cast<std::size_t>(layer - 1)], &mod));
  }
}
BENCHMARK(BM_ForwardFromLateLayer)->DenseRange(1, 5);

}  // namespace

BENCHMARK_MAIN();
