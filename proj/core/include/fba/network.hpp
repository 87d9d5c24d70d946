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
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "fba/tensor.hpp"

namespace fba {

struct ConvLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  bool operator==(const ConvLayer&) const = default;
};

/// `index` is the 1-based ordinal among the network's ReLU layers; attention
/// targets layers by this number.
struct ReluLayer {
  int index = 0;
  bool operator==(const ReluLayer&) const = default;
};

struct MaxPoolLayer {
  std::size_t window = 2;
  std::size_t stride = 2;
  bool operator==(const MaxPoolLayer&) const = default;
};

/// Fully connected layer. A rank-3 input is flattened in row-major order.
struct FcLayer {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  bool operator==(const FcLayer&) const = default;
};

struct SoftmaxLayer {
  bool operator==(const SoftmaxLayer&) const = default;
};

using LayerSpec = std::variant<ConvLayer, ReluLayer, MaxPoolLayer, FcLayer, SoftmaxLayer>;

std::string layer_kind(const LayerSpec& layer);

struct NetworkSpec {
  Shape input;  // [C,H,W]
  std::vector<LayerSpec> layers;
  bool operator==(const NetworkSpec&) const = default;
};

/// Checks shape chaining and ReLU numbering; returns the output shape of every
/// layer. Throws ShapeError naming the first offending layer.
std::vector<Shape> validate(const NetworkSpec& spec);

int relu_count(const NetworkSpec& spec);
/// Position of ReLU `relu_index` in spec.layers.
std::size_t relu_position(const NetworkSpec& spec, int relu_index);
/// Number of feature maps (or nodes, for fully connected layers) at a ReLU.
std::size_t relu_channels(const NetworkSpec& spec, int relu_index);
bool ends_in_softmax(const NetworkSpec& spec);

/// The desk-scale backbone: three conv+ReLU+pool blocks, two FC+ReLU layers,
/// and an FC+softmax head over `categories` classes (five ReLU layers with the
/// default widths).
NetworkSpec desk_backbone(std::size_t categories, std::size_t image_size = 32, std::size_t in_channels = 3,
                          std::vector<std::size_t> conv_channels = {8, 16, 32},
                          std::vector<std::size_t> fc_units = {64, 32});

template <typename T>
struct LayerParams {
  BasicTensor<T> kernel;  // conv: [out,in,kh,kw]; fc: [out,in]
  BasicTensor<T> bias;
  bool empty() const noexcept { return kernel.empty(); }
  bool operator==(const LayerParams&) const = default;
};

/// One entry per NetworkSpec layer; non-parametric layers hold empty params.
template <typename T>
struct BasicWeights {
  std::vector<LayerParams<T>> layers;

  template <typename U>
  BasicWeights<U> cast() const {
    BasicWeights<U> out;
    out.layers.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].empty()) continue;
      out.layers[i].kernel = layers[i].kernel.template cast<U>();
      out.layers[i].bias = layers[i].bias.template cast<U>();
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : layers) n += p.kernel.size() + p.bias.size();
    return n;
  }

  bool operator==(const BasicWeights&) const = default;
};

using Weights = BasicWeights<float>;

/// He-uniform kernels and zero biases from a seeded generator.
Weights init_weights(const NetworkSpec& spec, std::uint64_t seed);

/// Throws ShapeError unless every parameter tensor matches the NetworkSpec.
void check_weights(const NetworkSpec& spec, const Weights& weights);

struct Model {
  NetworkSpec spec;
  Weights weights;
};

enum class ModulationMode { additive, multiplicative };

/// Per-map terms applied at targeted ReLU layers, keyed by relu_index.
/// additive: x = relu(I + term[k]); multiplicative: x = term[k] * relu(I).
struct ReluModulation {
  ModulationMode mode = ModulationMode::multiplicative;
  std::map<int, std::vector<double>> terms;
  int first_layer() const { return terms.empty() ? 0 : terms.begin()->first; }
};

template <typename T>
struct BasicForwardTrace {
  std::vector<BasicTensor<T>> relu_inputs;   // slot r-1 holds ReLU r's (unmodulated) input
  std::vector<BasicTensor<T>> relu_outputs;  // slot r-1 holds ReLU r's output
  BasicTensor<T> features;                   // last ReLU output, flattened
  BasicTensor<T> logits;                     // softmax input, when present
  BasicTensor<T> probabilities;              // softmax output, when present
};

using ForwardTrace = BasicForwardTrace<float>;

/// Full forward pass. With a modulation, terms are applied at their ReLU
/// layers only; every other layer is computed exactly as without one.
template <typename T>
BasicForwardTrace<T> forward(const NetworkSpec& spec, const BasicWeights<T>& weights, const BasicTensor<T>& image,
                             const ReluModulation* modulation = nullptr);

/// Resumes a forward pass at ReLU `relu_index` given that layer's input.
/// Trace slots for earlier ReLUs are left empty.
template <typename T>
BasicForwardTrace<T> forward_from(const NetworkSpec& spec, const BasicWeights<T>& weights, int relu_index,
                                  const BasicTensor<T>& relu_input, const ReluModulation* modulation = nullptr);

}  // namespace fba
