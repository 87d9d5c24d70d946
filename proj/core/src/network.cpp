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

#include "fba/network.hpp"

#include <cmath>
#include <type_traits>

#include "fba/kernels.hpp"
#include "fba/random.hpp"

namespace fba {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string where(std::size_t i, const LayerSpec& layer) {
  return "layer " + std::to_string(i) + " (" + layer_kind(layer) + ")";
}

}  // namespace

std::string layer_kind(const LayerSpec& layer) {
  return std::visit(overloaded{[](const ConvLayer&) { return std::string("conv"); },
                               [](const ReluLayer&) { return std::string("relu"); },
                               [](const MaxPoolLayer&) { return std::string("maxpool"); },
                               [](const FcLayer&) { return std::string("fc"); },
                               [](const SoftmaxLayer&) { return std::string("softmax"); }},
                    layer);
}

std::vector<Shape> validate(const NetworkSpec& spec) {
  if (spec.input.size() != 3) throw ShapeError("network input must be [C,H,W], got " + shape_string(spec.input));
  for (std::size_t d : spec.input) {
    if (d == 0) throw ShapeError("network input has a zero dimension: " + shape_string(spec.input));
  }
  std::vector<Shape> shapes;
  Shape cur = spec.input;
  int next_relu = 1;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    std::visit(
        overloaded{
            [&](const ConvLayer& c) {
              if (cur.size() != 3) throw ShapeError(where(i, layer) + ": expects a [C,H,W] input, got " + shape_string(cur));
              if (c.in_channels != cur[0]) {
                throw ShapeError(where(i, layer) + ": in_channels " + std::to_string(c.in_channels) +
                                 " does not match incoming channels " + std::to_string(cur[0]));
              }
              if (c.stride == 0 || c.out_channels == 0 || c.kernel_h == 0 || c.kernel_w == 0) {
                throw ShapeError(where(i, layer) + ": zero-sized kernel, channel count or stride");
              }
              if (c.kernel_h > cur[1] + 2 * c.pad || c.kernel_w > cur[2] + 2 * c.pad) {
                throw ShapeError(where(i, layer) + ": kernel larger than padded input " + shape_string(cur));
              }
              cur = {c.out_channels, (cur[1] + 2 * c.pad - c.kernel_h) / c.stride + 1,
                     (cur[2] + 2 * c.pad - c.kernel_w) / c.stride + 1};
            },
            [&](const ReluLayer& r) {
              if (r.index != next_relu) {
                throw ShapeError(where(i, layer) + ": relu index " + std::to_string(r.index) + ", expected " +
                                 std::to_string(next_relu));
              }
              ++next_relu;
            },
            [&](const MaxPoolLayer& p) {
              if (cur.size() != 3) throw ShapeError(where(i, layer) + ": expects a [C,H,W] input, got " + shape_string(cur));
              if (p.window == 0 || p.stride == 0) throw ShapeError(where(i, layer) + ": window and stride must be positive");
              if (p.window > cur[1] || p.window > cur[2]) {
                throw ShapeError(where(i, layer) + ": window larger than input " + shape_string(cur));
              }
              cur = {cur[0], (cur[1] - p.window) / p.stride + 1, (cur[2] - p.window) / p.stride + 1};
            },
            [&](const FcLayer& f) {
              if (f.in_features != shape_volume(cur)) {
                throw ShapeError(where(i, layer) + ": in_features " + std::to_string(f.in_features) +
                                 " does not match incoming volume " + std::to_string(shape_volume(cur)));
              }
              if (f.out_features == 0) throw ShapeError(where(i, layer) + ": zero out_features");
              cur = {f.out_features};
            },
            [&](const SoftmaxLayer&) {
              if (cur.size() != 1) throw ShapeError(where(i, layer) + ": softmax needs a vector input, got " + shape_string(cur));
              if (i + 1 != spec.layers.size()) throw ShapeError(where(i, layer) + ": softmax must be the last layer");
            }},
        layer);
    shapes.push_back(cur);
  }
  if (next_relu == 1) throw ShapeError("network has no relu layer");
  return shapes;
}

int relu_count(const NetworkSpec& spec) {
  int n = 0;
  for (const auto& layer : spec.layers) n += std::holds_alternative<ReluLayer>(layer) ? 1 : 0;
  return n;
}

std::size_t relu_position(const NetworkSpec& spec, int relu_index) {
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (const auto* r = std::get_if<ReluLayer>(&spec.layers[i]); r && r->index == relu_index) return i;
  }
  throw ArgumentError("network has no relu layer " + std::to_string(relu_index));
}

std::size_t relu_channels(const NetworkSpec& spec, int relu_index) {
  const auto shapes = validate(spec);
  return shapes[relu_position(spec, relu_index)][0];
}

bool ends_in_softmax(const NetworkSpec& spec) {
  return !spec.layers.empty() && std::holds_alternative<SoftmaxLayer>(spec.layers.back());
}

NetworkSpec desk_backbone(std::size_t categories, std::size_t image_size, std::size_t in_channels,
                          std::vector<std::size_t> conv_channels, std::vector<std::size_t> fc_units) {
  NetworkSpec spec;
  spec.input = {in_channels, image_size, image_size};
  int relu = 1;
  std::size_t channels = in_channels, extent = image_size;
  for (std::size_t out : conv_channels) {
    spec.layers.emplace_back(ConvLayer{channels, out, 3, 3, 1, 1});
    spec.layers.emplace_back(ReluLayer{relu++});
    spec.layers.emplace_back(MaxPoolLayer{2, 2});
    channels = out;
    extent /= 2;
  }
  std::size_t features = channels * extent * extent;
  for (std::size_t units : fc_units) {
    spec.layers.emplace_back(FcLayer{features, units});
    spec.layers.emplace_back(ReluLayer{relu++});
    features = units;
  }
  spec.layers.emplace_back(FcLayer{features, categories});
  spec.layers.emplace_back(SoftmaxLayer{});
  validate(spec);
  return spec;
}

Weights init_weights(const NetworkSpec& spec, std::uint64_t seed) {
  validate(spec);
  Weights weights;
  weights.layers.resize(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    Rng rng(derive_seed(seed, {i}));
    auto fill = [&](Shape shape, std::size_t fan_in) {
      Tensor t(std::move(shape));
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (float& v : t.data()) v = static_cast<float>(uniform(rng, -bound, bound));
      return t;
    };
    if (const auto* c = std::get_if<ConvLayer>(&spec.layers[i])) {
      weights.layers[i].kernel =
          fill({c->out_channels, c->in_channels, c->kernel_h, c->kernel_w}, c->in_channels * c->kernel_h * c->kernel_w);
      weights.layers[i].bias = Tensor({c->out_channels});
    } else if (const auto* f = std::get_if<FcLayer>(&spec.layers[i])) {
      weights.layers[i].kernel = fill({f->out_features, f->in_features}, f->in_features);
      weights.layers[i].bias = Tensor({f->out_features});
    }
  }
  return weights;
}

void check_weights(const NetworkSpec& spec, const Weights& weights) {
  if (weights.layers.size() != spec.layers.size()) {
    throw ShapeError("weights cover " + std::to_string(weights.layers.size()) + " layers, spec has " +
                     std::to_string(spec.layers.size()));
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& p = weights.layers[i];
    Shape kernel, bias;
    if (const auto* c = std::get_if<ConvLayer>(&spec.layers[i])) {
      kernel = {c->out_channels, c->in_channels, c->kernel_h, c->kernel_w};
      bias = {c->out_channels};
    } else if (const auto* f = std::get_if<FcLayer>(&spec.layers[i])) {
      kernel = {f->out_features, f->in_features};
      bias = {f->out_features};
    }
    if (p.kernel.shape() != kernel || p.bias.shape() != bias) {
      throw ShapeError(where(i, spec.layers[i]) + ": parameter shapes " + shape_string(p.kernel.shape()) + "/" +
                       shape_string(p.bias.shape()) + " do not match " + shape_string(kernel) + "/" +
                       shape_string(bias));
    }
  }
}

namespace {

template <typename T>
BasicTensor<T> modulated_relu(const BasicTensor<T>& input, const std::vector<double>& terms, ModulationMode mode,
                              int relu_index) {
  const std::size_t maps = input.dim(0);
  if (terms.size() != maps) {
    throw ShapeError("modulation for relu " + std::to_string(relu_index) + " has " + std::to_string(terms.size()) +
                     " terms, layer has " + std::to_string(maps) + " maps");
  }
  const std::size_t per_map = input.size() / maps;
  BasicTensor<T> out(input.shape());
  for (std::size_t k = 0; k < maps; ++k) {
    const T term = static_cast<T>(terms[k]);
    const T* src = input.data().data() + k * per_map;
    T* dst = out.data().data() + k * per_map;
    if (mode == ModulationMode::additive) {
      for (std::size_t i = 0; i < per_map; ++i) {
        const T v = src[i] + term;
        dst[i] = v > T{0} ? v : T{0};
      }
    } else {
      for (std::size_t i = 0; i < per_map; ++i) dst[i] = src[i] > T{0} ? term * src[i] : T{0};
    }
  }
  return out;
}

template <typename T>
BasicForwardTrace<T> run(const NetworkSpec& spec, const BasicWeights<T>& weights, std::size_t start,
                         BasicTensor<T> x, const ReluModulation* modulation) {
  BasicForwardTrace<T> trace;
  const int relus = relu_count(spec);
  trace.relu_inputs.resize(static_cast<std::size_t>(relus));
  trace.relu_outputs.resize(static_cast<std::size_t>(relus));
  for (std::size_t i = start; i < spec.layers.size(); ++i) {
    const LayerSpec& layer = spec.layers[i];
    const auto& p = weights.layers[i];
    std::visit(overloaded{[&](const ConvLayer& c) { x = conv2d(x, p.kernel, p.bias, c.stride, c.pad); },
                          [&](const ReluLayer& r) {
                            const auto slot = static_cast<std::size_t>(r.index - 1);
                            trace.relu_inputs[slot] = x;
                            const std::vector<double>* terms = nullptr;
                            if (modulation) {
                              if (auto it = modulation->terms.find(r.index); it != modulation->terms.end()) {
                                terms = &it->second;
                              }
                            }
                            x = terms ? modulated_relu(x, *terms, modulation->mode, r.index) : relu(x);
                            trace.relu_outputs[slot] = x;
                            if (r.index == relus) trace.features = x.reshaped({x.size()});
                          },
                          [&](const MaxPoolLayer& m) { x = maxpool2d(x, m.window, m.stride); },
                          [&](const FcLayer&) {
                            if (x.rank() != 1) x = x.reshaped({x.size()});
                            x = affine(x, p.kernel, p.bias);
                          },
                          [&](const SoftmaxLayer&) {
                            trace.logits = x;
                            x = softmax(x);
                            trace.probabilities = x;
                          }},
               layer);
  }
  return trace;
}

void check_modulation(const NetworkSpec& spec, const ReluModulation* modulation) {
  if (!modulation) return;
  const int relus = relu_count(spec);
  for (const auto& [index, terms] : modulation->terms) {
    if (index < 1 || index > relus) {
      throw ArgumentError("modulation targets relu " + std::to_string(index) + ", network has " +
                          std::to_string(relus));
    }
  }
}

}  // namespace

template <typename T>
BasicForwardTrace<T> forward(const NetworkSpec& spec, const BasicWeights<T>& weights, const BasicTensor<T>& image,
                             const ReluModulation* modulation) {
  if (image.shape() != spec.input) {
    throw ShapeError("image shape " + shape_string(image.shape()) + " does not match network input " +
                     shape_string(spec.input));
  }
  check_modulation(spec, modulation);
  return run(spec, weights, 0, image, modulation);
}

template <typename T>
BasicForwardTrace<T> forward_from(const NetworkSpec& spec, const BasicWeights<T>& weights, int relu_index,
                                  const BasicTensor<T>& relu_input, const ReluModulation* modulation) {
  check_modulation(spec, modulation);
  if (modulation && !modulation->terms.empty() && modulation->first_layer() < relu_index) {
    throw ArgumentError("modulation targets relu " + std::to_string(modulation->first_layer()) +
                        ", before resume point " + std::to_string(relu_index));
  }
  return run(spec, weights, relu_position(spec, relu_index), relu_input, modulation);
}

template BasicForwardTrace<float> forward(const NetworkSpec&, const BasicWeights<float>&, const BasicTensor<float>&,
                                          const ReluModulation*);
template BasicForwardTrace<double> forward(const NetworkSpec&, const BasicWeights<double>&,
                                           const BasicTensor<double>&, const ReluModulation*);
template BasicForwardTrace<float> forward_from(const NetworkSpec&, const BasicWeights<float>&, int,
                                               const BasicTensor<float>&, const ReluModulation*);
template BasicForwardTrace<double> forward_from(const NetworkSpec&, const BasicWeights<double>&, int,
                                                const BasicTensor<double>&, const ReluModulation*);

}  // namespace fba
