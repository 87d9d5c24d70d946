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

#include "fba/trainer.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "fba/errors.hpp"
#include "fba/kernels.hpp"
#include "fba/random.hpp"

namespace fba {

namespace {

template <typename T>
void add_into(BasicTensor<T>& acc, const BasicTensor<T>& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

template <typename T>
BasicWeights<T> zeros_like(const BasicWeights<T>& weights) {
  BasicWeights<T> out;
  out.layers.resize(weights.layers.size());
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    if (weights.layers[i].empty()) continue;
    out.layers[i].kernel = BasicTensor<T>(weights.layers[i].kernel.shape());
    out.layers[i].bias = BasicTensor<T>(weights.layers[i].bias.shape());
  }
  return out;
}

/// Forward with every layer input cached, then backward; gradients are added
/// into `grads`. Returns (-log p[label], argmax == label).
template <typename T>
std::pair<double, bool> sample_backprop(const NetworkSpec& spec, const BasicWeights<T>& weights,
                                        const BasicTensor<T>& image, int label, BasicWeights<T>& grads) {
  const std::size_t n = spec.layers.size();
  std::vector<BasicTensor<T>> inputs(n);
  BasicTensor<T> x = image;
  for (std::size_t i = 0; i < n; ++i) {
    inputs[i] = x;
    const auto& p = weights.layers[i];
    const LayerSpec& layer = spec.layers[i];
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      x = conv2d(x, p.kernel, p.bias, c->stride, c->pad);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      x = relu(x);
    } else if (const auto* m = std::get_if<MaxPoolLayer>(&layer)) {
      x = maxpool2d(x, m->window, m->stride);
    } else if (std::holds_alternative<FcLayer>(layer)) {
      x = affine(x.rank() == 1 ? x : x.reshaped({x.size()}), p.kernel, p.bias);
    } else {
      x = softmax(x);
    }
  }
  const auto& probs = x;
  const auto y = static_cast<std::size_t>(label);
  const double loss = -std::log(std::max(static_cast<double>(probs[y]), 1e-300));
  const auto argmax = static_cast<std::size_t>(
      std::max_element(probs.data().begin(), probs.data().end()) - probs.data().begin());

  // Combined softmax + cross-entropy gradient with respect to the logits.
  BasicTensor<T> g = probs;
  g[y] -= T{1};
  for (std::size_t i = n - 1; i-- > 0;) {
    const LayerSpec& layer = spec.layers[i];
    const BasicTensor<T>& in = inputs[i];
    const auto& p = weights.layers[i];
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      auto cg = conv2d_backward(in, p.kernel, g, c->stride, c->pad, i > 0);
      add_into(grads.layers[i].kernel, cg.kernels);
      add_into(grads.layers[i].bias, cg.bias);
      g = std::move(cg.input);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(in[k] > T{0})) g[k] = T{0};
      }
    } else if (const auto* m = std::get_if<MaxPoolLayer>(&layer)) {
      g = maxpool2d_backward(in, g, m->window, m->stride);
    } else if (std::holds_alternative<FcLayer>(layer)) {
      const BasicTensor<T> flat = in.rank() == 1 ? in : in.reshaped({in.size()});
      auto ag = affine_backward(flat, p.kernel, g);
      add_into(grads.layers[i].kernel, ag.weight);
      add_into(grads.layers[i].bias, ag.bias);
      g = ag.input.reshaped(in.shape());
    } else {
      throw ShapeError("softmax may only appear as the final layer");
    }
    if (g.empty()) break;
  }
  return {loss, argmax == y};
}

}  // namespace

template <typename T>
LossGradient<T> loss_and_gradient(const NetworkSpec& spec, const BasicWeights<T>& weights,
                                  std::span<const BasicTensor<T>> images, std::span<const int> labels) {
  if (!ends_in_softmax(spec)) throw ArgumentError("training needs a network ending in softmax");
  if (images.size() != labels.size() || images.empty()) throw ArgumentError("batch images and labels must be non-empty and aligned");
  LossGradient<T> out;
  out.grads = zeros_like(weights);
  for (std::size_t b = 0; b < images.size(); ++b) {
    const auto [loss, hit] = sample_backprop(spec, weights, images[b], labels[b], out.grads);
    out.loss += loss;
    out.correct += hit ? 1 : 0;
  }
  const T scale = T{1} / static_cast<T>(images.size());
  for (auto& p : out.grads.layers) {
    for (T& v : p.kernel.data()) v *= scale;
    for (T& v : p.bias.data()) v *= scale;
  }
  out.loss /= static_cast<double>(images.size());
  return out;
}

template LossGradient<float> loss_and_gradient(const NetworkSpec&, const BasicWeights<float>&,
                                               std::span<const BasicTensor<float>>, std::span<const int>);
template LossGradient<double> loss_and_gradient(const NetworkSpec&, const BasicWeights<double>&,
                                                std::span<const BasicTensor<double>>, std::span<const int>);

TrainResult train_backbone(const Dataset& dataset, const NetworkSpec& spec, const TrainHyper& hyper,
                           const std::function<void(const EpochStats&)>& on_epoch) {
  const auto shapes = validate(spec);
  if (!ends_in_softmax(spec)) throw ArgumentError("backbone spec must end in softmax");
  std::set<int> labels;
  for (const auto& img : dataset.images) labels.insert(img.label);
  if (labels.size() < 2) throw ArgumentError("training data needs at least two classes");
  if (shapes.back()[0] < dataset.categories.size()) {
    throw ShapeError("softmax width " + std::to_string(shapes.back()[0]) + " is smaller than the category count " +
                     std::to_string(dataset.categories.size()));
  }
  if (hyper.batch == 0) throw ArgumentError("batch size must be positive");

  TrainResult result;
  result.weights = init_weights(spec, hyper.seed);
  Weights velocity = zeros_like(result.weights);
  std::vector<std::size_t> order(dataset.images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    Rng rng(derive_seed(hyper.seed, {0x7261696eULL, epoch}));
    shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
      const std::size_t end = std::min(order.size(), start + hyper.batch);
      std::vector<Tensor> images;
      std::vector<int> batch_labels;
      for (std::size_t k = start; k < end; ++k) {
        images.push_back(dataset.images[order[k]].pixels);
        batch_labels.push_back(dataset.images[order[k]].label);
      }
      const auto lg = loss_and_gradient<float>(spec, result.weights, images, batch_labels);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("training loss became non-finite in epoch " + std::to_string(epoch) +
                              "; try a lower learning rate than " + std::to_string(hyper.lr));
      }
      loss_sum += lg.loss * static_cast<double>(end - start);
      correct += lg.correct;
      for (std::size_t i = 0; i < result.weights.layers.size(); ++i) {
        auto& w = result.weights.layers[i];
        if (w.empty()) continue;
        auto step = [&](Tensor& param, Tensor& vel, const Tensor& grad) {
          for (std::size_t k = 0; k < param.size(); ++k) {
            vel[k] = static_cast<float>(hyper.momentum * vel[k] - hyper.lr * grad[k]);
            param[k] += vel[k];
          }
        };
        step(w.kernel, velocity.layers[i].kernel, lg.grads.layers[i].kernel);
        step(w.bias, velocity.layers[i].bias, lg.grads.layers[i].bias);
      }
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(order.size()),
                     static_cast<double>(correct) / static_cast<double>(order.size())};
    if (!std::isfinite(stats.loss)) {
      throw DivergenceError("training loss became non-finite in epoch " + std::to_string(epoch) +
                            "; try a lower learning rate than " + std::to_string(hyper.lr));
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace fba
