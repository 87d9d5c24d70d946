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

#include "fba/attention.hpp"

#include <algorithm>
#include <cmath>

#include "fba/errors.hpp"

namespace fba {

const char* to_string(ModulationMode mode) noexcept {
  return mode == ModulationMode::additive ? "additive" : "multiplicative";
}

const char* to_string(Rectification rect) noexcept {
  return rect == Rectification::bidirectional ? "bidirectional" : "positive";
}

ModulationMode parse_mode(const std::string& text) {
  if (text == "additive") return ModulationMode::additive;
  if (text == "multiplicative") return ModulationMode::multiplicative;
  throw ArgumentError("unknown attention mode '" + text + "' (additive|multiplicative)");
}

Rectification parse_rectification(const std::string& text) {
  if (text == "bidirectional") return Rectification::bidirectional;
  if (text == "positive") return Rectification::positive;
  throw ArgumentError("unknown rectification '" + text + "' (bidirectional|positive)");
}

std::vector<double> spatial_average(const ForwardTrace& trace, int relu_index) {
  if (relu_index < 1 || static_cast<std::size_t>(relu_index) > trace.relu_outputs.size() ||
      trace.relu_outputs[static_cast<std::size_t>(relu_index - 1)].empty()) {
    throw ArgumentError("trace has no activity for relu " + std::to_string(relu_index));
  }
  const Tensor& x = trace.relu_outputs[static_cast<std::size_t>(relu_index - 1)];
  const std::size_t maps = x.dim(0);
  const std::size_t per_map = x.size() / maps;
  std::vector<double> out(maps);
  for (std::size_t k = 0; k < maps; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < per_map; ++i) sum += static_cast<double>(x[k * per_map + i]);
    out[k] = sum / static_cast<double>(per_map);
  }
  return out;
}

// ---------------------------------------------------------------------------

void ActivitySummary::Moments::add(const std::vector<double>& x) {
  if (mean.empty()) {
    mean.assign(x.size(), 0.0);
    m2.assign(x.size(), 0.0);
  }
  ++n;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double delta = x[k] - mean[k];
    mean[k] += delta / static_cast<double>(n);
    m2[k] += delta * (x[k] - mean[k]);
  }
}

void ActivitySummary::Moments::merge(const Moments& other) {
  if (other.n == 0) return;
  if (n == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n), nb = static_cast<double>(other.n), total = na + nb;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double delta = other.mean[k] - mean[k];
    mean[k] += delta * nb / total;
    m2[k] += other.m2[k] + delta * delta * na * nb / total;
  }
  n += other.n;
}

ActivitySummary::ActivitySummary(std::vector<std::string> categories, std::vector<std::size_t> channels)
    : categories_(std::move(categories)), channels_(std::move(channels)), counts_(categories_.size(), 0) {
  moments_.assign(categories_.size(), std::vector<Moments>(channels_.size()));
}

void ActivitySummary::add(int category, const std::vector<std::vector<double>>& activity) {
  if (category < 0 || static_cast<std::size_t>(category) >= categories_.size()) {
    throw ArgumentError("activity for unknown category " + std::to_string(category));
  }
  if (activity.size() != channels_.size()) {
    throw ShapeError("activity covers " + std::to_string(activity.size()) + " layers, summary has " +
                     std::to_string(channels_.size()));
  }
  for (std::size_t l = 0; l < activity.size(); ++l) {
    if (activity[l].size() != channels_[l]) {
      throw ShapeError("activity at relu " + std::to_string(l + 1) + " has " + std::to_string(activity[l].size()) +
                       " maps, expected " + std::to_string(channels_[l]));
    }
  }
  const auto c = static_cast<std::size_t>(category);
  for (std::size_t l = 0; l < activity.size(); ++l) moments_[c][l].add(activity[l]);
  ++counts_[c];
  ++total_;
}

void ActivitySummary::merge(const ActivitySummary& other) {
  if (other.categories_ != categories_ || other.channels_ != channels_) {
    throw ArgumentError("cannot merge activity summaries over different categories or layers");
  }
  for (std::size_t c = 0; c < categories_.size(); ++c) {
    for (std::size_t l = 0; l < channels_.size(); ++l) moments_[c][l].merge(other.moments_[c][l]);
    counts_[c] += other.counts_[c];
  }
  total_ += other.total_;
}

const ActivitySummary::Moments& ActivitySummary::moments(int relu_index, int category) const {
  if (relu_index < 1 || relu_index > layers()) throw ArgumentError("summary has no relu " + std::to_string(relu_index));
  if (category < 0 || static_cast<std::size_t>(category) >= categories_.size()) {
    throw ArgumentError("summary has no category " + std::to_string(category));
  }
  return moments_[static_cast<std::size_t>(category)][static_cast<std::size_t>(relu_index - 1)];
}

std::vector<double> ActivitySummary::mean(int relu_index) const {
  if (total_ == 0) throw ArgumentError("activity summary is empty");
  Moments all;
  for (std::size_t c = 0; c < categories_.size(); ++c) all.merge(moments(relu_index, static_cast<int>(c)));
  return all.mean;
}

std::vector<double> ActivitySummary::stddev(int relu_index) const {
  if (total_ == 0) throw ArgumentError("activity summary is empty");
  Moments all;
  for (std::size_t c = 0; c < categories_.size(); ++c) all.merge(moments(relu_index, static_cast<int>(c)));
  std::vector<double> out(all.m2.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::sqrt(std::max(0.0, all.m2[k]) / static_cast<double>(all.n));
  return out;
}

std::vector<double> ActivitySummary::category_mean(int relu_index, int category) const {
  const Moments& m = moments(relu_index, category);
  if (m.n == 0) throw ArgumentError("category '" + categories_[static_cast<std::size_t>(category)] + "' has no images");
  return m.mean;
}

// ---------------------------------------------------------------------------

const std::vector<float>& FeaturePatternSet::at(int relu_index, int category) const {
  const auto it = patterns.find({relu_index, category});
  if (it == patterns.end()) {
    throw ArgumentError("no feature pattern for relu " + std::to_string(relu_index) + ", category " +
                        std::to_string(category));
  }
  return it->second;
}

int FeaturePatternSet::category_index(const std::string& name) const {
  const auto it = std::find(categories.begin(), categories.end(), name);
  if (it == categories.end()) throw ArgumentError("pattern set has no category '" + name + "'");
  return static_cast<int>(it - categories.begin());
}

FeaturePatternSet FeaturePatternSet::rectified(Rectification rect) const {
  FeaturePatternSet out = *this;
  if (rect == Rectification::positive) {
    for (auto& [key, values] : out.patterns) {
      for (float& v : values) v = std::max(v, 0.0f);
    }
  }
  out.rectification = rect == Rectification::positive ? Rectification::positive : rectification;
  return out;
}

FeaturePatternSet build_patterns(const ActivitySummary& summary, Rectification rectification) {
  if (summary.total() == 0) throw ArgumentError("cannot build patterns from zero images");
  FeaturePatternSet set;
  set.categories = summary.categories();
  set.counts = summary.counts();
  set.channels = summary.channels();
  for (std::size_t c = 0; c < set.categories.size(); ++c) {
    if (set.counts[c] == 0) throw ArgumentError("category '" + set.categories[c] + "' has no images");
  }
  for (int r = 1; r <= summary.layers(); ++r) {
    const auto mean = summary.mean(r);
    const auto sd = summary.stddev(r);
    for (std::size_t c = 0; c < set.categories.size(); ++c) {
      const auto cm = summary.category_mean(r, static_cast<int>(c));
      std::vector<float> f(mean.size());
      for (std::size_t k = 0; k < f.size(); ++k) {
        f[k] = sd[k] > 0.0 ? static_cast<float>((cm[k] - mean[k]) / sd[k]) : 0.0f;
      }
      set.patterns.emplace(std::pair{r, static_cast<int>(c)}, std::move(f));
    }
  }
  return rectification == Rectification::positive ? set.rectified(Rectification::positive) : set;
}

// ---------------------------------------------------------------------------

void AttentionConfig::validate() const {
  if (layers.empty()) throw ArgumentError("attention needs at least one target layer");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ArgumentError("attention strength must be finite and >= 0");
  if (!(multi_layer_scale > 0.0)) throw ArgumentError("multi-layer scale must be positive");
}

std::vector<double> modulation_terms(const AttentionConfig& config, const FeaturePatternSet& patterns, int relu_index,
                                     int category) {
  const auto& f = patterns.at(relu_index, category);
  const double beta = config.effective_beta();
  std::vector<double> terms(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    double fk = f[k];
    if (config.rectification == Rectification::positive) fk = std::max(fk, 0.0);
    if (config.mode == ModulationMode::additive) {
      terms[k] = beta * fk;
    } else {
      terms[k] = 1.0 + beta * fk;
      if (config.clamp_slope) terms[k] = std::max(terms[k], 0.0);
    }
  }
  return terms;
}

ReluModulation make_modulation(const AttentionConfig& config, const FeaturePatternSet& patterns, int category) {
  config.validate();
  if (category < 0 || static_cast<std::size_t>(category) >= patterns.categories.size()) {
    throw ArgumentError("attention to unknown category " + std::to_string(category));
  }
  for (int layer : config.layers) {
    if (!patterns.has(layer, category)) {
      throw ArgumentError("no feature pattern for targeted relu " + std::to_string(layer) + ", category '" +
                          patterns.categories[static_cast<std::size_t>(category)] + "'");
    }
  }
  ReluModulation mod;
  mod.mode = config.mode;
  for (int layer : config.layers) mod.terms.emplace(layer, modulation_terms(config, patterns, layer, category));
  return mod;
}

ForwardTrace attended_forward(const Model& model, const Tensor& image, const AttentionConfig& config,
                              const FeaturePatternSet& patterns, int category) {
  const ReluModulation mod = make_modulation(config, patterns, category);
  return forward(model.spec, model.weights, image, &mod);
}

}  // namespace fba
