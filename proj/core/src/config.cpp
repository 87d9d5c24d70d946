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

#include "fba/config.hpp"

#include <cmath>
#include <functional>

#include "fba/bytes.hpp"
#include "fba/errors.hpp"
#include "fba/synthetic.hpp"
#include "json.hpp"

namespace fba {

namespace {

using json = nlohmann::json;

/// Walks one JSON object, remembering which keys were read so leftovers can
/// be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "must be an object");
  }

  [[noreturn]] static void fail(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "' " + what);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

  void count(const std::string& name, std::size_t& out) {
    if (const json* v = find(name)) {
      if (!v->is_number_integer() || v->get<long long>() < 0) fail(key(name), "must be a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void real(const std::string& name, double& out) {
    if (const json* v = find(name)) {
      if (!v->is_number() || !std::isfinite(v->get<double>())) fail(key(name), "must be a finite number");
      out = v->get<double>();
    }
  }
  void flag(const std::string& name, bool& out) {
    if (const json* v = find(name)) {
      if (!v->is_boolean()) fail(key(name), "must be true or false");
      out = v->get<bool>();
    }
  }
  void text(const std::string& name, std::string& out) {
    if (const json* v = find(name)) {
      if (!v->is_string()) fail(key(name), "must be a string");
      out = v->get<std::string>();
    }
  }
  void path(const std::string& name, std::filesystem::path& out) {
    std::string s;
    text(name, s);
    if (!s.empty()) out = s;
  }
  template <typename T>
  void list(const std::string& name, std::vector<T>& out, const std::function<T(const json&, const std::string&)>& item) {
    if (const json* v = find(name)) {
      if (!v->is_array()) fail(key(name), "must be a list");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) out.push_back(item((*v)[i], key(name) + "[" + std::to_string(i) + "]"));
    }
  }
  Section child(const std::string& name, const json& fallback) {
    const json* v = find(name);
    return Section(v ? *v : fallback, key(name));
  }
  bool has(const std::string& name) const { return node_.contains(name); }

  void finish() const {
    for (const auto& [k, v] : node_.items()) {
      if (!seen_.contains(k)) fail(key(k), "is not recognized");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
auto wrap(F parse) {
  return [parse](const json& v, const std::string& key) {
    if (!v.is_string()) Section::fail(key, "must be a string");
    try {
      return parse(v.get<std::string>());
    } catch (const ArgumentError& e) {
      Section::fail(key, e.what());
    }
  };
}

std::size_t as_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) Section::fail(key, "must be a non-negative integer");
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number() || !std::isfinite(v.get<double>())) Section::fail(key, "must be a finite number");
  return v.get<double>();
}

std::set<int> as_layers(const json& v, const std::string& key) {
  if (v.is_string()) {
    try {
      return parse_layers(v.get<std::string>());
    } catch (const ArgumentError& e) {
      Section::fail(key, e.what());
    }
  }
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array() || v.empty()) Section::fail(key, "must be a layer list such as [5] or \"4+5\"");
  std::set<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) Section::fail(key, "must contain integers");
    out.insert(x.get<int>());
  }
  return out;
}

json dataset_json(const DatasetConfig& d) {
  return {{"source", d.source},
          {"root", d.source == "directory" ? d.root.string() : ""},
          {"categories", d.categories},
          {"train_per_category", d.train_per_category},
          {"test_per_category", d.test_per_category},
          {"size", d.size}};
}

json names(const std::vector<ImagesetKind>& kinds) {
  json out = json::array();
  for (auto k : kinds) out.push_back(to_string(k));
  return out;
}

}  // namespace

std::uint64_t RunConfig::master_seed() const {
  if (!seed) throw ConfigError("config key 'seed' is required (or pass --seed)");
  return *seed;
}

std::string RunConfig::canonical(const std::string& section) const {
  json j;
  if (section == "dataset") {
    j = dataset_json(dataset);
  } else if (section == "backbone") {
    j = {{"conv", backbone.conv},
         {"fc", backbone.fc},
         {"lr", backbone.hyper.lr},
         {"momentum", backbone.hyper.momentum},
         {"epochs", backbone.hyper.epochs},
         {"batch", backbone.hyper.batch}};
  } else if (section == "patterns") {
    j = {{"images_per_category", pattern_images}};
  } else if (section == "imagesets") {
    j = {{"array_count", imagesets.array_count},
         {"merged_count", imagesets.merged_count},
         {"merged_weight", imagesets.merged_weight}};
  } else if (section == "evaluate") {
    const auto& e = evaluate;
    json modes = json::array(), rects = json::array(), layers = json::array(), beta = json::object();
    for (auto m : e.modes) modes.push_back(to_string(m));
    for (auto r : e.rectifications) rects.push_back(to_string(r));
    for (const auto& l : e.layer_sets) layers.push_back(layers_string(l));
    for (const auto& [m, grid] : e.beta) beta[to_string(m)] = grid;
    j = {{"imagesets", names(e.imagesets)},
         {"attended", names(e.attended)},
         {"categories", e.categories},
         {"modes", modes},
         {"rectifications", rects},
         {"layer_sets", layers},
         {"beta", beta},
         {"folds", e.folds},
         {"train_positives", e.train_positives},
         {"train_negatives", e.train_negatives},
         {"test_positives", e.test_positives},
         {"test_negatives", e.test_negatives},
         {"reg", e.reg},
         {"multi_layer_scale", e.multi_layer_scale},
         {"clamp_slope", e.clamp_slope},
         {"control", e.control},
         {"perturb",
          {{"kind", e.perturb.kind == PerturbSpec::Kind::shuffle ? "shuffle" : "gaussian"},
           {"scale", e.perturb.scale}}},
         {"topk", e.topk}};
  } else if (section == "analyze") {
    j = {{"alpha", analyze.alpha}};
  } else {
    throw ArgumentError("unknown config section '" + section + "'");
  }
  return j.dump();
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  const json empty = json::object();
  Section top(root, "");

  if (const json* s = top.find("seed")) {
    if (!s->is_number_unsigned()) Section::fail("seed", "must be a non-negative integer");
    c.seed = s->get<std::uint64_t>();
  }

  {
    auto p = top.child("paths", empty);
    p.path("out", c.paths.out);
    p.path("weights", c.paths.weights);
    p.path("patterns", c.paths.patterns);
    p.path("imagesets", c.paths.imagesets);
    p.path("results", c.paths.results);
    p.finish();
  }
  {
    auto d = top.child("dataset", empty);
    d.text("source", c.dataset.source);
    d.path("root", c.dataset.root);
    d.count("categories", c.dataset.categories);
    d.count("train_per_category", c.dataset.train_per_category);
    d.count("test_per_category", c.dataset.test_per_category);
    d.count("size", c.dataset.size);
    d.finish();
  }
  {
    auto b = top.child("backbone", empty);
    b.list<std::size_t>("conv", c.backbone.conv, as_count);
    b.list<std::size_t>("fc", c.backbone.fc, as_count);
    b.real("lr", c.backbone.hyper.lr);
    b.real("momentum", c.backbone.hyper.momentum);
    b.count("epochs", c.backbone.hyper.epochs);
    b.count("batch", c.backbone.hyper.batch);
    b.finish();
  }
  {
    auto p = top.child("patterns", empty);
    p.count("images_per_category", c.pattern_images);
    p.finish();
  }
  {
    auto i = top.child("imagesets", empty);
    i.count("array_count", c.imagesets.array_count);
    i.count("merged_count", c.imagesets.merged_count);
    i.real("merged_weight", c.imagesets.merged_weight);
    i.flag("write_images", c.imagesets.write_images);
    i.finish();
  }
  {
    auto e = top.child("evaluate", empty);
    auto& ev = c.evaluate;
    e.list<ImagesetKind>("imagesets", ev.imagesets, wrap(parse_imageset));
    e.list<ImagesetKind>("attended", ev.attended, wrap(parse_imageset));
    e.list<std::string>("categories", ev.categories, wrap([](const std::string& s) { return s; }));
    e.list<ModulationMode>("modes", ev.modes, wrap(parse_mode));
    e.list<Rectification>("rectifications", ev.rectifications, wrap(parse_rectification));
    e.list<std::set<int>>("layer_sets", ev.layer_sets, as_layers);
    if (e.has("beta")) {
      auto b = e.child("beta", empty);
      for (auto mode : {ModulationMode::additive, ModulationMode::multiplicative}) {
        b.list<double>(to_string(mode), ev.beta[mode], as_real);
      }
      b.finish();
    }
    e.count("folds", ev.folds);
    e.count("train_positives", ev.train_positives);
    e.count("train_negatives", ev.train_negatives);
    e.count("test_positives", ev.test_positives);
    e.count("test_negatives", ev.test_negatives);
    e.real("reg", ev.reg);
    e.real("multi_layer_scale", ev.multi_layer_scale);
    e.flag("clamp_slope", ev.clamp_slope);
    e.flag("control", ev.control);
    if (e.has("perturb")) {
      auto p = e.child("perturb", empty);
      std::string kind = "shuffle";
      p.text("kind", kind);
      if (kind == "shuffle") {
        ev.perturb.kind = PerturbSpec::Kind::shuffle;
      } else if (kind == "gaussian") {
        ev.perturb.kind = PerturbSpec::Kind::gaussian;
      } else {
        Section::fail("evaluate.perturb.kind", "must be \"shuffle\" or \"gaussian\"");
      }
      p.real("scale", ev.perturb.scale);
      p.finish();
    }
    e.count("topk", ev.topk);
    e.finish();
  }
  {
    auto a = top.child("analyze", empty);
    a.real("alpha", c.analyze.alpha);
    a.finish();
  }
  top.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  return parse_config(bytes::read_file(path));
}

void finalize_config(RunConfig& c) {
  auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) Section::fail(key, what);
  };
  c.master_seed();
  auto& p = c.paths;
  if (p.weights.empty()) p.weights = p.out / "weights.fbaw";
  if (p.patterns.empty()) p.patterns = p.out / "patterns.txt";
  if (p.imagesets.empty()) p.imagesets = p.out / "imagesets";
  if (p.results.empty()) p.results = p.out / "results.csv";

  const auto& d = c.dataset;
  require(d.source == "synthetic" || d.source == "directory", "dataset.source", "must be \"synthetic\" or \"directory\"");
  if (d.source == "directory") {
    require(!d.root.empty(), "dataset.root", "is required for a directory dataset");
    for (const char* split : {"train", "test"}) {
      if (!std::filesystem::is_directory(d.root / split)) {
        throw ConfigError("dataset path not found: " + (d.root / split).string());
      }
    }
  } else {
    require(d.categories >= 2 && d.categories <= kSyntheticCategoryLimit, "dataset.categories",
            "must be between 2 and " + std::to_string(kSyntheticCategoryLimit));
  }
  require(d.train_per_category >= 1, "dataset.train_per_category", "must be at least 1");
  require(d.test_per_category >= 1, "dataset.test_per_category", "must be at least 1");
  require(d.size >= 8 && d.size % 2 == 0, "dataset.size", "must be an even number >= 8");

  const auto& b = c.backbone;
  require(!b.conv.empty(), "backbone.conv", "must list at least one block");
  for (auto n : b.conv) require(n >= 1, "backbone.conv", "channel counts must be positive");
  for (auto n : b.fc) require(n >= 1, "backbone.fc", "widths must be positive");
  require(d.size >> b.conv.size() >= 1, "backbone.conv", "has more pooling blocks than the image size allows");
  require(b.hyper.lr > 0, "backbone.lr", "must be positive");
  require(b.hyper.momentum >= 0 && b.hyper.momentum < 1, "backbone.momentum", "must lie in [0, 1)");
  require(b.hyper.batch >= 1, "backbone.batch", "must be at least 1");

  const auto& i = c.imagesets;
  require(i.merged_weight > 0 && i.merged_weight < 1, "imagesets.merged_weight", "must lie strictly between 0 and 1");

  auto& e = c.evaluate;
  const int relus = static_cast<int>(b.conv.size() + b.fc.size());
  require(!e.imagesets.empty(), "evaluate.imagesets", "must not be empty");
  for (auto k : e.attended) {
    require(std::find(e.imagesets.begin(), e.imagesets.end(), k) != e.imagesets.end(), "evaluate.attended",
            std::string("lists '") + to_string(k) + "' which is not in evaluate.imagesets");
  }
  if (e.layer_sets.empty()) {
    for (int r = 1; r <= relus; ++r) e.layer_sets.push_back({r});
  }
  for (const auto& l : e.layer_sets) {
    require(!l.empty() && *l.begin() >= 1 && *l.rbegin() <= relus, "evaluate.layer_sets",
            "entry '" + (l.empty() ? std::string() : layers_string(l)) + "' is outside ReLU layers 1.." +
                std::to_string(relus));
  }
  if (!e.attended.empty()) {
    require(!e.modes.empty(), "evaluate.modes", "must not be empty");
    require(!e.rectifications.empty(), "evaluate.rectifications", "must not be empty");
  }
  for (auto m : e.modes) {
    const auto& grid = e.beta[m];
    require(!grid.empty(), std::string("evaluate.beta.") + to_string(m), "must not be empty");
    for (double v : grid) require(v >= 0, std::string("evaluate.beta.") + to_string(m), "values must be >= 0");
  }
  if (d.source == "synthetic") {
    const auto known = synthetic_category_names(d.categories);
    for (const auto& name : e.categories) {
      require(std::find(known.begin(), known.end(), name) != known.end(), "evaluate.categories",
              "names unknown category '" + name + "'");
    }
  }
  require(e.folds >= 1, "evaluate.folds", "must be at least 1");
  require(e.train_positives >= 1 && e.train_negatives >= 1, "evaluate.train_positives",
          "and train_negatives must be at least 1");
  require(e.test_positives >= 1 && e.test_negatives >= 1, "evaluate.test_positives",
          "and test_negatives must be at least 1");
  require(e.reg > 0, "evaluate.reg", "must be positive");
  require(e.multi_layer_scale > 0, "evaluate.multi_layer_scale", "must be positive");
  require(e.perturb.scale >= 0, "evaluate.perturb.scale", "must be >= 0");
  require(e.topk >= 1, "evaluate.topk", "must be at least 1");
  require(c.analyze.alpha > 0 && c.analyze.alpha < 1, "analyze.alpha", "must lie strictly between 0 and 1");
}

}  // namespace fba
