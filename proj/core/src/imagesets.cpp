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

#include "fba/imagesets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "fba/bytes.hpp"
#include "fba/errors.hpp"
#include "fba/random.hpp"

namespace fba {

std::size_t Dataset::count(int label) const {
  return static_cast<std::size_t>(
      std::count_if(images.begin(), images.end(), [&](const ImageRecord& r) { return r.label == label; }));
}

std::vector<std::size_t> Dataset::indices_of(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].label == label) out.push_back(i);
  }
  return out;
}

int Dataset::label_of(const std::string& category) const {
  const auto it = std::find(categories.begin(), categories.end(), category);
  if (it == categories.end()) throw ArgumentError("unknown category '" + category + "'");
  return static_cast<int>(it - categories.begin());
}

const char* to_string(CompositeKind kind) noexcept { return kind == CompositeKind::array ? "array" : "merged"; }

bool CompositeRecord::contains(int label) const {
  return std::find(categories.begin(), categories.end(), label) != categories.end();
}

Tensor resize(const Tensor& image, std::size_t new_h, std::size_t new_w) {
  if (image.rank() != 3) throw ShapeError("resize needs a [C,H,W] image, got " + shape_string(image.shape()));
  if (new_h == 0 || new_w == 0) throw ArgumentError("resize target must be positive");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == new_h && w == new_w) return image;

  struct Tap {
    std::size_t lo, hi;
    float t;
  };
  auto taps = [](std::size_t from, std::size_t to) {
    std::vector<Tap> out(to);
    const double scale = static_cast<double>(from) / static_cast<double>(to);
    for (std::size_t i = 0; i < to; ++i) {
      const double src = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, static_cast<double>(from - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      out[i] = {lo, std::min(lo + 1, from - 1), static_cast<float>(src - static_cast<double>(lo))};
    }
    return out;
  };
  const auto ys = taps(h, new_h), xs = taps(w, new_w);
  Tensor out({c, new_h, new_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < new_h; ++y) {
      for (std::size_t x = 0; x < new_w; ++x) {
        const float a = image.at(ch, ys[y].lo, xs[x].lo), b = image.at(ch, ys[y].lo, xs[x].hi);
        const float p = image.at(ch, ys[y].hi, xs[x].lo), q = image.at(ch, ys[y].hi, xs[x].hi);
        const float top = a + xs[x].t * (b - a);
        const float bottom = p + xs[x].t * (q - p);
        out.at(ch, y, x) = top + ys[y].t * (bottom - top);
      }
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> usable(const Dataset& pool, const std::set<std::string>& exclude) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pool.images.size(); ++i) {
    if (!exclude.contains(pool.images[i].id)) out.push_back(i);
  }
  return out;
}

/// k distinct draws from `from` (partial Fisher-Yates on a copy).
std::vector<std::size_t> sample_distinct(std::vector<std::size_t> from, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + uniform_index(rng, from.size() - i);
    std::swap(from[i], from[j]);
  }
  from.resize(k);
  return from;
}

void paste_quadrant(Tensor& canvas, const Tensor& tile, int quadrant) {
  const std::size_t half = tile.dim(1);
  const std::size_t oy = (quadrant / 2) * half, ox = (quadrant % 2) * half;
  for (std::size_t c = 0; c < tile.dim(0); ++c) {
    for (std::size_t y = 0; y < half; ++y) {
      for (std::size_t x = 0; x < half; ++x) canvas.at(c, oy + y, ox + x) = tile.at(c, y, x);
    }
  }
}

Tensor blend(const Tensor& a, const Tensor& b, double weight) {
  const Tensor bb = b.shape() == a.shape() ? b : resize(b, a.dim(1), a.dim(2));
  Tensor out(a.shape());
  const float wa = static_cast<float>(weight), wb = static_cast<float>(1.0 - weight);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(wa * a[i] + wb * bb[i], 0.0f, 1.0f);
  return out;
}

Tensor tile_array(const std::vector<const Tensor*>& sources, const std::vector<double>& layout, std::size_t target_size) {
  const std::size_t half = target_size / 2;
  Tensor canvas({sources.front()->dim(0), target_size, target_size});
  for (std::size_t i = 0; i < sources.size(); ++i) {
    paste_quadrant(canvas, resize(*sources[i], half, half), static_cast<int>(layout[i]));
  }
  return canvas;
}

}  // namespace

std::vector<CompositeRecord> make_array(const Dataset& pool, std::size_t count, std::uint64_t seed,
                                        std::size_t target_size, const ArrayOptions& options) {
  if (target_size < 2 || target_size % 2 != 0) throw ArgumentError("array target size must be even, got " + std::to_string(target_size));
  const auto candidates = usable(pool, options.exclude);
  std::vector<std::size_t> targets, others;
  if (options.target_label) {
    for (std::size_t i : candidates) (pool.images[i].label == *options.target_label ? targets : others).push_back(i);
    if (targets.empty() || others.size() < 3) {
      throw ArgumentError("pool too small for target-label arrays: need 1 target and 3 other images");
    }
  } else if (candidates.size() < 4) {
    throw ArgumentError("pool too small for array images: " + std::to_string(candidates.size()) + " usable images, need 4");
  }

  std::vector<CompositeRecord> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    CompositeRecord rec;
    rec.kind = CompositeKind::array;
    rec.seed = derive_seed(seed, {n});
    rec.id = "array-" + std::to_string(n);
    Rng rng(rec.seed);
    std::vector<std::size_t> picks;
    if (options.target_label) {
      picks = sample_distinct(targets, 1, rng);
      const auto rest = sample_distinct(others, 3, rng);
      picks.insert(picks.end(), rest.begin(), rest.end());
    } else {
      picks = sample_distinct(candidates, 4, rng);
    }
    std::vector<double> quadrants = {0, 1, 2, 3};
    shuffle(quadrants.begin(), quadrants.end(), rng);
    std::vector<const Tensor*> sources;
    for (std::size_t i : picks) {
      rec.sources.push_back(pool.images[i].id);
      rec.categories.push_back(pool.images[i].label);
      sources.push_back(&pool.images[i].pixels);
    }
    rec.layout = quadrants;
    rec.pixels = tile_array(sources, rec.layout, target_size);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<CompositeRecord> make_merged(const Dataset& pool, std::size_t count, std::uint64_t seed, double weight,
                                         const std::set<std::string>& exclude) {
  if (!(weight > 0.0 && weight < 1.0)) throw ArgumentError("merge weight must lie in (0,1), got " + std::to_string(weight));
  const auto candidates = usable(pool, exclude);
  if (candidates.size() < 2) throw ArgumentError("pool too small for merged images: need 2 usable images");
  std::vector<CompositeRecord> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    CompositeRecord rec;
    rec.kind = CompositeKind::merged;
    rec.seed = derive_seed(seed, {n});
    rec.id = "merged-" + std::to_string(n);
    Rng rng(rec.seed);
    const std::size_t a = candidates[uniform_index(rng, candidates.size())];
    std::vector<std::size_t> partners;
    for (std::size_t i : candidates) {
      if (pool.images[i].label != pool.images[a].label) partners.push_back(i);
    }
    if (partners.empty()) throw ArgumentError("merged images need at least two categories in the pool");
    const std::size_t b = partners[uniform_index(rng, partners.size())];
    rec.sources = {pool.images[a].id, pool.images[b].id};
    rec.categories = {pool.images[a].label, pool.images[b].label};
    rec.layout = {weight, 1.0 - weight};
    rec.pixels = blend(pool.images[a].pixels, pool.images[b].pixels, weight);
    out.push_back(std::move(rec));
  }
  return out;
}

Tensor render_composite(const Dataset& pool, const CompositeRecord& record, std::size_t target_size) {
  std::unordered_map<std::string, const ImageRecord*> by_id;
  for (const auto& img : pool.images) by_id.emplace(img.id, &img);
  std::vector<const Tensor*> sources;
  for (const auto& id : record.sources) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw ArgumentError("composite " + record.id + " references unknown source " + id);
    sources.push_back(&it->second->pixels);
  }
  if (record.kind == CompositeKind::array) {
    if (sources.size() != 4 || record.layout.size() != 4) throw ArgumentError("array composite needs 4 sources");
    return tile_array(sources, record.layout, target_size);
  }
  if (sources.size() != 2 || record.layout.size() != 2) throw ArgumentError("merged composite needs 2 sources");
  return blend(*sources[0], *sources[1], record.layout[0]);
}

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

void write_manifest(const std::vector<CompositeRecord>& records, const std::vector<std::string>& category_names,
                    const std::filesystem::path& path, const std::string& provenance) {
  std::ostringstream out;
  out << "# fba-manifest 1\n# provenance " << provenance << "\n";
  out << "# id\tkind\tsources\tcategories\tlayout\tseed\n";
  for (const auto& r : records) {
    out << r.id << '\t' << to_string(r.kind) << '\t';
    for (std::size_t i = 0; i < r.sources.size(); ++i) out << (i ? "," : "") << r.sources[i];
    out << '\t';
    for (std::size_t i = 0; i < r.categories.size(); ++i) out << (i ? "," : "") << category_names.at(static_cast<std::size_t>(r.categories[i]));
    out << '\t';
    for (std::size_t i = 0; i < r.layout.size(); ++i) out << (i ? "," : "") << format_double(r.layout[i]);
    out << '\t' << r.seed << '\n';
  }
  bytes::write_file(path, out.str());
}

std::vector<CompositeRecord> read_manifest(const std::filesystem::path& path,
                                           const std::vector<std::string>& category_names, std::string* provenance) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open manifest " + path.string());
  std::vector<CompositeRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (provenance && line.rfind("# provenance ", 0) == 0) *provenance = line.substr(13);
      continue;
    }
    const auto fields = split(line, '\t');
    auto fail = [&](const std::string& why) {
      throw FormatError(FormatError::Kind::syntax, path.string() + ":" + std::to_string(lineno) + ": " + why);
    };
    if (fields.size() != 6) fail("expected 6 tab-separated fields");
    CompositeRecord r;
    r.id = fields[0];
    if (fields[1] == "array") {
      r.kind = CompositeKind::array;
    } else if (fields[1] == "merged") {
      r.kind = CompositeKind::merged;
    } else {
      fail("unknown kind '" + fields[1] + "'");
    }
    r.sources = split(fields[2], ',');
    for (const auto& name : split(fields[3], ',')) {
      const auto it = std::find(category_names.begin(), category_names.end(), name);
      if (it == category_names.end()) fail("unknown category '" + name + "'");
      r.categories.push_back(static_cast<int>(it - category_names.begin()));
    }
    for (const auto& v : split(fields[4], ',')) {
      double d = 0;
      const auto res = std::from_chars(v.data(), v.data() + v.size(), d);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size()) fail("bad layout value '" + v + "'");
      r.layout.push_back(d);
    }
    const auto res = std::from_chars(fields[5].data(), fields[5].data() + fields[5].size(), r.seed);
    if (res.ec != std::errc()) fail("bad seed");
    const std::size_t expected = r.kind == CompositeKind::array ? 4 : 2;
    if (r.sources.size() != expected || r.categories.size() != expected || r.layout.size() != expected) {
      fail("composite lists the wrong number of sources for its kind");
    }
    out.push_back(std::move(r));
  }
  return out;
}

Tensor stack_pixels(const std::vector<CompositeRecord>& records) {
  if (records.empty()) throw ArgumentError("no composites to stack");
  const Shape& s = records.front().pixels.shape();
  std::vector<float> values;
  values.reserve(records.size() * shape_volume(s));
  for (const auto& r : records) {
    if (r.pixels.shape() != s) throw ShapeError("composite " + r.id + " has shape " + shape_string(r.pixels.shape()));
    values.insert(values.end(), r.pixels.data().begin(), r.pixels.data().end());
  }
  return Tensor({records.size(), s[0], s[1], s[2]}, std::move(values));
}

void unstack_pixels(const Tensor& bundle, std::vector<CompositeRecord>& records) {
  if (bundle.rank() != 4 || bundle.dim(0) != records.size()) {
    throw ShapeError("image bundle " + shape_string(bundle.shape()) + " does not hold " + std::to_string(records.size()) +
                     " images");
  }
  const std::size_t per = bundle.size() / records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::vector<float> v(bundle.data().begin() + static_cast<std::ptrdiff_t>(i * per),
                         bundle.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
    records[i].pixels = Tensor({bundle.dim(1), bundle.dim(2), bundle.dim(3)}, std::move(v));
  }
}

}  // namespace fba
