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

#include "fba/weights_io.hpp"

#include <sstream>
#include <variant>

#include "fba/bytes.hpp"
#include "fba/errors.hpp"

namespace fba {

namespace {

constexpr char kMagic[4] = {'F', 'B', 'A', 'W'};
constexpr std::size_t kPreamble = 16;

std::string join_shape(const Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(shape[i]);
  }
  return out;
}

[[noreturn]] void syntax(const std::string& line, const std::string& why) {
  throw FormatError(FormatError::Kind::syntax, why + " in header line '" + line + "'");
}

std::size_t parse_size(const std::string& text, const std::string& line) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) syntax(line, "bad integer '" + text + "'");
  return std::stoull(text);
}

/// Parses "key=value" and checks the key.
std::size_t keyed(std::istringstream& in, const char* key, const std::string& line) {
  std::string tok;
  if (!(in >> tok)) syntax(line, std::string("missing ") + key);
  const auto eq = tok.find('=');
  if (eq == std::string::npos || tok.substr(0, eq) != key) syntax(line, std::string("expected ") + key + "=");
  return parse_size(tok.substr(eq + 1), line);
}

LayerSpec parse_layer(const std::string& line) {
  std::istringstream in(line);
  std::string word, kind;
  in >> word >> kind;
  if (kind == "conv") {
    ConvLayer c;
    c.in_channels = keyed(in, "in", line);
    c.out_channels = keyed(in, "out", line);
    c.kernel_h = keyed(in, "kh", line);
    c.kernel_w = keyed(in, "kw", line);
    c.stride = keyed(in, "stride", line);
    c.pad = keyed(in, "pad", line);
    return c;
  }
  if (kind == "relu") return ReluLayer{static_cast<int>(keyed(in, "index", line))};
  if (kind == "maxpool") {
    MaxPoolLayer m;
    m.window = keyed(in, "window", line);
    m.stride = keyed(in, "stride", line);
    return m;
  }
  if (kind == "fc") {
    FcLayer f;
    f.in_features = keyed(in, "in", line);
    f.out_features = keyed(in, "out", line);
    return f;
  }
  if (kind == "softmax") return SoftmaxLayer{};
  syntax(line, "unknown layer kind '" + kind + "'");
}

std::string layer_line(const LayerSpec& layer) {
  std::ostringstream out;
  out << "layer ";
  if (const auto* c = std::get_if<ConvLayer>(&layer)) {
    out << "conv in=" << c->in_channels << " out=" << c->out_channels << " kh=" << c->kernel_h
        << " kw=" << c->kernel_w << " stride=" << c->stride << " pad=" << c->pad;
  } else if (const auto* r = std::get_if<ReluLayer>(&layer)) {
    out << "relu index=" << r->index;
  } else if (const auto* m = std::get_if<MaxPoolLayer>(&layer)) {
    out << "maxpool window=" << m->window << " stride=" << m->stride;
  } else if (const auto* f = std::get_if<FcLayer>(&layer)) {
    out << "fc in=" << f->in_features << " out=" << f->out_features;
  } else {
    out << "softmax";
  }
  return out.str();
}

}  // namespace

std::string encode_weights(const NetworkSpec& spec, const Weights& weights, std::string_view provenance) {
  validate(spec);
  check_weights(spec, weights);
  if (provenance.empty() || provenance.find_first_of(" \t\n") != std::string_view::npos) {
    throw ArgumentError("weight provenance must be a single non-empty token");
  }

  std::ostringstream header;
  header << "input " << spec.input[0] << ' ' << spec.input[1] << ' ' << spec.input[2] << '\n';
  header << "provenance " << provenance << '\n';
  for (const auto& layer : spec.layers) header << layer_line(layer) << '\n';
  std::size_t offset = 0;
  std::string payload;
  auto emit = [&](const std::string& name, const Tensor& t) {
    const std::size_t nbytes = t.size() * sizeof(float);
    header << "tensor " << name << ' ' << join_shape(t.shape()) << " offset=" << offset << " bytes=" << nbytes << '\n';
    for (float v : t.data()) bytes::put(payload, v);
    offset += nbytes;
  };
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    if (weights.layers[i].empty()) continue;
    emit(std::to_string(i) + ".kernel", weights.layers[i].kernel);
    emit(std::to_string(i) + ".bias", weights.layers[i].bias);
  }

  const std::string text = header.str();
  std::string out(kMagic, sizeof(kMagic));
  bytes::put<std::uint32_t>(out, kWeightFormatVersion);
  bytes::put<std::uint64_t>(out, text.size());
  out += text;
  out += payload;
  return out;
}

WeightFile decode_weights(std::string_view data) {
  if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(FormatError::Kind::bad_magic, "not an fba weight file");
  }
  if (data.size() < kPreamble) throw FormatError(FormatError::Kind::truncated, "file ends inside the preamble");
  const auto version = bytes::get<std::uint32_t>(data, 4);
  if (version != kWeightFormatVersion) {
    throw FormatError(FormatError::Kind::version_mismatch,
                      "file has version " + std::to_string(version) + ", reader supports " +
                          std::to_string(kWeightFormatVersion));
  }
  const auto header_len = bytes::get<std::uint64_t>(data, 8);
  if (header_len > data.size() - kPreamble) throw FormatError(FormatError::Kind::truncated, "file ends inside the header");
  const std::string header(data.substr(kPreamble, header_len));
  const std::string_view payload = data.substr(kPreamble + header_len);

  WeightFile file;
  NetworkSpec& spec = file.model.spec;
  bool have_input = false;
  struct Entry {
    std::string name;
    Shape shape;
    std::size_t offset, nbytes;
  };
  std::vector<Entry> entries;

  std::istringstream lines(header);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream in(line);
    std::string word;
    in >> word;
    if (word == "input") {
      std::string c, h, w, extra;
      if (!(in >> c >> h >> w) || (in >> extra)) syntax(line, "input needs three dimensions");
      spec.input = {parse_size(c, line), parse_size(h, line), parse_size(w, line)};
      have_input = true;
    } else if (word == "provenance") {
      if (!(in >> file.provenance)) syntax(line, "missing provenance token");
    } else if (word == "layer") {
      spec.layers.push_back(parse_layer(line));
    } else if (word == "tensor") {
      Entry e;
      std::string dims;
      if (!(in >> e.name >> dims)) syntax(line, "tensor needs a name and shape");
      std::istringstream ds(dims);
      std::string d;
      while (std::getline(ds, d, ',')) e.shape.push_back(parse_size(d, line));
      e.offset = keyed(in, "offset", line);
      e.nbytes = keyed(in, "bytes", line);
      entries.push_back(std::move(e));
    } else {
      syntax(line, "unknown record '" + word + "'");
    }
  }
  if (!have_input) throw FormatError(FormatError::Kind::syntax, "header has no input record");

  try {
    validate(spec);
  } catch (const ShapeError& e) {
    throw FormatError(FormatError::Kind::inconsistent, e.what());
  }

  // Expected tensor list, in layer order.
  std::vector<std::pair<std::string, Shape>> expected;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (const auto* c = std::get_if<ConvLayer>(&spec.layers[i])) {
      expected.emplace_back(std::to_string(i) + ".kernel", Shape{c->out_channels, c->in_channels, c->kernel_h, c->kernel_w});
      expected.emplace_back(std::to_string(i) + ".bias", Shape{c->out_channels});
    } else if (const auto* f = std::get_if<FcLayer>(&spec.layers[i])) {
      expected.emplace_back(std::to_string(i) + ".kernel", Shape{f->out_features, f->in_features});
      expected.emplace_back(std::to_string(i) + ".bias", Shape{f->out_features});
    }
  }
  if (entries.size() != expected.size()) {
    throw FormatError(FormatError::Kind::inconsistent, "header lists " + std::to_string(entries.size()) +
                                                           " tensors, layers need " + std::to_string(expected.size()));
  }

  file.model.weights.layers.resize(spec.layers.size());
  std::size_t next_offset = 0;
  for (std::size_t t = 0; t < entries.size(); ++t) {
    const Entry& e = entries[t];
    if (e.name != expected[t].first || e.shape != expected[t].second) {
      throw FormatError(FormatError::Kind::inconsistent, "tensor " + e.name + " " + shape_string(e.shape) +
                                                             " does not match expected " + expected[t].first + " " +
                                                             shape_string(expected[t].second));
    }
    if (e.offset != next_offset || e.nbytes != shape_volume(e.shape) * sizeof(float)) {
      throw FormatError(FormatError::Kind::inconsistent, "tensor " + e.name + " has offset/size inconsistent with its shape");
    }
    if (e.offset + e.nbytes > payload.size()) {
      throw FormatError(FormatError::Kind::truncated, "payload ends inside tensor " + e.name + " (needs " +
                                                          std::to_string(e.offset + e.nbytes) + " bytes, file has " +
                                                          std::to_string(payload.size()) + ")");
    }
    std::vector<float> values(shape_volume(e.shape));
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = bytes::get<float>(payload, e.offset + k * sizeof(float));
    const std::size_t layer = std::stoull(e.name.substr(0, e.name.find('.')));
    Tensor tensor(e.shape, std::move(values));
    if (e.name.ends_with(".kernel")) {
      file.model.weights.layers[layer].kernel = std::move(tensor);
    } else {
      file.model.weights.layers[layer].bias = std::move(tensor);
    }
    next_offset = e.offset + e.nbytes;
  }
  if (next_offset != payload.size()) {
    throw FormatError(FormatError::Kind::inconsistent, std::to_string(payload.size() - next_offset) +
                                                           " trailing payload bytes after the last tensor");
  }
  return file;
}

void save_weights(const NetworkSpec& spec, const Weights& weights, const std::filesystem::path& path,
                  std::string_view provenance) {
  bytes::write_file(path, encode_weights(spec, weights, provenance));
}

WeightFile load_weights(const std::filesystem::path& path) { return decode_weights(bytes::read_file(path)); }

}  // namespace fba
