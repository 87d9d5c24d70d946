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

#include "fba/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "fba/bytes.hpp"
#include "fba/errors.hpp"
#include "fba/imagesets.hpp"

namespace fba {

namespace {

/// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(const std::string& data, std::size_t& pos) {
  for (;;) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (pos < data.size() && data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  return data.substr(start, pos - start);
}

std::size_t header_number(const std::string& data, std::size_t& pos, const std::filesystem::path& path) {
  const std::string tok = next_token(data, pos);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError(FormatError::Kind::syntax, path.string() + ": bad PNM header field '" + tok + "'");
  }
  return std::stoull(tok);
}

}  // namespace

Tensor read_pnm(const std::filesystem::path& path) {
  const std::string data = bytes::read_file(path);
  std::size_t pos = 0;
  const std::string magic = next_token(data, pos);
  std::size_t channels;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError(FormatError::Kind::bad_magic, path.string() + ": expected P5 or P6");
  }
  const std::size_t w = header_number(data, pos, path);
  const std::size_t h = header_number(data, pos, path);
  const std::size_t maxval = header_number(data, pos, path);
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) {
    throw FormatError(FormatError::Kind::inconsistent, path.string() + ": unsupported PNM dimensions or maxval");
  }
  ++pos;  // single whitespace byte before the raster
  if (data.size() < pos + w * h * channels) {
    throw FormatError(FormatError::Kind::truncated, path.string() + ": raster shorter than " +
                                                        std::to_string(w * h * channels) + " bytes");
  }
  Tensor image({channels, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const auto byte = static_cast<unsigned char>(data[pos + (y * w + x) * channels + c]);
        image.at(c, y, x) = static_cast<float>(byte) / static_cast<float>(maxval);
      }
    }
  }
  return image;
}

void write_pnm(const Tensor& image, const std::filesystem::path& path) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
    throw ShapeError("write_pnm needs a [1,H,W] or [3,H,W] image, got " + shape_string(image.shape()));
  }
  const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);
  std::string out = (channels == 1 ? "P5\n" : "P6\n") + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + channels * h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        out += static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
      }
    }
  }
  bytes::write_file(path, out);
}

Dataset load_image_directory(const std::filesystem::path& root, std::size_t size, std::size_t channels) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw ConfigError("image directory not found: " + root.string());
  if (channels != 1 && channels != 3) throw ArgumentError("image channels must be 1 or 3");
  std::vector<fs::path> category_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) category_dirs.push_back(entry.path());
  }
  std::sort(category_dirs.begin(), category_dirs.end());
  Dataset dataset;
  for (const auto& dir : category_dirs) {
    const int label = static_cast<int>(dataset.categories.size());
    dataset.categories.push_back(dir.filename().string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      Tensor pixels = read_pnm(file);
      if (pixels.dim(0) != channels) {
        Tensor converted({channels, pixels.dim(1), pixels.dim(2)});
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t y = 0; y < pixels.dim(1); ++y) {
            for (std::size_t x = 0; x < pixels.dim(2); ++x) {
              if (channels == 3) {
                converted.at(c, y, x) = pixels.at(0, y, x);
              } else {
                converted.at(0, y, x) = (pixels.at(0, y, x) + pixels.at(1, y, x) + pixels.at(2, y, x)) / 3.0f;
              }
            }
          }
        }
        pixels = std::move(converted);
      }
      dataset.images.push_back(
          {dataset.categories.back() + "/" + file.filename().string(), resize(pixels, size, size), label});
    }
  }
  if (dataset.categories.empty()) throw ConfigError("image directory has no category subdirectories: " + root.string());
  return dataset;
}

}  // namespace fba
