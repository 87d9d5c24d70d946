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

#include <filesystem>

#include "fba/dataset.hpp"
#include "fba/tensor.hpp"

namespace fba {

/// Reads a binary PGM (P5) or PPM (P6) with maxval <= 255 into [C,H,W] floats in [0,1].
Tensor read_pnm(const std::filesystem::path& path);

/// Writes [1,H,W] as P5 or [3,H,W] as P6, rounding to 8 bits.
void write_pnm(const Tensor& image, const std::filesystem::path& path);

/// Loads <root>/<category>/<image>.{pgm,ppm}; categories and files are taken in
/// sorted order, every image is resized to size x size with `channels` channels.
Dataset load_image_directory(const std::filesystem::path& root, std::size_t size, std::size_t channels = 3);

}  // namespace fba
