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

// Binary weight file, version 1. All integers and floats little-endian.
//
//   offset 0   4 bytes   magic "FBAW"
//   offset 4   uint32    format version (1)
//   offset 8   uint64    header length H in bytes
//   offset 16  H bytes   ASCII header, one record per '\n'-terminated line:
//                          input <C> <H> <W>
//                          provenance <token>
//                          layer conv in=<n> out=<n> kh=<n> kw=<n> stride=<n> pad=<n>
//                          layer relu index=<r>
//                          layer maxpool window=<n> stride=<n>
//                          layer fc in=<n> out=<n>
//                          layer softmax
//                          tensor <layer>.<kernel|bias> <d0,d1,..> offset=<bytes> bytes=<bytes>
//   offset 16+H          payload: float32 values of each tensor, row-major, in
//                        header order; tensor offsets are relative to the
//                        payload start and contiguous.

#include <filesystem>
#include <string>
#include <string_view>

#include "fba/network.hpp"

namespace fba {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct WeightFile {
  Model model;
  std::string provenance;  // opaque token, "-" when unset
};

std::string encode_weights(const NetworkSpec& spec, const Weights& weights, std::string_view provenance = "-");
WeightFile decode_weights(std::string_view bytes);

void save_weights(const NetworkSpec& spec, const Weights& weights, const std::filesystem::path& path,
                  std::string_view provenance = "-");
WeightFile load_weights(const std::filesystem::path& path);

}  // namespace fba
