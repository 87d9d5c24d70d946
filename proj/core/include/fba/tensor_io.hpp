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

// Raw tensor file, version 1 (little-endian):
//   "FBAT" | uint32 version | uint32 rank | rank x uint64 dims | float32 payload

#include <filesystem>
#include <string>
#include <string_view>

#include "fba/tensor.hpp"

namespace fba {

std::string encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::string_view bytes);

void save_tensor(const Tensor& tensor, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace fba
