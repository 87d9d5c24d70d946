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

#include "fba/tensor_io.hpp"

#include <cstring>

#include "fba/errors.hpp"

#include "fba/bytes.hpp"

namespace fba {

namespace {
constexpr char kMagic[4] = {'F', 'B', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::string encode_tensor(const Tensor& tensor) {
  std::string out(kMagic, sizeof(kMagic));
  bytes::put<std::uint32_t>(out, kVersion);
  bytes::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
  for (std::size_t d : tensor.shape()) bytes::put<std::uint64_t>(out, d);
  for (float v : tensor.data()) bytes::put(out, v);
  return out;
}

Tensor decode_tensor(std::string_view data) {
  if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::bad_magic, "not an fba tensor file");
  }
  if (data.size() < 12) throw FormatError(FormatError::Kind::truncated, "tensor file ends inside the preamble");
  const auto version = bytes::get<std::uint32_t>(data, 4);
  if (version != kVersion) {
    throw FormatError(FormatError::Kind::version_mismatch, "tensor file version " + std::to_string(version));
  }
  const auto rank = bytes::get<std::uint32_t>(data, 8);
  if (rank < 1 || rank > 4) throw FormatError(FormatError::Kind::inconsistent, "tensor rank " + std::to_string(rank));
  std::size_t offset = 12;
  if (data.size() < offset + rank * 8) throw FormatError(FormatError::Kind::truncated, "tensor file ends inside the shape");
  Shape shape(rank);
  for (auto& d : shape) {
    d = bytes::get<std::uint64_t>(data, offset);
    offset += 8;
    if (d == 0) throw FormatError(FormatError::Kind::inconsistent, "zero tensor dimension");
  }
  const std::size_t count = shape_volume(shape);
  if (data.size() - offset < count * sizeof(float)) {
    throw FormatError(FormatError::Kind::truncated, "tensor payload needs " + std::to_string(count * sizeof(float)) +
                                                        " bytes, file has " + std::to_string(data.size() - offset));
  }
  if (data.size() - offset > count * sizeof(float)) {
    throw FormatError(FormatError::Kind::inconsistent, "trailing bytes after tensor payload");
  }
  std::vector<float> values(count);
  std::memcpy(values.data(), data.data() + offset, count * sizeof(float));
  return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  bytes::write_file(path, encode_tensor(tensor));
}

Tensor load_tensor(const std::filesystem::path& path) { return decode_tensor(bytes::read_file(path)); }

}  // namespace fba
