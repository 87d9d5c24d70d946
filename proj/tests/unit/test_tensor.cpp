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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fba/errors.hpp"
#include "fba/kernels.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

using fba::Tensor;

void expect_rel_close(const Tensor& got, const Tensor& want, double rel) {
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) {
    const double tol = rel * std::abs(static_cast<double>(want[i])) + 1e-12;
    ASSERT_NEAR(got[i], want[i], tol) << "element " << i;
  }
}

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor(fba::Shape{}), fba::ShapeError);
  EXPECT_THROW(Tensor({1, 2, 3, 4, 5}), fba::ShapeError);
  EXPECT_THROW(Tensor({3, 0}), fba::ShapeError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>{1, 2, 3}), fba::ShapeError);
}

TEST(Tensor, RowMajorChannelFirst) {
  Tensor t({2, 2, 3}, std::vector<float>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  EXPECT_EQ(t.at(1, 0, 2), 8.0f);
  EXPECT_EQ(t.at(0, 1, 0), 3.0f);
  EXPECT_EQ(t.reshaped({12})[11], 11.0f);
  EXPECT_THROW(t.reshaped({5}), fba::ShapeError);
}

TEST(Tensor, BitEqualDistinguishesSignedZero) {
  Tensor a({1}, std::vector<float>{0.0f});
  Tensor b({1}, std::vector<float>{-0.0f});
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(fba::bit_equal(a, b));
}

TEST(Conv2d, ScalarMultiplyAdd) {
  Tensor x({1, 1, 1}, std::vector<float>{2});
  Tensor k({1, 1, 1, 1}, std::vector<float>{3});
  Tensor b({1}, std::vector<float>{1});
  EXPECT_EQ(fba::conv2d(x, k, b, 1, 0)[0], 7.0f);
}

TEST(Conv2d, WindowSum) {
  const auto out = fba::conv2d(Tensor({1, 3, 3}, 1.0f), Tensor({1, 1, 2, 2}, 1.0f), Tensor({1}), 1, 0);
  EXPECT_EQ(out.shape(), (fba::Shape{1, 2, 2}));
  for (float v : out.data()) EXPECT_EQ(v, 4.0f);
}

TEST(Conv2d, CrossCorrelationNoFlip) {
  // A kernel with a single 1 at its top-left picks the top-left neighbour.
  Tensor x({1, 3, 3}, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor k({1, 1, 2, 2}, std::vector<float>{1, 0, 0, 0});
  const auto out = fba::conv2d(x, k, Tensor({1}), 1, 0);
  EXPECT_EQ(out.values(), (std::vector<float>{1, 2, 4, 5}));
}

TEST(Conv2d, OutputExtentWithStrideAndPad) {
  const auto out = fba::conv2d(Tensor({1, 7, 6}, 1.0f), Tensor({2, 1, 3, 2}, 1.0f), Tensor({2}), 2, 1);
  EXPECT_EQ(out.shape(), (fba::Shape{2, (7 + 2 - 3) / 2 + 1, (6 + 2 - 2) / 2 + 1}));
  // Corner window sees only the 2 in-bounds taps of a 3x2 kernel over zero padding.
  EXPECT_EQ(out.at(0, 0, 0), 2.0f);
}

TEST(Conv2d, MatchesLoopOracleOnFixedCase) {
  const auto x = fbatest::random_tensor({2, 5, 5}, 1);
  const auto k = fbatest::random_tensor({3, 2, 3, 3}, 2);
  const auto b = fbatest::random_tensor({3}, 3);
  expect_rel_close(fba::conv2d(x, k, b, 1, 0), oracle::conv2d(x, k, b, 1, 0), 1e-5);
}

TEST(Conv2d, DiagnosticsNameTheDimension) {
  const Tensor x({2, 4, 4});
  try {
    fba::conv2d(x, Tensor({1, 3, 3, 3}), Tensor({1}), 1, 0);
    FAIL() << "expected ShapeError";
  } catch (const fba::ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("input channels (dim 1)"), std::string::npos) << e.what();
  }
  try {
    fba::conv2d(x, Tensor({2, 2, 3, 3}), Tensor({3}), 1, 0);
    FAIL() << "expected ShapeError";
  } catch (const fba::ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("bias length"), std::string::npos) << e.what();
  }
  EXPECT_THROW(fba::conv2d(x, Tensor({1, 2, 5, 5}), Tensor({1}), 1, 0), fba::ShapeError);
  EXPECT_NO_THROW(fba::conv2d(x, Tensor({1, 2, 5, 5}), Tensor({1}), 1, 1));
  EXPECT_THROW(fba::conv2d(x, Tensor({1, 2, 3, 3}), Tensor({1}), 0, 0), fba::ArgumentError);
}

TEST(Relu, Definition) {
  const auto out = fba::relu(Tensor({3}, std::vector<float>{-1, 0, 2}));
  EXPECT_EQ(out.values(), (std::vector<float>{0, 0, 2}));
  EXPECT_EQ(fba::relu(Tensor({4}, -3.0f)), Tensor({4}, 0.0f));
  const auto pos = fbatest::random_tensor({2, 3}, 4, 0.0, 5.0);
  EXPECT_TRUE(fba::bit_equal(fba::relu(pos), pos));
}

TEST(Relu, IdempotentOnRandomTensors) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = fbatest::random_tensor({3, 4, 5}, s);
    const auto once = fba::relu(x);
    EXPECT_TRUE(fba::bit_equal(fba::relu(once), once));
  }
}

TEST(MaxPool, Examples) {
  const auto out = fba::maxpool2d(Tensor({1, 2, 2}, std::vector<float>{1, 2, 3, 4}), 2, 2);
  EXPECT_EQ(out.values(), (std::vector<float>{4}));
  EXPECT_EQ(fba::maxpool2d(Tensor({2, 6, 5}, 0.75f), 2, 2), Tensor({2, 3, 2}, 0.75f));
  const auto x = fbatest::random_tensor({1, 6, 6}, 5);
  EXPECT_EQ(fba::maxpool2d(x, 2, 2), oracle::maxpool(x, 2, 2));
}

TEST(MaxPool, RejectsBadWindow) {
  const Tensor x({1, 4, 4});
  EXPECT_THROW(fba::maxpool2d(x, 0, 1), fba::ArgumentError);
  EXPECT_THROW(fba::maxpool2d(x, 2, 0), fba::ArgumentError);
  EXPECT_THROW(fba::maxpool2d(x, 5, 1), fba::ShapeError);
}

TEST(Affine, Examples) {
  const auto x = fbatest::random_tensor({4}, 6);
  Tensor eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye[i * 4 + i] = 1.0f;
  EXPECT_EQ(fba::affine(x, eye, Tensor({4})), x);
  const auto b = fbatest::random_tensor({3}, 7);
  EXPECT_EQ(fba::affine(x, Tensor({3, 4}), b), b);
  const auto w = fbatest::random_tensor({3, 4}, 8);
  const auto got = fba::affine(x, w, b);
  const auto want = oracle::affine(x, w, b);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 1e-6);
  EXPECT_THROW(fba::affine(Tensor({5}), w, b), fba::ShapeError);
  EXPECT_THROW(fba::affine(x, w, Tensor({2})), fba::ShapeError);
}

TEST(Softmax, Examples) {
  const auto half = fba::softmax(Tensor({2}));
  EXPECT_EQ(half[0], 0.5f);
  EXPECT_EQ(half[1], 0.5f);
  const auto big = fba::softmax(Tensor({2}, std::vector<float>{1000, 0}));
  EXPECT_TRUE(std::isfinite(big[0]) && std::isfinite(big[1]));
  EXPECT_NEAR(big[0], 1.0f, 1e-6);
  EXPECT_NEAR(big[1], 0.0f, 1e-6);
  const auto x = fbatest::random_tensor({5}, 9, -4, 4);
  const auto got = fba::softmax(x);
  const auto want = oracle::softmax({x[0], x[1], x[2], x[3], x[4]});
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(got[i], static_cast<double>(want[i]), 1e-7);
}

// Randomized shape generator shared by the property tests below.
struct ShapeGen {
  fba::Rng rng;
  std::size_t pick(std::size_t lo, std::size_t hi) { return lo + fba::uniform_index(rng, hi - lo + 1); }
};

TEST(KernelProperties, ConvMatchesOracleOnRandomShapes) {
  ShapeGen g{fba::Rng(101)};
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t ci = g.pick(1, 4), co = g.pick(1, 4), h = g.pick(1, 8), w = g.pick(1, 8);
    const std::size_t pad = g.pick(0, 2), stride = g.pick(1, 3);
    const std::size_t kh = g.pick(1, std::min<std::size_t>(5, h + 2 * pad));
    const std::size_t kw = g.pick(1, std::min<std::size_t>(5, w + 2 * pad));
    const auto x = fbatest::random_tensor({ci, h, w}, 1000 + static_cast<std::uint64_t>(trial));
    const auto k = fbatest::random_tensor({co, ci, kh, kw}, 2000 + static_cast<std::uint64_t>(trial));
    const auto b = fbatest::random_tensor({co}, 3000 + static_cast<std::uint64_t>(trial));
    SCOPED_TRACE("trial " + std::to_string(trial));
    expect_rel_close(fba::conv2d(x, k, b, stride, pad), oracle::conv2d(x, k, b, stride, pad), 1e-5);
  }
}

TEST(KernelProperties, PoolAffineSoftmaxOnRandomShapes) {
  ShapeGen g{fba::Rng(202)};
  for (int trial = 0; trial < 150; ++trial) {
    SCOPED_TRACE("trial " + std::to_string(trial));
    const auto seed = static_cast<std::uint64_t>(trial);
    const std::size_t c = g.pick(1, 4), h = g.pick(1, 8), w = g.pick(1, 8);
    const std::size_t k = g.pick(1, std::min(h, w)), stride = g.pick(1, 3);
    const auto x = fbatest::random_tensor({c, h, w}, 4000 + seed);
    EXPECT_EQ(fba::maxpool2d(x, k, stride), oracle::maxpool(x, k, stride));

    const std::size_t din = g.pick(1, 8), dout = g.pick(1, 8);
    const auto v = fbatest::random_tensor({din}, 5000 + seed);
    const auto wt = fbatest::random_tensor({dout, din}, 6000 + seed);
    const auto b = fbatest::random_tensor({dout}, 7000 + seed);
    expect_rel_close(fba::affine(v, wt, b), oracle::affine(v, wt, b), 1e-5);

    const auto s = fbatest::random_tensor({din}, 8000 + seed, -20, 20);
    const auto got = fba::softmax(s);
    std::vector<oracle::LD> in(s.data().begin(), s.data().end());
    const auto want = oracle::softmax(in);
    double sum = 0;
    for (std::size_t i = 0; i < din; ++i) {
      sum += got[i];
      EXPECT_GT(got[i], 0.0f);
      EXPECT_NEAR(got[i], static_cast<double>(want[i]), 1e-5 * static_cast<double>(want[i]) + 1e-9);
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
    Tensor shifted = s;
    for (float& e : shifted.data()) e += 3.25f;
    const auto moved = fba::softmax(shifted);
    for (std::size_t i = 0; i < din; ++i) EXPECT_NEAR(moved[i], got[i], 1e-6);
  }
}

TEST(KernelProperties, FiniteInputsGiveFiniteOutputs) {
  const auto x = fbatest::random_tensor({2, 6, 6}, 11, -1e4, 1e4);
  const auto k = fbatest::random_tensor({3, 2, 3, 3}, 12, -10, 10);
  for (float v : fba::conv2d(x, k, Tensor({3}), 1, 1).data()) EXPECT_TRUE(std::isfinite(v));
  const auto s = fbatest::random_tensor({6}, 13, -80, 80);
  for (float v : fba::softmax(s).data()) EXPECT_TRUE(std::isfinite(v));
}

}  // namespace
