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

// Numeric kernels shared by inference and training. Every kernel is a pure
// function of its arguments; reductions accumulate in double regardless of
// the storage type.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fba/errors.hpp"
#include "fba/tensor.hpp"

namespace fba {

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

inline std::string dim_msg(const char* op, const char* what, std::size_t got, std::size_t want) {
  return std::string(op) + ": " + what + " is " + std::to_string(got) + ", expected " +
         std::to_string(want);
}

inline std::size_t pooled_extent(std::size_t extent, std::size_t window, std::size_t stride,
                                 std::size_t pad) {
  return (extent + 2 * pad - window) / stride + 1;
}

}  // namespace detail

/// Zero-padded cross-correlation. input [C_in,H,W], kernels [C_out,C_in,kh,kw],
/// bias [C_out] -> [C_out,H',W'].
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                      const BasicTensor<T>& bias, std::size_t stride, std::size_t pad) {
  using detail::dim_msg;
  using detail::require;
  require(input.rank() == 3, dim_msg("conv2d", "input rank", input.rank(), 3));
  require(kernels.rank() == 4, dim_msg("conv2d", "kernel rank", kernels.rank(), 4));
  require(bias.rank() == 1, dim_msg("conv2d", "bias rank", bias.rank(), 1));
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t c_out = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  require(kernels.dim(1) == c_in, dim_msg("conv2d", "kernel input channels (dim 1)", kernels.dim(1), c_in));
  require(bias.dim(0) == c_out, dim_msg("conv2d", "bias length (dim 0)", bias.dim(0), c_out));
  if (stride == 0) throw ArgumentError("conv2d: stride must be >= 1");
  require(kh <= h + 2 * pad, "conv2d: kernel height " + std::to_string(kh) + " exceeds padded input height " +
                                 std::to_string(h + 2 * pad));
  require(kw <= w + 2 * pad, "conv2d: kernel width " + std::to_string(kw) + " exceeds padded input width " +
                                 std::to_string(w + 2 * pad));

  const std::size_t oh = detail::pooled_extent(h, kh, stride, pad);
  const std::size_t ow = detail::pooled_extent(w, kw, stride, pad);
  BasicTensor<T> out({c_out, oh, ow});
  std::vector<double> acc(oh * ow);
  const T* in = input.data().data();
  const T* k = kernels.data().data();

  for (std::size_t co = 0; co < c_out; ++co) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(bias[co]));
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const T* plane = in + ci * h * w;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const double kv = k[((co * c_in + ci) * kh + ky) * kw + kx];
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            const T* row = plane + static_cast<std::size_t>(iy) * w;
            double* arow = acc.data() + oy * ow;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              arow[ox] += kv * static_cast<double>(row[ix]);
            }
          }
        }
      }
    }
    T* dst = out.data().data() + co * oh * ow;
    for (std::size_t i = 0; i < oh * ow; ++i) dst[i] = static_cast<T>(acc[i]);
  }
  return out;
}

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> input;  // empty when not requested
  BasicTensor<T> kernels;
  BasicTensor<T> bias;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                               const BasicTensor<T>& grad_out, std::size_t stride, std::size_t pad,
                               bool want_input_grad) {
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t c_out = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
  detail::require(grad_out.dim(0) == c_out, detail::dim_msg("conv2d_backward", "grad channels", grad_out.dim(0), c_out));

  std::vector<double> gk(kernels.size(), 0.0);
  std::vector<double> gb(c_out, 0.0);
  std::vector<double> gi(want_input_grad ? input.size() : 0, 0.0);
  const T* in = input.data().data();
  const T* k = kernels.data().data();
  const T* g = grad_out.data().data();

  for (std::size_t co = 0; co < c_out; ++co) {
    const T* gplane = g + co * oh * ow;
    for (std::size_t i = 0; i < oh * ow; ++i) gb[co] += gplane[i];
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const T* plane = in + ci * h * w;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::size_t kidx = ((co * c_in + ci) * kh + ky) * kw + kx;
          const double kv = k[kidx];
          double sum = 0.0;
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              const std::size_t ii = static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix);
              const double gv = gplane[oy * ow + ox];
              sum += gv * static_cast<double>(plane[ii]);
              if (want_input_grad) gi[ci * h * w + ii] += gv * kv;
            }
          }
          gk[kidx] += sum;
        }
      }
    }
  }

  Conv2dGrads<T> grads;
  grads.kernels = BasicTensor<T>(kernels.shape(), std::vector<T>(gk.begin(), gk.end()));
  grads.bias = BasicTensor<T>({c_out}, std::vector<T>(gb.begin(), gb.end()));
  if (want_input_grad) grads.input = BasicTensor<T>(input.shape(), std::vector<T>(gi.begin(), gi.end()));
  return grads;
}

/// Elementwise max(0, x).
template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& input) {
  BasicTensor<T> out = input;
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  return out;
}

/// Per-channel sliding-window maximum over [C,H,W].
template <typename T>
BasicTensor<T> maxpool2d(const BasicTensor<T>& input, std::size_t k, std::size_t stride) {
  if (k == 0 || stride == 0) throw ArgumentError("maxpool2d: window and stride must be positive");
  detail::require(input.rank() == 3, detail::dim_msg("maxpool2d", "input rank", input.rank(), 3));
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  detail::require(k <= h && k <= w, "maxpool2d: window " + std::to_string(k) + " exceeds input " +
                                        std::to_string(h) + "x" + std::to_string(w));
  const std::size_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
  BasicTensor<T> out({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T best = input.at(ch, oy * stride, ox * stride);
        for (std::size_t dy = 0; dy < k; ++dy) {
          for (std::size_t dx = 0; dx < k; ++dx) {
            best = std::max(best, input.at(ch, oy * stride + dy, ox * stride + dx));
          }
        }
        out.at(ch, oy, ox) = best;
      }
    }
  }
  return out;
}

/// Routes each pooled gradient to the first maximal element of its window.
template <typename T>
BasicTensor<T> maxpool2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out, std::size_t k,
                                  std::size_t stride) {
  const std::size_t c = input.dim(0);
  const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
  BasicTensor<T> grad(input.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t by = oy * stride, bx = ox * stride;
        T best = input.at(ch, by, bx);
        for (std::size_t dy = 0; dy < k; ++dy) {
          for (std::size_t dx = 0; dx < k; ++dx) {
            const T v = input.at(ch, oy * stride + dy, ox * stride + dx);
            if (v > best) {
              best = v;
              by = oy * stride + dy;
              bx = ox * stride + dx;
            }
          }
        }
        grad.at(ch, by, bx) += grad_out.at(ch, oy, ox);
      }
    }
  }
  return grad;
}

/// weight [D_out,D_in] * input [D_in] + bias [D_out].
template <typename T>
BasicTensor<T> affine(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
  using detail::dim_msg;
  using detail::require;
  require(input.rank() == 1, dim_msg("affine", "input rank", input.rank(), 1));
  require(weight.rank() == 2, dim_msg("affine", "weight rank", weight.rank(), 2));
  require(bias.rank() == 1, dim_msg("affine", "bias rank", bias.rank(), 1));
  const std::size_t d_out = weight.dim(0), d_in = weight.dim(1);
  require(input.dim(0) == d_in, dim_msg("affine", "input length (dim 0)", input.dim(0), d_in));
  require(bias.dim(0) == d_out, dim_msg("affine", "bias length (dim 0)", bias.dim(0), d_out));
  BasicTensor<T> out({d_out});
  const T* wv = weight.data().data();
  for (std::size_t o = 0; o < d_out; ++o) {
    double acc = bias[o];
    const T* row = wv + o * d_in;
    for (std::size_t i = 0; i < d_in; ++i) acc += static_cast<double>(row[i]) * static_cast<double>(input[i]);
    out[o] = static_cast<T>(acc);
  }
  return out;
}

template <typename T>
struct AffineGrads {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <typename T>
AffineGrads<T> affine_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                               const BasicTensor<T>& grad_out) {
  const std::size_t d_out = weight.dim(0), d_in = weight.dim(1);
  AffineGrads<T> grads{BasicTensor<T>({d_in}), BasicTensor<T>(weight.shape()), grad_out};
  for (std::size_t i = 0; i < d_in; ++i) {
    double acc = 0.0;
    for (std::size_t o = 0; o < d_out; ++o) {
      acc += static_cast<double>(weight[o * d_in + i]) * static_cast<double>(grad_out[o]);
    }
    grads.input[i] = static_cast<T>(acc);
  }
  for (std::size_t o = 0; o < d_out; ++o) {
    for (std::size_t i = 0; i < d_in; ++i) {
      grads.weight[o * d_in + i] = static_cast<T>(static_cast<double>(grad_out[o]) * static_cast<double>(input[i]));
    }
  }
  return grads;
}

/// Numerically stable softmax over a vector.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& input) {
  detail::require(input.rank() == 1, detail::dim_msg("softmax", "input rank", input.rank(), 1));
  const T peak = *std::max_element(input.data().begin(), input.data().end());
  std::vector<double> e(input.size());
  double total = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    e[i] = std::exp(static_cast<double>(input[i]) - static_cast<double>(peak));
    total += e[i];
  }
  BasicTensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = static_cast<T>(e[i] / total);
  return out;
}

}  // namespace fba
