/* Copyright (c) 2026 The mapseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "mapseg/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mapseg/kernels/gemm.hpp"
#include "mapseg/kernels/im2col.hpp"

namespace mapseg::nn {

using kernels::ConstMatrix;
using kernels::ConvGeometry;
using kernels::MutMatrix;

namespace {

ConvGeometry geometry_of(const Shape4& x, const Shape4& w, std::int64_t stride, std::int64_t pad) {
  return {x.c, x.h, x.w, w.h, w.w, stride, pad};
}

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride == 1 && g.pad == 0;
}

// Output rows per band so that one unfolded band stays around L2 size.
constexpr std::int64_t kBandElements = 1 << 19;

std::int64_t band_rows(const ConvGeometry& g) {
  const std::int64_t per_row = g.col_rows() * g.out_w();
  return std::clamp<std::int64_t>(kBandElements / std::max<std::int64_t>(per_row, 1), 1,
                                  g.out_h());
}

// Reusable per-thread buffers; slot 0 holds unfolded inputs, slot 1 their gradients.
template <typename T>
T* scratch(int slot, std::int64_t size) {
  thread_local std::vector<T> buffers[2];
  auto& b = buffers[slot];
  if (static_cast<std::int64_t>(b.size()) < size) b.resize(static_cast<std::size_t>(size));
  return b.data();
}

template <typename T>
void check_params(const ConvParams<T>& p) {
  const Shape4& w = p.weight.shape();
  if (!w.all_positive()) throw ShapeError("conv2d: weight shape " + w.str() + " has empty dims");
  if (static_cast<std::int64_t>(p.bias.size()) != w.n)
    throw ShapeError("conv2d: bias length " + std::to_string(p.bias.size()) +
                     " != out channels " + std::to_string(w.n));
}

}  // namespace

Shape4 conv2d_output_shape(const Shape4& x, const Shape4& w, std::int64_t stride,
                           std::int64_t pad) {
  if (stride < 1) throw ArgumentError("conv2d: stride must be >= 1");
  if (pad < 0) throw ArgumentError("conv2d: pad must be >= 0");
  if (x.c != w.c)
    throw ShapeError("conv2d: input channels " + std::to_string(x.c) + " != weight channels " +
                     std::to_string(w.c));
  const std::int64_t span_h = x.h + 2 * pad - w.h;
  const std::int64_t span_w = x.w + 2 * pad - w.w;
  if (span_h < 0 || span_w < 0 || x.n < 1)
    throw ShapeError("conv2d: kernel " + w.str() + " does not fit input " + x.str());
  return {x.n, w.n, span_h / stride + 1, span_w / stride + 1};
}

template <typename T>
BasicTensor<T> conv2d_infer(const BasicTensor<T>& x, const ConvParams<T>& p, std::int64_t stride,
                            std::int64_t pad) {
  check_params(p);
  const Shape4 out_shape = conv2d_output_shape(x.shape(), p.weight.shape(), stride, pad);
  const ConvGeometry g = geometry_of(x.shape(), p.weight.shape(), stride, pad);
  const std::int64_t k_out = out_shape.c;
  const std::int64_t rows = g.col_rows();
  const std::int64_t cols = g.col_cols();
  const std::int64_t ow = g.out_w();
  const std::int64_t band = band_rows(g);
  const bool pointwise = is_pointwise(g);

  BasicTensor<T> y(out_shape);
  T* col = pointwise ? nullptr : scratch<T>(0, rows * band * ow);
  const auto w = ConstMatrix<T>::row_major(p.weight.ptr(), k_out, rows);

  for (std::int64_t n = 0; n < out_shape.n; ++n) {
    T* out = y.sample(n);
    for (std::int64_t k = 0; k < k_out; ++k) std::fill_n(out + k * cols, cols, p.bias[k]);
    for (std::int64_t oy0 = 0; oy0 < g.out_h(); oy0 += band) {
      const std::int64_t oy1 = std::min(oy0 + band, g.out_h());
      const std::int64_t width = (oy1 - oy0) * ow;
      ConstMatrix<T> src{x.sample(n) + oy0 * ow, rows, width, cols, 1};
      if (!pointwise) {
        kernels::im2col_rows(x.sample(n), g, oy0, oy1, col);
        src = ConstMatrix<T>::row_major(col, rows, width);
      }
      kernels::gemm(w, src, MutMatrix<T>{out + oy0 * ow, k_out, width, cols},
                    /*accumulate=*/true);
    }
  }
  return y;
}

template <typename T>
LayerResult<T, ConvCache<T>> conv2d_forward(const BasicTensor<T>& x, const ConvParams<T>& p,
                                            std::int64_t stride, std::int64_t pad) {
  BasicTensor<T> y = conv2d_infer(x, p, stride, pad);
  ConvCache<T> cache{x, stride, pad, y.shape()};
  return {std::move(y), std::move(cache)};
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_y, const ConvCache<T>& cache,
                             const ConvParams<T>& p) {
  check_params(p);
  if (!(grad_y.shape() == cache.out_shape))
    throw ShapeError("conv2d_backward: grad shape " + grad_y.shape().str() +
                     " != forward output " + cache.out_shape.str());
  const BasicTensor<T>& x = cache.input;
  if (!(conv2d_output_shape(x.shape(), p.weight.shape(), cache.stride, cache.pad) ==
        cache.out_shape))
    throw ShapeError("conv2d_backward: parameters do not match cached forward call");

  const ConvGeometry g = geometry_of(x.shape(), p.weight.shape(), cache.stride, cache.pad);
  const std::int64_t k_out = cache.out_shape.c;
  const std::int64_t rows = g.col_rows();
  const std::int64_t cols = g.col_cols();
  const std::int64_t ow = g.out_w();
  const std::int64_t band = band_rows(g);
  const bool pointwise = is_pointwise(g);

  ConvGrads<T> grads{BasicTensor<T>(x.shape()), BasicTensor<T>(p.weight.shape()),
                     std::vector<T>(static_cast<std::size_t>(k_out), T(0))};
  T* col = pointwise ? nullptr : scratch<T>(0, rows * band * ow);
  T* grad_col = pointwise ? nullptr : scratch<T>(1, rows * band * ow);
  const auto w = ConstMatrix<T>::row_major(p.weight.ptr(), k_out, rows);
  auto grad_w = MutMatrix<T>::row_major(grads.grad_w.ptr(), k_out, rows);
  std::vector<double> bias_sum(static_cast<std::size_t>(k_out), 0.0);

  for (std::int64_t n = 0; n < x.shape().n; ++n) {
    for (std::int64_t k = 0; k < k_out; ++k) {
      const T* row = grad_y.sample(n) + k * cols;
      double s = 0.0;
      for (std::int64_t i = 0; i < cols; ++i) s += static_cast<double>(row[i]);
      bias_sum[static_cast<std::size_t>(k)] += s;
    }
    // Bands of output rows keep the unfolded columns cache-resident.
    for (std::int64_t oy0 = 0; oy0 < g.out_h(); oy0 += band) {
      const std::int64_t oy1 = std::min(oy0 + band, g.out_h());
      const std::int64_t width = (oy1 - oy0) * ow;
      const ConstMatrix<T> gy{grad_y.sample(n) + oy0 * ow, k_out, width, cols, 1};
      ConstMatrix<T> src{x.sample(n) + oy0 * ow, rows, width, cols, 1};
      if (!pointwise) {
        kernels::im2col_rows(x.sample(n), g, oy0, oy1, col);
        src = ConstMatrix<T>::row_major(col, rows, width);
      }
      // dW += dY * col^T
      kernels::gemm(gy, src.transposed(), grad_w, true);
      // dcol = W^T * dY, folded back onto the image
      if (pointwise) {
        kernels::gemm(w.transposed(), gy,
                      MutMatrix<T>{grads.grad_x.sample(n) + oy0 * ow, rows, width, cols}, false);
      } else {
        kernels::gemm(w.transposed(), gy, MutMatrix<T>::row_major(grad_col, rows, width), false);
        kernels::col2im_add_rows(grad_col, g, oy0, oy1, grads.grad_x.sample(n));
      }
    }
  }
  for (std::size_t k = 0; k < bias_sum.size(); ++k) grads.grad_b[k] = static_cast<T>(bias_sum[k]);
  return grads;
}

// ----------------------------------------------------------------------- ReLU

template <typename T>
LayerResult<T, ReluCache> relu_forward(const BasicTensor<T>& z) {
  BasicTensor<T> y(z.shape());
  ReluCache cache{std::vector<std::uint8_t>(z.size()), z.shape()};
  const std::int64_t n = static_cast<std::int64_t>(z.size());
  const T* src = z.ptr();
  T* dst = y.ptr();
  std::uint8_t* mask = cache.positive.data();
#pragma omp parallel for schedule(static) if (n > (1 << 16))
  for (std::int64_t i = 0; i < n; ++i) {
    const bool pos = src[i] > T(0);
    mask[i] = pos;
    // NaN passes through so that a poisoned input surfaces as a NaN loss.
    dst[i] = pos || src[i] != src[i] ? src[i] : T(0);
  }
  return {std::move(y), std::move(cache)};
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_y, const ReluCache& cache) {
  if (!(grad_y.shape() == cache.shape))
    throw ShapeError("relu_backward: grad shape " + grad_y.shape().str() + " != " +
                     cache.shape.str());
  BasicTensor<T> grad_z(grad_y.shape());
  const std::int64_t n = static_cast<std::int64_t>(grad_y.size());
  const T* src = grad_y.ptr();
  T* dst = grad_z.ptr();
  const std::uint8_t* mask = cache.positive.data();
#pragma omp parallel for schedule(static) if (n > (1 << 16))
  for (std::int64_t i = 0; i < n; ++i) dst[i] = mask[i] ? src[i] : T(0);
  return grad_z;
}

// ---------------------------------------------------------------- max-pooling

Shape4 maxpool_output_shape(const Shape4& x, std::int64_t k, std::int64_t stride) {
  if (k < 1 || stride < 1) throw ArgumentError("maxpool2d: k and stride must be >= 1");
  if (k > x.h || k > x.w)
    throw ShapeError("maxpool2d: window " + std::to_string(k) + " larger than input " + x.str());
  return {x.n, x.c, (x.h - k) / stride + 1, (x.w - k) / stride + 1};
}

template <typename T>
LayerResult<T, MaxPoolCache> maxpool2d_forward(const BasicTensor<T>& x, std::int64_t k,
                                               std::int64_t stride) {
  const Shape4 in = x.shape();
  const Shape4 out = maxpool_output_shape(in, k, stride);
  BasicTensor<T> y(out);
  MaxPoolCache cache{in, out, std::vector<std::int64_t>(y.size())};
  const std::int64_t planes = out.n * out.c;
#pragma omp parallel for schedule(static) if (y.size() > (1u << 14))
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const std::int64_t in_base = pl * in.h * in.w;
    const std::int64_t out_base = pl * out.h * out.w;
    for (std::int64_t oy = 0; oy < out.h; ++oy) {
      for (std::int64_t ox = 0; ox < out.w; ++ox) {
        std::int64_t best = in_base + (oy * stride) * in.w + ox * stride;
        T best_v = x[static_cast<std::size_t>(best)];
        for (std::int64_t i = 0; i < k; ++i) {
          for (std::int64_t j = 0; j < k; ++j) {
            const std::int64_t idx = in_base + (oy * stride + i) * in.w + ox * stride + j;
            const T v = x[static_cast<std::size_t>(idx)];
            if (v > best_v) {
              best_v = v;
              best = idx;
            }
          }
        }
        const std::int64_t o = out_base + oy * out.w + ox;
        y[static_cast<std::size_t>(o)] = best_v;
        cache.argmax[static_cast<std::size_t>(o)] = best;
      }
    }
  }
  return {std::move(y), std::move(cache)};
}

template <typename T>
BasicTensor<T> maxpool2d_backward(const BasicTensor<T>& grad_y, const MaxPoolCache& cache) {
  if (!(grad_y.shape() == cache.output_shape))
    throw ShapeError("maxpool2d_backward: grad shape " + grad_y.shape().str() + " != " +
                     cache.output_shape.str());
  BasicTensor<T> grad_x(cache.input_shape);
  // Overlapping windows (stride < k) can route several outputs to one input;
  // planes are independent, and within a plane the scan order is fixed.
  const Shape4& out = cache.output_shape;
  const std::int64_t planes = out.n * out.c;
  const std::int64_t per_plane = out.h * out.w;
#pragma omp parallel for schedule(static) if (grad_y.size() > (1u << 14))
  for (std::int64_t pl = 0; pl < planes; ++pl)
    for (std::int64_t o = pl * per_plane; o < (pl + 1) * per_plane; ++o)
      grad_x[static_cast<std::size_t>(cache.argmax[static_cast<std::size_t>(o)])] +=
          grad_y[static_cast<std::size_t>(o)];
  return grad_x;
}

// -------------------------------------------------------- batch normalization

namespace {

template <typename T>
void check_bn(const Shape4& x, const BNParams<T>& p) {
  const auto c = static_cast<std::size_t>(x.c);
  if (p.gamma.size() != c || p.beta.size() != c || p.running_mean.size() != c ||
      p.running_var.size() != c)
    throw ShapeError("batchnorm: parameter length does not match " + std::to_string(x.c) +
                     " channels");
  if (!(p.eps > T(0))) throw ArgumentError("batchnorm: eps must be > 0");
}

}  // namespace

template <typename T>
LayerResult<T, BNCache<T>> batchnorm_forward(const BasicTensor<T>& x, BNParams<T>& p,
                                             bool training) {
  const Shape4 s = x.shape();
  check_bn(s, p);
  const std::int64_t plane = s.h * s.w;
  const std::int64_t count = s.n * plane;
  if (training && count < 2)
    throw ArgumentError("batchnorm: training mode needs n*h*w >= 2, got " + std::to_string(count));

  BasicTensor<T> y(s);
  BNCache<T> cache{BasicTensor<T>(s), std::vector<T>(static_cast<std::size_t>(s.c)), p.gamma,
                   training};

#pragma omp parallel for schedule(static) if (x.size() > (1u << 15))
  for (std::int64_t c = 0; c < s.c; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    double mean, var;
    if (training) {
      double sum = 0.0;
      for (std::int64_t n = 0; n < s.n; ++n) {
        const T* src = x.plane(n, c);
        for (std::int64_t i = 0; i < plane; ++i) sum += static_cast<double>(src[i]);
      }
      mean = sum / static_cast<double>(count);
      double sq = 0.0;
      for (std::int64_t n = 0; n < s.n; ++n) {
        const T* src = x.plane(n, c);
        for (std::int64_t i = 0; i < plane; ++i) {
          const double d = static_cast<double>(src[i]) - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(count);
      const double unbiased = sq / static_cast<double>(count - 1);
      const double m = static_cast<double>(p.momentum);
      p.running_mean[ci] =
          static_cast<T>((1.0 - m) * static_cast<double>(p.running_mean[ci]) + m * mean);
      p.running_var[ci] =
          static_cast<T>((1.0 - m) * static_cast<double>(p.running_var[ci]) + m * unbiased);
    } else {
      mean = static_cast<double>(p.running_mean[ci]);
      var = static_cast<double>(p.running_var[ci]);
    }
    const T inv_std = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(p.eps)));
    const T mu = static_cast<T>(mean);
    cache.inv_std[ci] = inv_std;
    const T g = p.gamma[ci];
    const T b = p.beta[ci];
    for (std::int64_t n = 0; n < s.n; ++n) {
      const T* src = x.plane(n, c);
      T* xh = cache.x_hat.plane(n, c);
      T* dst = y.plane(n, c);
      for (std::int64_t i = 0; i < plane; ++i) {
        xh[i] = (src[i] - mu) * inv_std;
        dst[i] = g * xh[i] + b;
      }
    }
  }
  return {std::move(y), std::move(cache)};
}

template <typename T>
BasicTensor<T> batchnorm_infer(const BasicTensor<T>& x, const BNParams<T>& p) {
  const Shape4 s = x.shape();
  check_bn(s, p);
  BasicTensor<T> y(s);
  const std::int64_t plane = s.h * s.w;
#pragma omp parallel for schedule(static) if (x.size() > (1u << 15))
  for (std::int64_t c = 0; c < s.c; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    const T inv_std = static_cast<T>(
        1.0 / std::sqrt(static_cast<double>(p.running_var[ci]) + static_cast<double>(p.eps)));
    const T mu = p.running_mean[ci];
    const T g = p.gamma[ci];
    const T b = p.beta[ci];
    for (std::int64_t n = 0; n < s.n; ++n) {
      const T* src = x.plane(n, c);
      T* dst = y.plane(n, c);
      for (std::int64_t i = 0; i < plane; ++i) dst[i] = g * ((src[i] - mu) * inv_std) + b;
    }
  }
  return y;
}

template <typename T>
BNGrads<T> batchnorm_backward(const BasicTensor<T>& grad_y, const BNCache<T>& cache) {
  const Shape4 s = grad_y.shape();
  if (!(s == cache.x_hat.shape()))
    throw ShapeError("batchnorm_backward: grad shape " + s.str() + " != " +
                     cache.x_hat.shape().str());
  const std::int64_t plane = s.h * s.w;
  const double count = static_cast<double>(s.n * plane);
  BNGrads<T> grads{BasicTensor<T>(s), std::vector<T>(static_cast<std::size_t>(s.c)),
                   std::vector<T>(static_cast<std::size_t>(s.c))};

#pragma omp parallel for schedule(static) if (grad_y.size() > (1u << 15))
  for (std::int64_t c = 0; c < s.c; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (std::int64_t n = 0; n < s.n; ++n) {
      const T* dy = grad_y.plane(n, c);
      const T* xh = cache.x_hat.plane(n, c);
      for (std::int64_t i = 0; i < plane; ++i) {
        sum_dy += static_cast<double>(dy[i]);
        sum_dy_xhat += static_cast<double>(dy[i]) * static_cast<double>(xh[i]);
      }
    }
    grads.grad_gamma[ci] = static_cast<T>(sum_dy_xhat);
    grads.grad_beta[ci] = static_cast<T>(sum_dy);
    const T scale = cache.gamma[ci] * cache.inv_std[ci];
    if (cache.training) {
      // dx = gamma*inv_std * (dy - mean(dy) - x_hat * mean(dy*x_hat))
      const T mean_dy = static_cast<T>(sum_dy / count);
      const T mean_dy_xhat = static_cast<T>(sum_dy_xhat / count);
      for (std::int64_t n = 0; n < s.n; ++n) {
        const T* dy = grad_y.plane(n, c);
        const T* xh = cache.x_hat.plane(n, c);
        T* dx = grads.grad_x.plane(n, c);
        for (std::int64_t i = 0; i < plane; ++i)
          dx[i] = scale * (dy[i] - mean_dy - xh[i] * mean_dy_xhat);
      }
    } else {
      for (std::int64_t n = 0; n < s.n; ++n) {
        const T* dy = grad_y.plane(n, c);
        T* dx = grads.grad_x.plane(n, c);
        for (std::int64_t i = 0; i < plane; ++i) dx[i] = scale * dy[i];
      }
    }
  }
  return grads;
}

// ------------------------------------------------------------ 2x upsampling

template <typename T>
LayerResult<T, UpsampleCache> upsample2x_forward(const BasicTensor<T>& x) {
  const Shape4 s = x.shape();
  BasicTensor<T> y({s.n, s.c, 2 * s.h, 2 * s.w});
  const std::int64_t planes = s.n * s.c;
#pragma omp parallel for schedule(static) if (y.size() > (1u << 16))
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const T* src = x.ptr() + pl * s.h * s.w;
    T* dst = y.ptr() + pl * 4 * s.h * s.w;
    for (std::int64_t i = 0; i < s.h; ++i) {
      T* row0 = dst + (2 * i) * 2 * s.w;
      T* row1 = row0 + 2 * s.w;
      for (std::int64_t j = 0; j < s.w; ++j) {
        const T v = src[i * s.w + j];
        row0[2 * j] = v;
        row0[2 * j + 1] = v;
      }
      std::copy_n(row0, 2 * s.w, row1);
    }
  }
  return {std::move(y), UpsampleCache{s}};
}

template <typename T>
BasicTensor<T> upsample2x_backward(const BasicTensor<T>& grad_y, const UpsampleCache& cache) {
  const Shape4 s = cache.input_shape;
  if (!(grad_y.shape() == Shape4{s.n, s.c, 2 * s.h, 2 * s.w}))
    throw ShapeError("upsample2x_backward: grad shape " + grad_y.shape().str() +
                     " does not match input " + s.str());
  BasicTensor<T> grad_x(s);
  const std::int64_t planes = s.n * s.c;
#pragma omp parallel for schedule(static) if (grad_y.size() > (1u << 16))
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const T* src = grad_y.ptr() + pl * 4 * s.h * s.w;
    T* dst = grad_x.ptr() + pl * s.h * s.w;
    for (std::int64_t i = 0; i < s.h; ++i) {
      const T* row0 = src + (2 * i) * 2 * s.w;
      const T* row1 = row0 + 2 * s.w;
      for (std::int64_t j = 0; j < s.w; ++j)
        dst[i * s.w + j] = (row0[2 * j] + row0[2 * j + 1]) + (row1[2 * j] + row1[2 * j + 1]);
    }
  }
  return grad_x;
}

// ------------------------------------------------------------ softmax + loss

template <typename T>
BasicTensor<T> softmax_channels(const BasicTensor<T>& x) {
  const Shape4 s = x.shape();
  if (s.c < 1) throw ShapeError("softmax_channels: needs at least one channel");
  for (const T v : x.data())
    if (!std::isfinite(v)) throw NumericError("softmax_channels: non-finite logit");
  BasicTensor<T> y(s);
  const std::int64_t plane = s.h * s.w;
#pragma omp parallel for schedule(static) if (x.size() > (1u << 15))
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t i = 0; i < plane; ++i) {
      T mx = x.plane(n, 0)[i];
      for (std::int64_t c = 1; c < s.c; ++c) mx = std::max(mx, x.plane(n, c)[i]);
      T sum = T(0);
      for (std::int64_t c = 0; c < s.c; ++c) {
        const T e = std::exp(x.plane(n, c)[i] - mx);
        y.plane(n, c)[i] = e;
        sum += e;
      }
      const T inv = T(1) / sum;
      for (std::int64_t c = 0; c < s.c; ++c) y.plane(n, c)[i] *= inv;
    }
  }
  return y;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const BasicTensor<T>& logits,
                                    std::span<const std::uint8_t> labels) {
  const Shape4 s = logits.shape();
  const std::int64_t plane = s.h * s.w;
  const std::int64_t pixels = s.n * plane;
  if (static_cast<std::int64_t>(labels.size()) != pixels)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for " + std::to_string(pixels) + " pixels");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= s.c)
      throw DataError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                      " at pixel " + std::to_string(i) + " outside [0, " + std::to_string(s.c) +
                      ")");

  LossResult<T> result{0.0, softmax_channels(logits)};
  BasicTensor<T>& grad = result.grad_logits;
  const T inv_pixels = T(1) / static_cast<T>(pixels);
  double total = 0.0;
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t i = 0; i < plane; ++i) {
      const std::int64_t label = labels[static_cast<std::size_t>(n * plane + i)];
      // -log softmax via log-sum-exp keeps the loss finite for confident logits.
      double mx = static_cast<double>(logits.plane(n, 0)[i]);
      for (std::int64_t c = 1; c < s.c; ++c)
        mx = std::max(mx, static_cast<double>(logits.plane(n, c)[i]));
      double sum = 0.0;
      for (std::int64_t c = 0; c < s.c; ++c)
        sum += std::exp(static_cast<double>(logits.plane(n, c)[i]) - mx);
      total += std::log(sum) + mx - static_cast<double>(logits.plane(n, label)[i]);
      grad.plane(n, label)[i] -= T(1);
    }
  }
  for (auto& g : grad.data()) g *= inv_pixels;
  result.loss = total / static_cast<double>(pixels);
  return result;
}

// ------------------------------------------------------------------ reference

namespace reference {

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const ConvParams<T>& p, std::int64_t stride,
                              std::int64_t pad) {
  check_params(p);
  const Shape4 os = conv2d_output_shape(x.shape(), p.weight.shape(), stride, pad);
  const Shape4 is = x.shape();
  const Shape4 ws = p.weight.shape();
  BasicTensor<T> y(os);
  for (std::int64_t n = 0; n < os.n; ++n)
    for (std::int64_t k = 0; k < os.c; ++k)
      for (std::int64_t oy = 0; oy < os.h; ++oy)
        for (std::int64_t ox = 0; ox < os.w; ++ox) {
          T acc = p.bias[static_cast<std::size_t>(k)];
          for (std::int64_t c = 0; c < ws.c; ++c)
            for (std::int64_t i = 0; i < ws.h; ++i) {
              const std::int64_t iy = oy * stride - pad + i;
              if (iy < 0 || iy >= is.h) continue;
              for (std::int64_t j = 0; j < ws.w; ++j) {
                const std::int64_t ix = ox * stride - pad + j;
                if (ix < 0 || ix >= is.w) continue;
                acc += p.weight.at(k, c, i, j) * x.at(n, c, iy, ix);
              }
            }
          y.at(n, k, oy, ox) = acc;
        }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x,
                             const ConvParams<T>& p, std::int64_t stride, std::int64_t pad) {
  check_params(p);
  const Shape4 os = conv2d_output_shape(x.shape(), p.weight.shape(), stride, pad);
  if (!(grad_y.shape() == os)) throw ShapeError("reference::conv2d_backward: grad shape mismatch");
  const Shape4 is = x.shape();
  const Shape4 ws = p.weight.shape();
  ConvGrads<T> g{BasicTensor<T>(is), BasicTensor<T>(ws),
                 std::vector<T>(static_cast<std::size_t>(ws.n), T(0))};
  for (std::int64_t n = 0; n < os.n; ++n)
    for (std::int64_t k = 0; k < os.c; ++k)
      for (std::int64_t oy = 0; oy < os.h; ++oy)
        for (std::int64_t ox = 0; ox < os.w; ++ox) {
          const T gy = grad_y.at(n, k, oy, ox);
          g.grad_b[static_cast<std::size_t>(k)] += gy;
          for (std::int64_t c = 0; c < ws.c; ++c)
            for (std::int64_t i = 0; i < ws.h; ++i) {
              const std::int64_t iy = oy * stride - pad + i;
              if (iy < 0 || iy >= is.h) continue;
              for (std::int64_t j = 0; j < ws.w; ++j) {
                const std::int64_t ix = ox * stride - pad + j;
                if (ix < 0 || ix >= is.w) continue;
                g.grad_w.at(k, c, i, j) += gy * x.at(n, c, iy, ix);
                g.grad_x.at(n, c, iy, ix) += gy * p.weight.at(k, c, i, j);
              }
            }
        }
  return g;
}

template BasicTensor<float> conv2d_forward(const BasicTensor<float>&, const ConvParams<float>&,
                                           std::int64_t, std::int64_t);
template BasicTensor<double> conv2d_forward(const BasicTensor<double>&, const ConvParams<double>&,
                                            std::int64_t, std::int64_t);
template ConvGrads<float> conv2d_backward(const BasicTensor<float>&, const BasicTensor<float>&,
                                          const ConvParams<float>&, std::int64_t, std::int64_t);
template ConvGrads<double> conv2d_backward(const BasicTensor<double>&, const BasicTensor<double>&,
                                           const ConvParams<double>&, std::int64_t, std::int64_t);

}  // namespace reference

#define MAPSEG_INSTANTIATE_LAYERS(T)                                                               \
  template BasicTensor<T> conv2d_infer(const BasicTensor<T>&, const ConvParams<T>&, std::int64_t, \
                                       std::int64_t);                                              \
  template LayerResult<T, ConvCache<T>> conv2d_forward(const BasicTensor<T>&,                     \
                                                       const ConvParams<T>&, std::int64_t,         \
                                                       std::int64_t);                              \
  template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const ConvCache<T>&,               \
                                        const ConvParams<T>&);                                     \
  template LayerResult<T, ReluCache> relu_forward(const BasicTensor<T>&);                          \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const ReluCache&);                  \
  template LayerResult<T, MaxPoolCache> maxpool2d_forward(const BasicTensor<T>&, std::int64_t,    \
                                                          std::int64_t);                           \
  template BasicTensor<T> maxpool2d_backward(const BasicTensor<T>&, const MaxPoolCache&);          \
  template LayerResult<T, BNCache<T>> batchnorm_forward(const BasicTensor<T>&, BNParams<T>&,      \
                                                        bool);                                     \
  template BasicTensor<T> batchnorm_infer(const BasicTensor<T>&, const BNParams<T>&);             \
  template BNGrads<T> batchnorm_backward(const BasicTensor<T>&, const BNCache<T>&);               \
  template LayerResult<T, UpsampleCache> upsample2x_forward(const BasicTensor<T>&);               \
  template BasicTensor<T> upsample2x_backward(const BasicTensor<T>&, const UpsampleCache&);       \
  template BasicTensor<T> softmax_channels(const BasicTensor<T>&);                                 \
  template LossResult<T> softmax_cross_entropy(const BasicTensor<T>&,                             \
                                               std::span<const std::uint8_t>);

MAPSEG_INSTANTIATE_LAYERS(float)
MAPSEG_INSTANTIATE_LAYERS(double)

#undef MAPSEG_INSTANTIATE_LAYERS

}  // namespace mapseg::nn
