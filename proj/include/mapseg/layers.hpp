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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mapseg/tensor.hpp"

namespace mapseg::nn {

// Forward/backward primitives of the segmentation network. Every op is a
// template over the element type: float for training and inference, double
// for gradient checking. Backward passes are hand-written; a forward call
// returns the output together with whatever its backward needs.

template <typename T, typename Cache>
struct LayerResult {
  BasicTensor<T> y;
  Cache cache;
};

// ---------------------------------------------------------------- convolution

template <typename T>
struct ConvParams {
  BasicTensor<T> weight;  // (out_channels, in_channels, kernel_h, kernel_w)
  std::vector<T> bias;    // out_channels

  std::int64_t out_channels() const { return weight.shape().n; }
  std::int64_t in_channels() const { return weight.shape().c; }
  std::int64_t kernel_h() const { return weight.shape().h; }
  std::int64_t kernel_w() const { return weight.shape().w; }
};

template <typename T>
struct ConvCache {
  BasicTensor<T> input;
  std::int64_t stride = 1;
  std::int64_t pad = 0;
  Shape4 out_shape{};
};

template <typename T>
struct ConvGrads {
  BasicTensor<T> grad_x;
  BasicTensor<T> grad_w;
  std::vector<T> grad_b;
};

/// Output shape of a convolution; ShapeError if channels disagree or the
/// output would be empty.
Shape4 conv2d_output_shape(const Shape4& x, const Shape4& weight, std::int64_t stride,
                           std::int64_t pad);

/// y[n,k,oy,ox] = b[k] + sum_{c,i,j} w[k,c,i,j] * xpad[n,c,oy*s+i,ox*s+j],
/// computed as im2col + GEMM per sample. Bias is the initial value of every
/// accumulation, then the (c,i,j) products are added in GEMM block order.
template <typename T>
BasicTensor<T> conv2d_infer(const BasicTensor<T>& x, const ConvParams<T>& p, std::int64_t stride,
                            std::int64_t pad);

template <typename T>
LayerResult<T, ConvCache<T>> conv2d_forward(const BasicTensor<T>& x, const ConvParams<T>& p,
                                            std::int64_t stride, std::int64_t pad);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_y, const ConvCache<T>& cache,
                             const ConvParams<T>& p);

// ----------------------------------------------------------------------- ReLU

struct ReluCache {
  std::vector<std::uint8_t> positive;
  Shape4 shape{};
};

template <typename T>
LayerResult<T, ReluCache> relu_forward(const BasicTensor<T>& z);

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_y, const ReluCache& cache);

// ---------------------------------------------------------------- max-pooling

struct MaxPoolCache {
  Shape4 input_shape{};
  Shape4 output_shape{};
  std::vector<std::int64_t> argmax;  // flat input index per output element
};

Shape4 maxpool_output_shape(const Shape4& x, std::int64_t k, std::int64_t stride);

/// k x k windows; ties resolve to the first maximum in row-major window order.
template <typename T>
LayerResult<T, MaxPoolCache> maxpool2d_forward(const BasicTensor<T>& x, std::int64_t k = 2,
                                               std::int64_t stride = 2);

template <typename T>
BasicTensor<T> maxpool2d_backward(const BasicTensor<T>& grad_y, const MaxPoolCache& cache);

// -------------------------------------------------------- batch normalization

template <typename T>
struct BNParams {
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T eps = T(1e-5);
  T momentum = T(0.1);

  static BNParams identity(std::int64_t channels) {
    const auto n = static_cast<std::size_t>(channels);
    return {std::vector<T>(n, T(1)), std::vector<T>(n, T(0)), std::vector<T>(n, T(0)),
            std::vector<T>(n, T(1))};
  }
  std::int64_t channels() const { return static_cast<std::int64_t>(gamma.size()); }
};

template <typename T>
struct BNCache {
  BasicTensor<T> x_hat;
  std::vector<T> inv_std;
  std::vector<T> gamma;
  bool training = true;
};

template <typename T>
struct BNGrads {
  BasicTensor<T> grad_x;
  std::vector<T> grad_gamma;
  std::vector<T> grad_beta;
};

/// Training mode normalizes with batch statistics over (n, h, w) and folds
/// them into the running estimates (unbiased variance); inference mode uses
/// the running estimates and leaves `p` untouched.
template <typename T>
LayerResult<T, BNCache<T>> batchnorm_forward(const BasicTensor<T>& x, BNParams<T>& p,
                                             bool training);

template <typename T>
BasicTensor<T> batchnorm_infer(const BasicTensor<T>& x, const BNParams<T>& p);

template <typename T>
BNGrads<T> batchnorm_backward(const BasicTensor<T>& grad_y, const BNCache<T>& cache);

// ------------------------------------------------------------ 2x upsampling

struct UpsampleCache {
  Shape4 input_shape{};
};

/// Nearest neighbour: y[n,c,2i+a,2j+b] = x[n,c,i,j].
template <typename T>
LayerResult<T, UpsampleCache> upsample2x_forward(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> upsample2x_backward(const BasicTensor<T>& grad_y, const UpsampleCache& cache);

// ------------------------------------------------------------ softmax + loss

/// Per-pixel softmax across channels, with per-pixel max subtraction.
template <typename T>
BasicTensor<T> softmax_channels(const BasicTensor<T>& x);

template <typename T>
struct LossResult {
  double loss = 0.0;
  BasicTensor<T> grad_logits;
};

/// Mean over all n*h*w pixels of -log softmax(logits)[label]; `labels` is
/// (n, h, w) row-major. Gradient is (softmax - onehot) / pixel_count.
template <typename T>
LossResult<T> softmax_cross_entropy(const BasicTensor<T>& logits,
                                    std::span<const std::uint8_t> labels);

namespace reference {

/// Serial direct convolution, no im2col. Kept for tests and benchmarks.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& x, const ConvParams<T>& p, std::int64_t stride,
                              std::int64_t pad);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x,
                             const ConvParams<T>& p, std::int64_t stride, std::int64_t pad);

}  // namespace reference

}  // namespace mapseg::nn
