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
#include <string>
#include <vector>

#include "mapseg/layers.hpp"
#include "mapseg/rng.hpp"
#include "mapseg/tensor.hpp"

namespace mapseg {

struct UNetConfig {
  std::int64_t input_channels = 3;
  std::int64_t num_classes = 11;
  std::int64_t depth = 3;
  std::int64_t base_filters = 16;
  std::int64_t patch_size = 128;

  bool operator==(const UNetConfig&) const = default;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
  std::int64_t level_channels(std::int64_t level) const { return base_filters << level; }
};

/// Borrowed view of one named parameter (or buffer) of a model.
template <typename T>
struct ParamRef {
  std::string name;
  std::vector<std::int64_t> dims;
  std::span<T> values;
};

/// Owned named tensor; a GradientSet is a list of these in parameter order.
template <typename T>
struct NamedValues {
  std::string name;
  std::vector<std::int64_t> dims;
  std::vector<T> values;

  bool operator==(const NamedValues&) const = default;
};

template <typename T>
using GradientSet = std::vector<NamedValues<T>>;

/// conv3x3 (pad 1) -> batch norm -> ReLU, applied twice.
template <typename T>
struct ConvBlock {
  nn::ConvParams<T> conv;
  nn::BNParams<T> bn;
};

template <typename T>
struct Stage {
  ConvBlock<T> first;
  ConvBlock<T> second;
};

template <typename T>
struct StageCache {
  nn::ConvCache<T> conv1;
  nn::BNCache<T> bn1;
  nn::ReluCache relu1;
  nn::ConvCache<T> conv2;
  nn::BNCache<T> bn2;
  nn::ReluCache relu2;
};

template <typename T>
struct UNetCache {
  Shape4 input_shape{};
  std::vector<StageCache<T>> encoder;
  std::vector<nn::MaxPoolCache> pools;
  StageCache<T> bottleneck;
  std::vector<nn::UpsampleCache> upsamples;
  std::vector<std::int64_t> skip_channels;
  std::vector<StageCache<T>> decoder;  // indexed by level, like the model
  nn::ConvCache<T> head;
};

/// U-shaped fully convolutional network.
///
/// Encoder level l runs a Stage at base_filters * 2^l channels and keeps its
/// output as a skip before 2x2 max-pooling. The bottleneck runs at
/// base_filters * 2^depth. Decoder level l upsamples (nearest, 2x), concatenates
/// [skip_l, upsampled] along channels and runs a Stage back down to
/// base_filters * 2^l. A 1x1 head maps base_filters to num_classes logits.
/// Batch norm follows every 3x3 convolution; the head has neither BN nor ReLU.
template <typename T>
class BasicUNet {
 public:
  BasicUNet() = default;

  /// He-normal weights (stddev sqrt(2 / fan_in)) drawn in parameter order,
  /// zero biases, identity batch norm.
  static BasicUNet build(const UNetConfig& config, Rng& rng);

  /// Architecture with all weights zero; shapes only. Used by loaders.
  static BasicUNet zeros(const UNetConfig& config);

  const UNetConfig& config() const { return config_; }

  std::vector<ParamRef<T>> parameters();
  std::vector<ParamRef<const T>> parameters() const;
  /// Batch-norm running statistics, in the same block order as parameters().
  std::vector<ParamRef<T>> buffers();
  std::vector<ParamRef<const T>> buffers() const;

  std::int64_t parameter_count() const;

  template <typename U>
  BasicUNet<U> cast() const;

  std::vector<Stage<T>> encoder;
  Stage<T> bottleneck;
  std::vector<Stage<T>> decoder;
  nn::ConvParams<T> head;

 private:
  UNetConfig config_{};

  template <typename U>
  friend class BasicUNet;
};

using UNet = BasicUNet<float>;

template <typename T>
struct UNetForward {
  BasicTensor<T> logits;
  UNetCache<T> cache;
};

/// Full forward pass keeping what backward needs. Training mode uses batch
/// statistics and updates the batch-norm running estimates in `model`.
template <typename T>
UNetForward<T> forward(BasicUNet<T>& model, const BasicTensor<T>& x, bool training);

/// Inference-only pass: running statistics, no caches, model untouched.
template <typename T>
BasicTensor<T> infer(const BasicUNet<T>& model, const BasicTensor<T>& x);

/// Gradients of sum(grad_logits * logits) with respect to every parameter.
/// With `grad_input` set, also returns the gradient with respect to x.
template <typename T>
GradientSet<T> backward(const BasicUNet<T>& model, const UNetCache<T>& cache,
                        const BasicTensor<T>& grad_logits, BasicTensor<T>* grad_input = nullptr);

/// Zero-valued gradient set with the model's parameter names and shapes.
template <typename T>
GradientSet<T> zero_gradients(const BasicUNet<T>& model);

}  // namespace mapseg
