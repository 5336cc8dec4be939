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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mapseg/error.hpp"
#include "mapseg/rng.hpp"

namespace mapseg {

struct Shape4 {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  bool operator==(const Shape4&) const = default;

  /// Element count; throws ShapeError on negative dims or size_t overflow.
  std::size_t count() const;
  bool all_positive() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }
  std::string str() const;
};

/// Dense (n, c, h, w) row-major array. Float is the production element type;
/// double exists so gradient checks can re-run the same code in 64-bit.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape4 shape) : shape_(shape), data_(shape.count(), T(0)) {}
  BasicTensor(Shape4 shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.count())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
  }

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }

  std::size_t offset(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return static_cast<std::size_t>(((n * shape_.c + c) * shape_.h + h) * shape_.w + w);
  }
  T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return data_[offset(n, c, h, w)];
  }
  const T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return data_[offset(n, c, h, w)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t plane_size() const { return static_cast<std::size_t>(shape_.h * shape_.w); }
  T* plane(std::int64_t n, std::int64_t c) { return data_.data() + offset(n, c, 0, 0); }
  const T* plane(std::int64_t n, std::int64_t c) const {
    return data_.data() + offset(n, c, 0, 0);
  }
  T* sample(std::int64_t n) { return data_.data() + offset(n, 0, 0, 0); }
  const T* sample(std::int64_t n) const { return data_.data() + offset(n, 0, 0, 0); }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool operator==(const BasicTensor&) const = default;

 private:
  Shape4 shape_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

template <typename T>
BasicTensor<T> tensor_full(Shape4 shape, T value) {
  BasicTensor<T> t(shape);
  t.fill(value);
  return t;
}

/// Draws elements in flat index order from `rng`.
template <typename T>
BasicTensor<T> tensor_rand_normal(Shape4 shape, double mean, double stddev, Rng& rng) {
  if (!(stddev >= 0.0)) throw ArgumentError("tensor_rand_normal: stddev must be >= 0");
  BasicTensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(rng.normal(mean, stddev));
  return t;
}

template <typename T>
BasicTensor<T> tensor_rand_uniform(Shape4 shape, double lo, double hi, Rng& rng) {
  BasicTensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T, typename F>
BasicTensor<T> tensor_map(const BasicTensor<T>& x, F f) {
  BasicTensor<T> y(x.shape());
  const T* src = x.ptr();
  T* dst = y.ptr();
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static) if (n > (1 << 16))
  for (std::int64_t i = 0; i < n; ++i) dst[i] = f(src[i]);
  return y;
}

template <typename T, typename F>
BasicTensor<T> tensor_zip(const BasicTensor<T>& x, const BasicTensor<T>& y, F f) {
  if (!(x.shape() == y.shape()))
    throw ShapeError("tensor_zip: shape mismatch " + x.shape().str() + " vs " +
                     y.shape().str());
  BasicTensor<T> z(x.shape());
  const T* a = x.ptr();
  const T* b = y.ptr();
  T* dst = z.ptr();
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static) if (n > (1 << 16))
  for (std::int64_t i = 0; i < n; ++i) dst[i] = f(a[i], b[i]);
  return z;
}

/// Channels of `a` first, then `b`.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Shape4& sa = a.shape();
  const Shape4& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw ShapeError("concat_channels: " + sa.str() + " and " + sb.str() +
                     " differ in batch or spatial dims");
  BasicTensor<T> out({sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t plane = a.plane_size();
  for (std::int64_t n = 0; n < sa.n; ++n) {
    if (sa.c > 0) std::copy_n(a.sample(n), sa.c * plane, out.plane(n, 0));
    if (sb.c > 0) std::copy_n(b.sample(n), sb.c * plane, out.plane(n, sa.c));
  }
  return out;
}

/// Channels [begin, end).
template <typename T>
BasicTensor<T> slice_channels(const BasicTensor<T>& x, std::int64_t begin, std::int64_t end) {
  const Shape4& s = x.shape();
  if (begin < 0 || end < begin || end > s.c)
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") outside " + s.str());
  BasicTensor<T> out({s.n, end - begin, s.h, s.w});
  const std::size_t plane = x.plane_size();
  for (std::int64_t n = 0; n < s.n; ++n)
    if (end > begin) std::copy_n(x.plane(n, begin), (end - begin) * plane, out.sample(n));
  return out;
}

template <typename T>
BasicTensor<T> pad_spatial(const BasicTensor<T>& x, std::int64_t pad_h, std::int64_t pad_w,
                           T value) {
  if (pad_h < 0 || pad_w < 0) throw ArgumentError("pad_spatial: pads must be >= 0");
  const Shape4& s = x.shape();
  BasicTensor<T> out({s.n, s.c, s.h + 2 * pad_h, s.w + 2 * pad_w});
  out.fill(value);
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t h = 0; h < s.h; ++h)
        std::copy_n(&x.at(n, c, h, 0), s.w, &out.at(n, c, h + pad_h, pad_w));
  return out;
}

/// Centered crop to (h, w); the inverse of pad_spatial for symmetric pads.
template <typename T>
BasicTensor<T> crop_center(const BasicTensor<T>& x, std::int64_t h, std::int64_t w) {
  const Shape4& s = x.shape();
  if (h < 0 || w < 0 || h > s.h || w > s.w)
    throw ShapeError("crop_center: target larger than " + s.str());
  const std::int64_t top = (s.h - h) / 2;
  const std::int64_t left = (s.w - w) / 2;
  BasicTensor<T> out({s.n, s.c, h, w});
  for (std::int64_t n = 0; n < s.n; ++n)
    for (std::int64_t c = 0; c < s.c; ++c)
      for (std::int64_t y = 0; y < h; ++y)
        std::copy_n(&x.at(n, c, top + y, left), w, &out.at(n, c, y, 0));
  return out;
}

/// Sample `index` as a batch-of-one tensor.
template <typename T>
BasicTensor<T> take_sample(const BasicTensor<T>& x, std::int64_t index) {
  const Shape4& s = x.shape();
  if (index < 0 || index >= s.n) throw ShapeError("take_sample: index out of range");
  BasicTensor<T> out({1, s.c, s.h, s.w});
  std::copy_n(x.sample(index), out.size(), out.ptr());
  return out;
}

/// Stacks batch-of-one (or any batch) tensors along n.
template <typename T>
BasicTensor<T> stack_batch(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw ShapeError("stack_batch: no inputs");
  Shape4 s = parts.front().shape();
  std::int64_t n = 0;
  for (const auto& p : parts) {
    const Shape4& ps = p.shape();
    if (ps.c != s.c || ps.h != s.h || ps.w != s.w)
      throw ShapeError("stack_batch: mismatched " + ps.str() + " vs " + s.str());
    n += ps.n;
  }
  s.n = n;
  BasicTensor<T> out(s);
  T* dst = out.ptr();
  for (const auto& p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
  return out;
}

}  // namespace mapseg
