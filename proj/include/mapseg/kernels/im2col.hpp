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

namespace mapseg::kernels {

struct ConvGeometry {
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  std::int64_t stride = 1;
  std::int64_t pad = 0;

  std::int64_t out_h() const { return (height + 2 * pad - kernel_h) / stride + 1; }
  std::int64_t out_w() const { return (width + 2 * pad - kernel_w) / stride + 1; }
  std::int64_t col_rows() const { return channels * kernel_h * kernel_w; }
  std::int64_t col_cols() const { return out_h() * out_w(); }
};

/// Unfolds one (C, H, W) image into a (C*kh*kw, OH*OW) matrix; row index is
/// (c*kh + ky)*kw + kx, zero where the window reads padding.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col);

/// Same unfolding restricted to output rows [oy0, oy1): `col` is
/// (C*kh*kw, (oy1-oy0)*OW).
template <typename T>
void im2col_rows(const T* image, const ConvGeometry& g, std::int64_t oy0, std::int64_t oy1,
                 T* col);

/// Adjoint of im2col: scatters columns back and adds into `image_grad`.
/// Parallel over channels; within a channel the summation order is fixed.
template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* image_grad);

/// Adjoint of im2col_rows.
template <typename T>
void col2im_add_rows(const T* col, const ConvGeometry& g, std::int64_t oy0, std::int64_t oy1,
                     T* image_grad);

}  // namespace mapseg::kernels
