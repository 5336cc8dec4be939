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

#include "mapseg/kernels/im2col.hpp"

#include <algorithm>
#include <cstring>

namespace mapseg::kernels {

namespace {

// Output columns [lo, hi) whose input column ox*stride - pad + kx lies inside [0, width).
inline void valid_range(std::int64_t offset, std::int64_t stride, std::int64_t extent,
                        std::int64_t out_extent, std::int64_t& lo, std::int64_t& hi) {
  // offset + o*stride >= 0  and  offset + o*stride < extent
  lo = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  hi = offset >= extent ? 0 : (extent - offset + stride - 1) / stride;
  lo = std::min(lo, out_extent);
  hi = std::clamp(hi, lo, out_extent);
}

}  // namespace

template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  im2col_rows(image, g, 0, g.out_h(), col);
}

template <typename T>
void im2col_rows(const T* image, const ConvGeometry& g, std::int64_t oy0, std::int64_t oy1,
                 T* col) {
  const std::int64_t oh = oy1 - oy0;
  const std::int64_t ow = g.out_w();
  const std::int64_t rows = g.col_rows();
#pragma omp parallel for schedule(static) if (rows * oh * ow > (1 << 16))
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::int64_t kx = r % g.kernel_w;
    const std::int64_t ky = (r / g.kernel_w) % g.kernel_h;
    const std::int64_t c = r / (g.kernel_w * g.kernel_h);
    const T* src = image + c * g.height * g.width;
    T* dst = col + r * oh * ow;
    std::int64_t x_lo, x_hi;
    valid_range(kx - g.pad, g.stride, g.width, ow, x_lo, x_hi);
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      T* row = dst + oy * ow;
      const std::int64_t iy = (oy0 + oy) * g.stride - g.pad + ky;
      if (iy < 0 || iy >= g.height) {
        std::fill_n(row, ow, T(0));
        continue;
      }
      std::fill_n(row, x_lo, T(0));
      const T* line = src + iy * g.width + kx - g.pad;
      if (g.stride == 1) {
        std::memcpy(row + x_lo, line + x_lo, sizeof(T) * (x_hi - x_lo));
      } else {
        for (std::int64_t ox = x_lo; ox < x_hi; ++ox) row[ox] = line[ox * g.stride];
      }
      std::fill(row + x_hi, row + ow, T(0));
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* image_grad) {
  col2im_add_rows(col, g, 0, g.out_h(), image_grad);
}

template <typename T>
void col2im_add_rows(const T* col, const ConvGeometry& g, std::int64_t oy0, std::int64_t oy1,
                     T* image_grad) {
  const std::int64_t oh = oy1 - oy0;
  const std::int64_t ow = g.out_w();
#pragma omp parallel for schedule(static) if (g.channels * oh * ow > (1 << 14))
  for (std::int64_t c = 0; c < g.channels; ++c) {
    T* dst = image_grad + c * g.height * g.width;
    for (std::int64_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::int64_t kx = 0; kx < g.kernel_w; ++kx) {
        const std::int64_t r = (c * g.kernel_h + ky) * g.kernel_w + kx;
        const T* src = col + r * oh * ow;
        std::int64_t x_lo, x_hi;
        valid_range(kx - g.pad, g.stride, g.width, ow, x_lo, x_hi);
        for (std::int64_t oy = 0; oy < oh; ++oy) {
          const std::int64_t iy = (oy0 + oy) * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.height) continue;
          T* line = dst + iy * g.width + kx - g.pad;
          const T* row = src + oy * ow;
          if (g.stride == 1) {
            for (std::int64_t ox = x_lo; ox < x_hi; ++ox) line[ox] += row[ox];
          } else {
            for (std::int64_t ox = x_lo; ox < x_hi; ++ox) line[ox * g.stride] += row[ox];
          }
        }
      }
    }
  }
}

template void im2col<float>(const float*, const ConvGeometry&, float*);
template void im2col<double>(const double*, const ConvGeometry&, double*);
template void col2im_add<float>(const float*, const ConvGeometry&, float*);
template void col2im_add<double>(const double*, const ConvGeometry&, double*);
template void im2col_rows<float>(const float*, const ConvGeometry&, std::int64_t, std::int64_t,
                                 float*);
template void im2col_rows<double>(const double*, const ConvGeometry&, std::int64_t, std::int64_t,
                                  double*);
template void col2im_add_rows<float>(const float*, const ConvGeometry&, std::int64_t,
                                     std::int64_t, float*);
template void col2im_add_rows<double>(const double*, const ConvGeometry&, std::int64_t,
                                      std::int64_t, double*);

}  // namespace mapseg::kernels
