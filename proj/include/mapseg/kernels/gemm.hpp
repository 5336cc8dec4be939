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

/// Read-only strided matrix. Transposition is a stride swap, so one GEMM entry
/// point serves A*B, A^T*B and A*B^T.
template <typename T>
struct ConstMatrix {
  const T* data = nullptr;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::int64_t row_stride = 0;
  std::int64_t col_stride = 1;

  static ConstMatrix row_major(const T* data, std::int64_t rows, std::int64_t cols) {
    return {data, rows, cols, cols, 1};
  }
  ConstMatrix transposed() const { return {data, cols, rows, col_stride, row_stride}; }
  T operator()(std::int64_t i, std::int64_t j) const {
    return data[i * row_stride + j * col_stride];
  }
};

/// Row-major output matrix with leading dimension `ld`.
template <typename T>
struct MutMatrix {
  T* data = nullptr;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::int64_t ld = 0;

  static MutMatrix row_major(T* data, std::int64_t rows, std::int64_t cols) {
    return {data, rows, cols, cols};
  }
  T& operator()(std::int64_t i, std::int64_t j) const { return data[i * ld + j]; }
};

/// C = A*B, or C += A*B when `accumulate`. Cache-blocked, packed, and
/// parallelized over output column panels. Each C element is reduced over k in
/// ascending blocks of a fixed depth, so results do not depend on the thread
/// count.
template <typename T>
void gemm(ConstMatrix<T> a, ConstMatrix<T> b, MutMatrix<T> c, bool accumulate);

namespace reference {

/// Serial triple loop, k ascending. Kept for tests and benchmarks.
template <typename T>
void gemm(ConstMatrix<T> a, ConstMatrix<T> b, MutMatrix<T> c, bool accumulate);

}  // namespace reference

}  // namespace mapseg::kernels
