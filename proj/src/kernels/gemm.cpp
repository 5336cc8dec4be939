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

#include "mapseg/kernels/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "mapseg/error.hpp"

namespace mapseg::kernels {

namespace {

// 512-bit GCC vector types; on narrower targets the compiler splits them.
template <typename T>
struct Lanes;
template <>
struct Lanes<float> {
  typedef float Vec __attribute__((vector_size(64)));
  static constexpr int kCount = 16;
};
template <>
struct Lanes<double> {
  typedef double Vec __attribute__((vector_size(64)));
  static constexpr int kCount = 8;
};

constexpr int kMR = 8;
constexpr int kVecPerRow = 3;
constexpr std::int64_t kKC = 256;
constexpr std::int64_t kMC = 64;

template <typename T>
constexpr int kNR = Lanes<T>::kCount * kVecPerRow;

template <typename T>
constexpr std::int64_t kNC = kNR<T> * 40;

void check_dims(std::int64_t am, std::int64_t ak, std::int64_t bk, std::int64_t bn,
                std::int64_t cm, std::int64_t cn) {
  if (ak != bk || am != cm || bn != cn)
    throw ShapeError("gemm: incompatible shapes A " + std::to_string(am) + "x" +
                     std::to_string(ak) + ", B " + std::to_string(bk) + "x" + std::to_string(bn) +
                     ", C " + std::to_string(cm) + "x" + std::to_string(cn));
}

// A block rows [i0, i0+mc) x depth [p0, p0+kc) into MR-row panels laid out [p][i].
template <typename T>
void pack_a(const ConstMatrix<T>& a, std::int64_t i0, std::int64_t mc, std::int64_t p0,
            std::int64_t kc, T* out) {
  for (std::int64_t ir = 0; ir < mc; ir += kMR) {
    const std::int64_t mr = std::min<std::int64_t>(kMR, mc - ir);
    T* panel = out + ir * kc;
    if (mr < kMR) std::fill_n(panel, kMR * kc, T(0));
    for (std::int64_t i = 0; i < mr; ++i) {
      const T* src = a.data + (i0 + ir + i) * a.row_stride + p0 * a.col_stride;
      for (std::int64_t p = 0; p < kc; ++p) panel[p * kMR + i] = src[p * a.col_stride];
    }
  }
}

// B block depth [p0, p0+kc) x cols [j0, j0+nc) into NR-column panels laid out [p][j].
template <typename T>
void pack_b(const ConstMatrix<T>& b, std::int64_t p0, std::int64_t kc, std::int64_t j0,
            std::int64_t nc, T* out) {
  constexpr int nr_full = kNR<T>;
  const std::int64_t panels = (nc + nr_full - 1) / nr_full;
#pragma omp parallel for schedule(static) if (kc * nc > (1 << 15))
  for (std::int64_t jp = 0; jp < panels; ++jp) {
    const std::int64_t jr = jp * nr_full;
    const std::int64_t nr = std::min<std::int64_t>(nr_full, nc - jr);
    T* panel = out + jr * kc;
    if (nr < nr_full) std::fill_n(panel, nr_full * kc, T(0));
    if (b.col_stride == 1) {
      for (std::int64_t p = 0; p < kc; ++p)
        std::memcpy(panel + p * nr_full, b.data + (p0 + p) * b.row_stride + j0 + jr,
                    sizeof(T) * nr);
    } else {
      for (std::int64_t j = 0; j < nr; ++j) {
        const T* src = b.data + p0 * b.row_stride + (j0 + jr + j) * b.col_stride;
        for (std::int64_t p = 0; p < kc; ++p) panel[p * nr_full + j] = src[p * b.row_stride];
      }
    }
  }
}

// MR x NR tile = sum over p of a[p][:] outer b[p][:], accumulated in p order.
template <typename T>
void micro_kernel(std::int64_t kc, const T* __restrict a, const T* __restrict b,
                  T* __restrict tile) {
  using Vec = typename Lanes<T>::Vec;
  constexpr int lanes = Lanes<T>::kCount;
  constexpr int nr = kNR<T>;
  Vec acc[kMR][kVecPerRow];
#pragma GCC unroll 8
  for (int i = 0; i < kMR; ++i)
#pragma GCC unroll 3
    for (int v = 0; v < kVecPerRow; ++v) acc[i][v] = Vec{};

  for (std::int64_t p = 0; p < kc; ++p) {
    Vec bv[kVecPerRow];
#pragma GCC unroll 3
    for (int v = 0; v < kVecPerRow; ++v) std::memcpy(&bv[v], b + p * nr + v * lanes, sizeof(Vec));
    const T* ap = a + p * kMR;
#pragma GCC unroll 8
    for (int i = 0; i < kMR; ++i) {
      const Vec ai = Vec{} + ap[i];
#pragma GCC unroll 3
      for (int v = 0; v < kVecPerRow; ++v) acc[i][v] += ai * bv[v];
    }
  }

#pragma GCC unroll 8
  for (int i = 0; i < kMR; ++i)
#pragma GCC unroll 3
    for (int v = 0; v < kVecPerRow; ++v)
      std::memcpy(tile + i * nr + v * lanes, &acc[i][v], sizeof(Vec));
}

template <typename T>
void store_tile(const T* tile, const MutMatrix<T>& c, std::int64_t i0, std::int64_t j0,
                std::int64_t mr, std::int64_t nr, bool overwrite) {
  constexpr int nr_full = kNR<T>;
  for (std::int64_t i = 0; i < mr; ++i) {
    T* dst = c.data + (i0 + i) * c.ld + j0;
    const T* src = tile + i * nr_full;
    if (overwrite) {
      std::memcpy(dst, src, sizeof(T) * nr);
    } else {
      for (std::int64_t j = 0; j < nr; ++j) dst[j] += src[j];
    }
  }
}

template <typename T>
struct PackBuffers {
  std::vector<T> a;
  std::vector<T> b;
};

template <typename T>
PackBuffers<T>& pack_buffers() {
  thread_local PackBuffers<T> buffers;
  return buffers;
}

}  // namespace

template <typename T>
void gemm(ConstMatrix<T> a, ConstMatrix<T> b, MutMatrix<T> c, bool accumulate) {
  check_dims(a.rows, a.cols, b.rows, b.cols, c.rows, c.cols);
  const std::int64_t m = a.rows;
  const std::int64_t n = b.cols;
  const std::int64_t k = a.cols;
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate)
      for (std::int64_t i = 0; i < m; ++i) std::fill_n(c.data + i * c.ld, n, T(0));
    return;
  }

  constexpr int nr_full = kNR<T>;
  auto& buf = pack_buffers<T>();
  buf.a.resize(static_cast<std::size_t>(kMC * kKC));
  buf.b.resize(static_cast<std::size_t>(kNC<T> * kKC));
  T* apack = buf.a.data();
  T* bpack = buf.b.data();

  for (std::int64_t jc = 0; jc < n; jc += kNC<T>) {
    const std::int64_t nc = std::min(kNC<T>, n - jc);
    const std::int64_t n_panels = (nc + nr_full - 1) / nr_full;
    for (std::int64_t pc = 0; pc < k; pc += kKC) {
      const std::int64_t kc = std::min(kKC, k - pc);
      const bool overwrite = pc == 0 && !accumulate;
      pack_b(b, pc, kc, jc, nc, bpack);
      for (std::int64_t ic = 0; ic < m; ic += kMC) {
        const std::int64_t mc = std::min(kMC, m - ic);
        const std::int64_t m_panels = (mc + kMR - 1) / kMR;
        pack_a(a, ic, mc, pc, kc, apack);
#pragma omp parallel for schedule(static) if (n_panels > 1 && mc * nc * kc > (1 << 18))
        for (std::int64_t jp = 0; jp < n_panels; ++jp) {
          alignas(64) T tile[kMR * nr_full];
          const std::int64_t jr = jp * nr_full;
          const std::int64_t nr = std::min<std::int64_t>(nr_full, nc - jr);
          for (std::int64_t ip = 0; ip < m_panels; ++ip) {
            const std::int64_t ir = ip * kMR;
            const std::int64_t mr = std::min<std::int64_t>(kMR, mc - ir);
            micro_kernel<T>(kc, apack + ir * kc, bpack + jr * kc, tile);
            store_tile<T>(tile, c, ic + ir, jc + jr, mr, nr, overwrite);
          }
        }
      }
    }
  }
}

namespace reference {

template <typename T>
void gemm(ConstMatrix<T> a, ConstMatrix<T> b, MutMatrix<T> c, bool accumulate) {
  check_dims(a.rows, a.cols, b.rows, b.cols, c.rows, c.cols);
  for (std::int64_t i = 0; i < a.rows; ++i) {
    for (std::int64_t j = 0; j < b.cols; ++j) {
      T sum = accumulate ? c(i, j) : T(0);
      for (std::int64_t p = 0; p < a.cols; ++p) sum += a(i, p) * b(p, j);
      c(i, j) = sum;
    }
  }
}

template void gemm<float>(ConstMatrix<float>, ConstMatrix<float>, MutMatrix<float>, bool);
template void gemm<double>(ConstMatrix<double>, ConstMatrix<double>, MutMatrix<double>, bool);

}  // namespace reference

template void gemm<float>(ConstMatrix<float>, ConstMatrix<float>, MutMatrix<float>, bool);
template void gemm<double>(ConstMatrix<double>, ConstMatrix<double>, MutMatrix<double>, bool);

}  // namespace mapseg::kernels
