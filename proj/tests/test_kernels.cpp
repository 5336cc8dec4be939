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

#include <omp.h>

#include <cmath>
#include <vector>

#include "doctest.h"
#include "mapseg/error.hpp"
#include "mapseg/kernels/gemm.hpp"
#include "mapseg/kernels/im2col.hpp"
#include "mapseg/rng.hpp"

using namespace mapseg;
using namespace mapseg::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("gemm matches the serial reference across shapes and transposes") {
  Rng rng(123);
  const std::int64_t dims[][3] = {{1, 1, 1},    {7, 5, 3},     {8, 48, 256}, {9, 49, 257},
                                  {16, 100, 27}, {65, 130, 300}, {3, 2000, 20}, {70, 5, 600}};
  for (const auto& d : dims) {
    const std::int64_t m = d[0], n = d[1], k = d[2];
    for (int ta = 0; ta < 2; ++ta)
      for (int tb = 0; tb < 2; ++tb)
        for (int acc = 0; acc < 2; ++acc) {
          auto av = random_vec(static_cast<std::size_t>(m * k), rng);
          auto bv = random_vec(static_cast<std::size_t>(k * n), rng);
          auto c0 = random_vec(static_cast<std::size_t>(m * n), rng);
          auto a = ta ? ConstMatrix<double>::row_major(av.data(), k, m).transposed()
                      : ConstMatrix<double>::row_major(av.data(), m, k);
          auto b = tb ? ConstMatrix<double>::row_major(bv.data(), n, k).transposed()
                      : ConstMatrix<double>::row_major(bv.data(), k, n);
          auto fast = c0;
          auto slow = c0;
          gemm(a, b, MutMatrix<double>::row_major(fast.data(), m, n), acc != 0);
          reference::gemm(a, b, MutMatrix<double>::row_major(slow.data(), m, n), acc != 0);
          double worst = 0.0;
          for (std::size_t i = 0; i < fast.size(); ++i)
            worst = std::max(worst, std::abs(fast[i] - slow[i]));
          CHECK(worst < 1e-11 * static_cast<double>(k + 1));
        }
  }
}

TEST_CASE("gemm float path agrees with double reference") {
  Rng rng(5);
  const std::int64_t m = 33, n = 517, k = 290;
  std::vector<float> a(m * k), b(k * n), c(m * n);
  std::vector<double> ad(m * k), bd(k * n), cd(m * n);
  for (std::size_t i = 0; i < a.size(); ++i) ad[i] = a[i] = static_cast<float>(rng.uniform(-1, 1));
  for (std::size_t i = 0; i < b.size(); ++i) bd[i] = b[i] = static_cast<float>(rng.uniform(-1, 1));
  gemm(ConstMatrix<float>::row_major(a.data(), m, k), ConstMatrix<float>::row_major(b.data(), k, n),
       MutMatrix<float>::row_major(c.data(), m, n), false);
  reference::gemm(ConstMatrix<double>::row_major(ad.data(), m, k),
                  ConstMatrix<double>::row_major(bd.data(), k, n),
                  MutMatrix<double>::row_major(cd.data(), m, n), false);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(c[i] - cd[i]) < 1e-4);
}

TEST_CASE("gemm rejects incompatible shapes") {
  std::vector<float> buf(100);
  CHECK_THROWS_AS(gemm(ConstMatrix<float>::row_major(buf.data(), 2, 3),
                       ConstMatrix<float>::row_major(buf.data(), 4, 2),
                       MutMatrix<float>::row_major(buf.data(), 2, 2), false),
                  ShapeError);
}

TEST_CASE("gemm is bit-identical across thread counts") {
  Rng rng(9);
  const std::int64_t m = 64, n = 3000, k = 700;
  std::vector<float> a(m * k), b(k * n);
  for (auto& v : a) v = static_cast<float>(rng.uniform(-1, 1));
  for (auto& v : b) v = static_cast<float>(rng.uniform(-1, 1));
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    std::vector<float> c(m * n);
    gemm(ConstMatrix<float>::row_major(a.data(), m, k),
         ConstMatrix<float>::row_major(b.data(), k, n), MutMatrix<float>::row_major(c.data(), m, n),
         false);
    return c;
  };
  const auto one = run(1);
  const auto four = run(4);
  omp_set_num_threads(1);
  CHECK(one == four);
}

TEST_CASE("col2im is the adjoint of im2col") {
  Rng rng(31);
  const ConvGeometry shapes[] = {
      {2, 5, 6, 3, 3, 1, 1}, {3, 7, 7, 2, 2, 2, 0}, {1, 4, 9, 3, 1, 1, 2}, {4, 8, 8, 3, 3, 2, 1},
      {2, 3, 3, 1, 1, 1, 0}};
  for (const auto& g : shapes) {
    auto x = random_vec(static_cast<std::size_t>(g.channels * g.height * g.width), rng);
    auto c = random_vec(static_cast<std::size_t>(g.col_rows() * g.col_cols()), rng);
    std::vector<double> col(c.size());
    im2col(x.data(), g, col.data());
    std::vector<double> back(x.size(), 0.0);
    col2im_add(c.data(), g, back.data());
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) lhs += col[i] * c[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * back[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("im2col layout: row (c, ky, kx), zero in padding") {
  const ConvGeometry g{1, 2, 2, 3, 3, 1, 1};
  const double x[] = {1, 2, 3, 4};
  std::vector<double> col(static_cast<std::size_t>(g.col_rows() * g.col_cols()));
  im2col(x, g, col.data());
  // Centre tap (ky=1, kx=1) reproduces the image.
  for (int i = 0; i < 4; ++i) CHECK(col[4 * 4 + i] == x[i]);
  // Top-left tap reads padding everywhere except output (1,1).
  CHECK(col[0] == 0.0);
  CHECK(col[3] == 1.0);
}
