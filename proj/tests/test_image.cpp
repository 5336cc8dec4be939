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

#include "doctest.h"
#include "mapseg/error.hpp"
#include "mapseg/image.hpp"
#include "mapseg/rng.hpp"
#include "support/tempdir.hpp"

using namespace mapseg;

namespace {

RasterImage random_image(std::int64_t w, std::int64_t h, Rng& rng) {
  RasterImage img(w, h);
  for (auto& b : img.pixels) b = static_cast<std::uint8_t>(rng.uniform_int(256));
  return img;
}

}  // namespace

TEST_CASE("png: save then load is lossless") {
  mapseg::testing::TempDir dir;
  Rng rng(1);
  for (auto [w, h] : {std::pair{1, 1}, std::pair{7, 3}, std::pair{64, 65}, std::pair{300, 2}}) {
    const auto img = random_image(w, h, rng);
    const auto path = dir.file("img.png");
    save_png(img, path);
    CHECK(load_png(path) == img);
  }
}

TEST_CASE("png: encoding is deterministic") {
  Rng rng(2);
  const auto img = random_image(40, 30, rng);
  CHECK(encode_png(img) == encode_png(img));
}

TEST_CASE("png: gray output decodes to equal RGB channels") {
  std::vector<std::uint8_t> gray = {0, 50, 100, 150, 200, 255};
  const auto img = decode_png(encode_png_gray(3, 2, gray));
  REQUIRE(img.width == 3);
  REQUIRE(img.height == 2);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    CHECK(img.pixels[3 * i] == gray[i]);
    CHECK(img.pixels[3 * i + 1] == gray[i]);
    CHECK(img.pixels[3 * i + 2] == gray[i]);
  }
}

TEST_CASE("png: truncated and corrupt inputs are rejected with an offset") {
  Rng rng(3);
  const auto bytes = encode_png(random_image(32, 32, rng));
  for (std::size_t cut : {std::size_t{0}, std::size_t{4}, std::size_t{20}, bytes.size() / 2,
                          bytes.size() - 13}) {
    std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    try {
      (void)decode_png(part);
      FAIL("truncated png at " << cut << " decoded");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
  }
  auto corrupt = bytes;
  corrupt[30] ^= 0xFF;  // inside IHDR: CRC mismatch
  CHECK_THROWS_AS(decode_png(corrupt), IoError);
}

TEST_CASE("png: missing file is an I/O error") {
  CHECK_THROWS_AS(load_png("/nonexistent/dir/file.png"), IoError);
  CHECK_THROWS_AS(save_png(RasterImage(1, 1), "/nonexistent/dir/file.png"), IoError);
}
