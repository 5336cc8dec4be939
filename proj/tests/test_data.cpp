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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mapseg/error.hpp"
#include "mapseg/manifest.hpp"
#include "mapseg/palette.hpp"
#include "mapseg/patches.hpp"
#include "support/tempdir.hpp"

using namespace mapseg;

namespace {

LabelMap random_labels(std::int64_t w, std::int64_t h, int classes, Rng& rng) {
  LabelMap m(w, h);
  for (auto& l : m.labels) l = static_cast<std::uint8_t>(rng.uniform_int(classes));
  return m;
}

// Brute-force nearest palette color, independent of decode_labels.
int nearest_color(Rgb c, const Palette& p, int& distance, bool& tie) {
  int best = -1;
  distance = 1000;
  tie = false;
  for (std::size_t k = 0; k < p.size(); ++k) {
    int d = 0;
    for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(int(c[i]) - int(p.color(k)[i])));
    if (d < distance) {
      distance = d;
      best = static_cast<int>(k);
      tie = false;
    } else if (d == distance) {
      tie = true;
    }
  }
  return best;
}

// Patch whose pixels encode their own coordinates: channel 0 = x/(P-1),
// channel 1 = y/(P-1), label = x + P*y.
Patch coordinate_patch(std::int64_t p) {
  Patch out{Tensor({1, 3, p, p}), LabelMap(p, p)};
  for (std::int64_t y = 0; y < p; ++y)
    for (std::int64_t x = 0; x < p; ++x) {
      out.image.at(0, 0, y, x) = static_cast<float>(x) / static_cast<float>(p - 1);
      out.image.at(0, 1, y, x) = static_cast<float>(y) / static_cast<float>(p - 1);
      out.image.at(0, 2, y, x) = 0.5f;
      out.labels.at(x, y) = static_cast<std::uint8_t>(x + p * y);
    }
  return out;
}

}  // namespace

// ------------------------------------------------------------------- palette

TEST_CASE("default palette: eleven distinct, well separated colors") {
  const auto p = Palette::default_palette();
  REQUIRE(p.size() == 11);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      int d = 0;
      for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(int(p.color(i)[c]) - int(p.color(j)[c])));
      CHECK(d >= 127);
    }
  CHECK(Palette::parse(p.to_text()) == p);
}

TEST_CASE("palette parsing") {
  const auto p = Palette::parse("# comment\n1 water 0 0 255\n\n0 forest 0 128 0  # trailing\n");
  REQUIRE(p.size() == 2);
  CHECK(p[0].name == "forest");
  CHECK(p.color(1) == Rgb{0, 0, 255});
  CHECK_THROWS_AS(Palette::parse("0 a 1 2 3\n2 b 4 5 6\n"), DataError);    // gap
  CHECK_THROWS_AS(Palette::parse("0 a 1 2 3\n1 b 1 2 3\n"), DataError);    // duplicate color
  CHECK_THROWS_AS(Palette::parse("0 a 1 2 300\n"), DataError);             // range
  CHECK_THROWS_AS(Palette::parse("0 a 1 2\n"), DataError);                 // missing field
  CHECK_THROWS_AS(Palette::parse("x a 1 2 3\n"), DataError);               // bad index
  CHECK_THROWS_AS(Palette::parse(""), DataError);
}

TEST_CASE("decode_labels inverts render_labels at tolerance 0") {
  Rng rng(1);
  const auto pal = Palette::default_palette();
  const auto labels = random_labels(37, 23, 11, rng);
  CHECK(decode_labels(render_labels(labels, pal), pal, 0) == labels);
  LabelMap bad(2, 2, 11);
  CHECK_THROWS_AS(render_labels(bad, pal), DataError);
}

TEST_CASE("decode_labels absorbs scan noise and matches brute force") {
  Rng rng(2);
  const auto pal = Palette::default_palette();
  const auto labels = random_labels(20, 20, 11, rng);
  auto img = render_labels(labels, pal);
  for (auto& b : img.pixels) b = static_cast<std::uint8_t>(std::clamp(int(b) + (b > 128 ? -1 : 1), 0, 255));
  CHECK(decode_labels(img, pal, 4) == labels);

  // random jitter up to 4 per channel vs brute-force nearest color
  auto jitter = render_labels(labels, pal);
  for (auto& b : jitter.pixels)
    b = static_cast<std::uint8_t>(std::clamp(int(b) + int(rng.uniform_int(9)) - 4, 0, 255));
  const auto decoded = decode_labels(jitter, pal, 4);
  for (std::int64_t y = 0; y < 20; ++y)
    for (std::int64_t x = 0; x < 20; ++x) {
      int d = 0;
      bool tie = false;
      CHECK(decoded.at(x, y) == nearest_color(jitter.rgb(x, y), pal, d, tie));
    }
}

TEST_CASE("decode_labels errors name the pixel") {
  const auto pal = Palette::default_palette();
  RasterImage img(3, 2, pal.color(0));
  img.set(2, 1, {255, 255, 255});
  try {
    (void)decode_labels(img, pal, 4);
    FAIL("white decoded");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(2,1)") != std::string::npos);
  }
  const Palette two({{0, "a", {0, 0, 0}}, {1, "b", {10, 0, 0}}});
  RasterImage mid(1, 1, {5, 0, 0});
  CHECK_THROWS_AS(decode_labels(mid, two, 8), DataError);  // equidistant
  RasterImage near(1, 1, {4, 0, 0});
  CHECK(decode_labels(near, two, 8).at(0, 0) == 0);
  CHECK_THROWS_AS(decode_labels(near, two, -1), ArgumentError);
}

// ------------------------------------------------------------------ manifest

TEST_CASE("manifest parse, resolve and round trip") {
  const std::string text = "# corpus\ntrain a.png la.png\ncv b.png lb.png\ntest /abs/c.png lc.png\n";
  const auto m = DatasetManifest::parse(text, "/data");
  REQUIRE(m.entries.size() == 3);
  CHECK(m.entries[0].image_path == "/data/a.png");
  CHECK(m.entries[2].image_path == "/abs/c.png");
  CHECK(m.count(Partition::CrossValidation) == 1);
  CHECK(DatasetManifest::parse(m.to_text()) == m);
  CHECK_THROWS_AS(DatasetManifest::parse("valid a b\n"), DataError);
  CHECK_THROWS_AS(DatasetManifest::parse("train a\n"), DataError);
  CHECK_THROWS_AS(DatasetManifest::parse("train a b\ntest a c\n"), DataError);
}

// ------------------------------------------------------------------ patches

TEST_CASE("sample_patches") {
  Rng rng(3);
  const auto pal = Palette::default_palette();
  const auto labels = random_labels(16, 16, 11, rng);
  auto img = render_labels(labels, pal);
  img.set(0, 0, {255, 0, 0});
  auto single = sample_patches(img, labels, 16, 3, rng);
  REQUIRE(single.size() == 3);
  for (const auto& p : single) {
    CHECK(p.labels == labels);
    CHECK(p.image.at(0, 0, 0, 0) == 1.0f);
    CHECK(p.image.at(0, 1, 0, 0) == 0.0f);
  }
  CHECK_THROWS_AS(sample_patches(img, labels, 17, 1, rng), ArgumentError);

  // windows are aligned between image and labels, and value/255 exactly
  RasterImage big(40, 30);
  LabelMap big_labels(40, 30);
  for (std::int64_t y = 0; y < 30; ++y)
    for (std::int64_t x = 0; x < 40; ++x) {
      big.set(x, y, {static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y), 7});
      big_labels.at(x, y) = static_cast<std::uint8_t>(x + y);
    }
  Rng a(9), b(9);
  const auto pa = sample_patches(big, big_labels, 8, 20, a);
  CHECK(pa == sample_patches(big, big_labels, 8, 20, b));
  for (const auto& p : pa)
    for (std::int64_t y = 0; y < 8; ++y)
      for (std::int64_t x = 0; x < 8; ++x) {
        const float fx = p.image.at(0, 0, y, x) * 255.0f;
        const float fy = p.image.at(0, 1, y, x) * 255.0f;
        CHECK(p.labels.at(x, y) == static_cast<int>(std::lround(fx + fy)));
        CHECK(p.image.at(0, 2, y, x) == 7.0f / 255.0f);
      }
}

TEST_CASE("rotate 90 four times is the identity") {
  Rng rng(4);
  const AugmentSpec spec;
  Patch p{tensor_rand_uniform<float>({1, 3, 12, 12}, 0, 1, rng), random_labels(12, 12, 11, rng)};
  Patch r = p;
  for (int i = 0; i < 4; ++i) {
    r = apply_transform(r, Transform::Rotate90, 1.0, spec);
    if (i < 3) CHECK(!(r == p));
  }
  CHECK(r == p);
  CHECK(apply_transform(apply_transform(p, Transform::Rotate90, 1.0, spec), Transform::Rotate270,
                        1.0, spec) == p);
  CHECK(apply_transform(apply_transform(p, Transform::Rotate180, 1.0, spec), Transform::Rotate180,
                        1.0, spec) == p);
  CHECK(apply_transform(apply_transform(p, Transform::FlipHorizontal, 1.0, spec),
                        Transform::FlipHorizontal, 1.0, spec) == p);
  CHECK(apply_transform(p, Transform::Stretch, 1.0, spec) == p);
}

TEST_CASE("rotation is clockwise") {
  const AugmentSpec spec;
  const auto p = coordinate_patch(4);
  const auto r = apply_transform(p, Transform::Rotate90, 1.0, spec);
  // The top-left source pixel lands top-right.
  CHECK(r.labels.at(3, 0) == p.labels.at(0, 0));
  CHECK(r.labels.at(0, 0) == p.labels.at(0, 3));
}

TEST_CASE("augmentations keep image and labels geometrically aligned") {
  const std::int64_t P = 15;
  const auto p = coordinate_patch(P);
  const AugmentSpec spec;
  const Transform all[] = {Transform::Rotate90, Transform::Rotate180, Transform::Rotate270,
                           Transform::FlipHorizontal, Transform::FlipVertical, Transform::Stretch};
  for (Transform t : all)
    for (double factor : {0.8, 0.93, 1.0, 1.1, 1.25}) {
      if (t != Transform::Stretch && factor != 1.0) continue;
      const auto out = apply_transform(p, t, factor, spec);
      for (std::int64_t y = 0; y < P; ++y)
        for (std::int64_t x = 0; x < P; ++x) {
          const int label = out.labels.at(x, y);
          REQUIRE(label < P * P);
          const double sx = label % P, sy = label / P;
          const double ix = out.image.at(0, 0, y, x) * (P - 1);
          const double iy = out.image.at(0, 1, y, x) * (P - 1);
          const double tol = t == Transform::Stretch ? 0.5 + 1e-4 : 1e-4;
          CHECK(std::abs(ix - sx) <= tol);
          CHECK(std::abs(iy - sy) <= tol);
        }
    }
}

TEST_CASE("augment draws only valid labels and enforces the stretch range") {
  Rng rng(5);
  AugmentSpec spec;
  Patch p{tensor_rand_uniform<float>({1, 3, 16, 16}, 0, 1, rng), random_labels(16, 16, 4, rng)};
  for (int i = 0; i < 50; ++i) {
    const auto a = augment(p, spec, rng);
    CHECK(a.image.shape() == p.image.shape());
    for (auto l : a.labels.labels) CHECK(l < 4);
  }
  CHECK_THROWS_AS(apply_transform(p, Transform::Stretch, 1.3, spec), ArgumentError);
  CHECK_THROWS_AS(apply_transform(p, Transform::Stretch, 0.7, spec), ArgumentError);
  spec.stretch_min = 1.1;
  CHECK_THROWS_AS(spec.validate(), ArgumentError);
}

TEST_CASE("build_epoch accounting") {
  Rng rng(6);
  std::vector<LabeledImage> images;
  for (int i = 0; i < 10; ++i) {
    auto labels = random_labels(24, 24, 11, rng);
    images.push_back({render_labels(labels, Palette::default_palette()), labels});
  }
  EpochSpec spec;
  spec.patch_size = 16;
  spec.patches_per_image = 10;
  Rng a(1), b(1);
  const auto epoch = build_epoch(images, spec, a);
  CHECK(epoch.size() == 110);
  CHECK(epoch == build_epoch(images, spec, b));

  spec.augment_fraction = 0.0;
  CHECK(build_epoch(images, spec, a).size() == 100);
  spec.augment_fraction = 0.25;
  spec.patches_per_image = 1;
  CHECK(build_epoch(images, spec, a).size() == 13);  // ceil(2.5) extras
  spec.augment_fraction = 1.5;
  CHECK_THROWS_AS(build_epoch(images, spec, a), ArgumentError);
  CHECK_THROWS_AS(build_epoch(std::span<const LabeledImage>(), spec, a), DataError);

  for (std::int64_t n : {1, 7, 10, 30, 99, 100, 200, 1234})
    CHECK(augmented_count(n, 0.10) == static_cast<std::int64_t>((n + 9) / 10));
}

TEST_CASE("build_epoch from a manifest on disk") {
  mapseg::testing::TempDir dir;
  Rng rng(7);
  const auto pal = Palette::default_palette();
  DatasetManifest m;
  for (int i = 0; i < 4; ++i) {
    const auto labels = random_labels(16, 16, 11, rng);
    const auto img_path = dir.file("i" + std::to_string(i) + ".png");
    const auto lbl_path = dir.file("l" + std::to_string(i) + ".png");
    save_png(render_labels(labels, pal), img_path);
    save_png(render_labels(labels, pal), lbl_path);
    m.entries.push_back({i < 3 ? Partition::Train : Partition::Test, img_path, lbl_path});
  }
  EpochSpec spec;
  spec.patch_size = 16;
  const auto epoch = build_epoch(m, pal, 0, spec, rng);
  CHECK(epoch.size() == 4);  // 3 base + ceil(0.3)
  Tensor batch;
  std::vector<std::uint8_t> labels;
  make_batch(epoch, batch, labels);
  CHECK(batch.shape() == Shape4{4, 3, 16, 16});
  CHECK(labels.size() == 4 * 256);
}
