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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mapseg/image.hpp"
#include "mapseg/manifest.hpp"
#include "mapseg/palette.hpp"

namespace mapseg {

struct SynthSpec {
  std::int64_t width = 128;
  std::int64_t height = 128;
  std::int64_t num_regions = 6;
  std::int64_t num_classes = 11;
  double noise_stddev = 0.0;   // additive Gaussian on each RGB byte
  bool boundary_ink = false;   // 1-px dark lines where regions meet
  std::int64_t clutter_strokes = 0;  // short dark polylines, like map text
  std::uint64_t seed = 0;

  /// ArgumentError unless dims >= 16, regions >= 1, 1 <= classes <= palette
  /// size, noise finite and >= 0, strokes >= 0.
  void validate(std::size_t palette_size) const;
};

struct SeedPoint {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::uint8_t cls = 0;
};

struct SynthSample {
  RasterImage image;
  LabelMap labels;
  std::vector<SeedPoint> seeds;
  std::uint64_t seed = 0;
};

/// Dark gray used for boundary ink and clutter.
inline constexpr Rgb kInkColor = {30, 30, 30};

/// Index of the nearest seed for every pixel (squared Euclidean distance,
/// ties to the lowest seed index), row-major.
std::vector<std::int32_t> voronoi_regions(std::int64_t width, std::int64_t height,
                                          const std::vector<SeedPoint>& seeds);

/// Seeds at uniform integer positions with uniform classes; labels are the
/// Voronoi classes. The image is the palette rendering, then (in order)
/// boundary ink, clutter strokes and rounded, clamped Gaussian noise. Labels
/// never see the degradations.
SynthSample generate(const SynthSpec& spec, const Palette& palette);

/// Train / cross-validation / test shares; normalized to sum to 1.
struct SplitFractions {
  double train = 0.70;
  double cv = 0.15;
  double test = 0.15;

  /// Parses "a:b:c" with non-negative weights, e.g. "70:15:15" or "200:40:40".
  static SplitFractions parse(const std::string& text);
  /// Counts per partition: round(count * train), round(count * cv), rest.
  /// ArgumentError if any partition would be empty.
  std::array<std::int64_t, 3> counts(std::int64_t count) const;
};

/// Writes img_NNNN.png / lbl_NNNN.png pairs, palette.txt and manifest.txt
/// (relative paths) to `out_dir`. Sample i uses derive_seed(seed, i) and the
/// first train-count samples go to train, then cv, then test. Returns the
/// manifest with paths resolved against `out_dir`.
DatasetManifest generate_corpus(const SynthSpec& spec, std::int64_t count,
                                const SplitFractions& split, std::uint64_t seed,
                                const Palette& palette, const std::string& out_dir);

}  // namespace mapseg
