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
#include <string>
#include <vector>

#include "mapseg/image.hpp"

namespace mapseg {

struct PaletteEntry {
  int index = 0;
  std::string name;
  Rgb color{};

  bool operator==(const PaletteEntry&) const = default;
};

/// Bijection between class index and RGB color.
class Palette {
 public:
  Palette() = default;
  /// Validates: indices contiguous from 0 in any input order, at most 256
  /// classes, names non-empty without whitespace, colors pairwise distinct.
  explicit Palette(std::vector<PaletteEntry> entries);

  /// Text format: one `index name r g b` per line; '#' starts a comment.
  static Palette parse(const std::string& text);
  static Palette load(const std::string& path);
  /// Eleven land-use classes with colors from {0,128,255}^3 (black and white
  /// excluded), pairwise Chebyshev distance >= 127.
  static Palette default_palette();

  std::string to_text() const;
  void save(const std::string& path) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<PaletteEntry>& entries() const { return entries_; }
  const PaletteEntry& operator[](std::size_t i) const { return entries_[i]; }
  Rgb color(std::size_t index) const { return entries_[index].color; }

  /// First `count` classes as their own palette; ArgumentError if too few.
  Palette prefix(std::size_t count) const;

  bool operator==(const Palette&) const = default;

 private:
  std::vector<PaletteEntry> entries_;
};

/// Renders labels through the palette; DataError on a label without a color.
RasterImage render_labels(const LabelMap& labels, const Palette& palette);

/// Maps every pixel to the nearest palette color by Chebyshev distance,
/// provided it lies within `tolerance`. A pixel with no color within the
/// tolerance, or with two colors tied at the nearest distance, is a DataError
/// naming the pixel.
LabelMap decode_labels(const RasterImage& image, const Palette& palette, int tolerance);

}  // namespace mapseg
