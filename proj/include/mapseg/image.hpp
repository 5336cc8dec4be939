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
#include <span>
#include <string>
#include <vector>

namespace mapseg {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB raster, row-major, three bytes per pixel.
struct RasterImage {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(std::int64_t w, std::int64_t h, Rgb fill = {0, 0, 0});

  std::size_t pixel_count() const { return static_cast<std::size_t>(width * height); }
  std::uint8_t* at(std::int64_t x, std::int64_t y) {
    return pixels.data() + 3 * static_cast<std::size_t>(y * width + x);
  }
  const std::uint8_t* at(std::int64_t x, std::int64_t y) const {
    return pixels.data() + 3 * static_cast<std::size_t>(y * width + x);
  }
  Rgb rgb(std::int64_t x, std::int64_t y) const {
    const auto* p = at(x, y);
    return {p[0], p[1], p[2]};
  }
  void set(std::int64_t x, std::int64_t y, Rgb c) {
    auto* p = at(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  bool operator==(const RasterImage&) const = default;
};

/// 2-D grid of class indices, row-major.
struct LabelMap {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> labels;

  LabelMap() = default;
  LabelMap(std::int64_t w, std::int64_t h, std::uint8_t fill = 0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width * height); }
  std::uint8_t& at(std::int64_t x, std::int64_t y) {
    return labels[static_cast<std::size_t>(y * width + x)];
  }
  std::uint8_t at(std::int64_t x, std::int64_t y) const {
    return labels[static_cast<std::size_t>(y * width + x)];
  }

  bool operator==(const LabelMap&) const = default;
};

/// Decodes a PNG from memory into 8-bit RGB. Gray, palette, 16-bit and alpha
/// inputs are converted (alpha is dropped). Throws IoError carrying the byte
/// offset at which decoding failed; no partial image is ever returned.
RasterImage decode_png(std::span<const std::uint8_t> bytes);

/// Encodes 8-bit RGB as PNG with fixed settings and no timestamp chunks, so
/// identical images always produce identical bytes.
std::vector<std::uint8_t> encode_png(const RasterImage& image);

/// Encodes an 8-bit single-channel raster (width*height bytes) as gray PNG.
std::vector<std::uint8_t> encode_png_gray(std::int64_t width, std::int64_t height,
                                          std::span<const std::uint8_t> values);

RasterImage load_png(const std::string& path);
void save_png(const RasterImage& image, const std::string& path);
void save_png_gray(std::int64_t width, std::int64_t height, std::span<const std::uint8_t> values,
                   const std::string& path);

/// Whole-file helpers that throw IoError with the path on failure.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace mapseg
