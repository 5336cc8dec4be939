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

#include "mapseg/palette.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "mapseg/error.hpp"

namespace mapseg {

namespace {

int chebyshev(Rgb a, Rgb b) {
  int d = 0;
  for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(int{a[i]} - int{b[i]}));
  return d;
}

std::string rgb_str(Rgb c) {
  return "(" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]) + ")";
}

}  // namespace

Palette::Palette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw DataError("palette: no entries");
  if (entries_.size() > 256) throw DataError("palette: more than 256 classes");
  std::sort(entries_.begin(), entries_.end(),
            [](const PaletteEntry& a, const PaletteEntry& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.index != static_cast<int>(i))
      throw DataError("palette: class indices must be contiguous from 0; missing or repeated " +
                      std::to_string(i));
    if (e.name.empty() || e.name.find_first_of(" \t\r\n") != std::string::npos)
      throw DataError("palette: class " + std::to_string(i) + " needs a name without spaces");
    for (std::size_t j = 0; j < i; ++j)
      if (entries_[j].color == e.color)
        throw DataError("palette: classes " + std::to_string(j) + " and " + std::to_string(i) +
                        " share color " + rgb_str(e.color));
  }
}

Palette Palette::parse(const std::string& text) {
  std::vector<PaletteEntry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    PaletteEntry e;
    long idx = 0, r = 0, g = 0, b = 0;
    std::string extra;
    char* end = nullptr;
    idx = std::strtol(first.c_str(), &end, 10);
    if (*end != '\0' || !(fields >> e.name >> r >> g >> b) || (fields >> extra))
      throw DataError("palette line " + std::to_string(line_no) +
                      ": expected 'index name r g b'");
    if (idx < 0 || idx > 255 || r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255)
      throw DataError("palette line " + std::to_string(line_no) + ": value out of range");
    e.index = static_cast<int>(idx);
    e.color = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
               static_cast<std::uint8_t>(b)};
    entries.push_back(std::move(e));
  }
  return Palette(std::move(entries));
}

Palette Palette::load(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return parse(std::string(bytes.begin(), bytes.end()));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

Palette Palette::default_palette() {
  return Palette({
      {0, "low_rise_exclusive_residential", {0, 128, 0}},
      {1, "mid_high_rise_exclusive_residential", {0, 255, 0}},
      {2, "residential", {255, 255, 0}},
      {3, "quasi_residential", {255, 128, 0}},
      {4, "neighborhood_commercial", {255, 0, 255}},
      {5, "commercial", {255, 0, 0}},
      {6, "quasi_industrial", {128, 0, 255}},
      {7, "industrial", {0, 0, 255}},
      {8, "exclusive_industrial", {0, 255, 255}},
      {9, "park_open_space", {128, 0, 0}},
      {10, "public_facility", {0, 0, 128}},
  });
}

std::string Palette::to_text() const {
  std::ostringstream out;
  out << "# index name r g b\n";
  for (const auto& e : entries_)
    out << e.index << ' ' << e.name << ' ' << int{e.color[0]} << ' ' << int{e.color[1]} << ' '
        << int{e.color[2]} << '\n';
  return out.str();
}

void Palette::save(const std::string& path) const {
  const std::string text = to_text();
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Palette Palette::prefix(std::size_t count) const {
  if (count < 1 || count > entries_.size())
    throw ArgumentError("palette: cannot take " + std::to_string(count) + " classes from " +
                        std::to_string(entries_.size()));
  return Palette(std::vector<PaletteEntry>(entries_.begin(), entries_.begin() + count));
}

RasterImage render_labels(const LabelMap& labels, const Palette& palette) {
  RasterImage image(labels.width, labels.height);
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const std::uint8_t l = labels.labels[i];
    if (l >= palette.size())
      throw DataError("render: label " + std::to_string(l) + " at pixel (" +
                      std::to_string(static_cast<std::int64_t>(i) % labels.width) + "," +
                      std::to_string(static_cast<std::int64_t>(i) / labels.width) +
                      ") has no palette color");
    const Rgb c = palette.color(l);
    std::copy(c.begin(), c.end(), image.pixels.begin() + 3 * static_cast<std::ptrdiff_t>(i));
  }
  return image;
}

LabelMap decode_labels(const RasterImage& image, const Palette& palette, int tolerance) {
  if (tolerance < 0) throw ArgumentError("decode_labels: tolerance must be >= 0");
  if (palette.size() == 0) throw ArgumentError("decode_labels: empty palette");
  LabelMap out(image.width, image.height);
  for (std::int64_t y = 0; y < image.height; ++y)
    for (std::int64_t x = 0; x < image.width; ++x) {
      const Rgb c = image.rgb(x, y);
      int best = -1, best_d = 1 << 30;
      bool tied = false;
      for (std::size_t k = 0; k < palette.size(); ++k) {
        const int d = chebyshev(c, palette.color(k));
        if (d < best_d) {
          best = static_cast<int>(k);
          best_d = d;
          tied = false;
        } else if (d == best_d) {
          tied = true;
        }
      }
      const std::string where = "pixel (" + std::to_string(x) + "," + std::to_string(y) + ") color " +
                                rgb_str(c);
      if (best_d > tolerance)
        throw DataError("decode_labels: " + where + " matches no palette color within tolerance " +
                        std::to_string(tolerance));
      if (tied)
        throw DataError("decode_labels: " + where + " is equidistant from several palette colors");
      out.at(x, y) = static_cast<std::uint8_t>(best);
    }
  return out;
}

}  // namespace mapseg
