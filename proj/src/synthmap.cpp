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

#include "mapseg/synthmap.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "mapseg/error.hpp"
#include "mapseg/rng.hpp"

namespace mapseg {

void SynthSpec::validate(std::size_t palette_size) const {
  if (width < 16 || height < 16) throw ArgumentError("synthmap: width and height must be >= 16");
  if (width > (1 << 15) || height > (1 << 15)) throw ArgumentError("synthmap: raster too large");
  if (num_regions < 1) throw ArgumentError("synthmap: num_regions must be >= 1");
  if (num_regions > width * height) throw ArgumentError("synthmap: more regions than pixels");
  if (num_classes < 1 || num_classes > static_cast<std::int64_t>(palette_size))
    throw ArgumentError("synthmap: num_classes must lie in [1, " + std::to_string(palette_size) +
                        "] for this palette");
  if (!(noise_stddev >= 0.0) || !std::isfinite(noise_stddev))
    throw ArgumentError("synthmap: noise_stddev must be finite and >= 0");
  if (clutter_strokes < 0) throw ArgumentError("synthmap: clutter_strokes must be >= 0");
}

std::vector<std::int32_t> voronoi_regions(std::int64_t width, std::int64_t height,
                                          const std::vector<SeedPoint>& seeds) {
  if (seeds.empty()) throw ArgumentError("voronoi: no seeds");
  std::vector<std::int32_t> region(static_cast<std::size_t>(width * height));
#pragma omp parallel for schedule(static) if (width * height > (1 << 16))
  for (std::int64_t y = 0; y < height; ++y)
    for (std::int64_t x = 0; x < width; ++x) {
      std::int32_t best = 0;
      std::int64_t best_d = -1;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const std::int64_t dx = x - seeds[s].x, dy = y - seeds[s].y;
        const std::int64_t d = dx * dx + dy * dy;
        if (best_d < 0 || d < best_d) {  // strict: ties keep the lower index
          best = static_cast<std::int32_t>(s);
          best_d = d;
        }
      }
      region[static_cast<std::size_t>(y * width + x)] = best;
    }
  return region;
}

namespace {

void plot(RasterImage& img, std::int64_t x, std::int64_t y) {
  if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, kInkColor);
}

// Bresenham line, endpoints inclusive, clipped per pixel.
void draw_line(RasterImage& img, std::int64_t x0, std::int64_t y0, std::int64_t x1,
               std::int64_t y1) {
  const std::int64_t dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const std::int64_t dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  std::int64_t err = dx + dy;
  for (;;) {
    plot(img, x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const std::int64_t e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

SynthSample generate(const SynthSpec& spec, const Palette& palette) {
  spec.validate(palette.size());
  Rng rng(spec.seed);
  SynthSample out;
  out.seed = spec.seed;
  const std::int64_t w = spec.width, h = spec.height;
  for (std::int64_t i = 0; i < spec.num_regions; ++i) {
    SeedPoint p;
    p.x = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(w)));
    p.y = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(h)));
    p.cls = static_cast<std::uint8_t>(rng.uniform_int(static_cast<std::uint64_t>(spec.num_classes)));
    out.seeds.push_back(p);
  }
  const auto region = voronoi_regions(w, h, out.seeds);
  out.labels = LabelMap(w, h);
  for (std::size_t i = 0; i < region.size(); ++i)
    out.labels.labels[i] = out.seeds[static_cast<std::size_t>(region[i])].cls;
  out.image = render_labels(out.labels, palette);

  if (spec.boundary_ink) {
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        const auto r = region[static_cast<std::size_t>(y * w + x)];
        const bool right = x + 1 < w && region[static_cast<std::size_t>(y * w + x + 1)] != r;
        const bool below = y + 1 < h && region[static_cast<std::size_t>((y + 1) * w + x)] != r;
        if (right || below) out.image.set(x, y, kInkColor);
      }
  }

  for (std::int64_t s = 0; s < spec.clutter_strokes; ++s) {
    std::int64_t x = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(w)));
    std::int64_t y = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(h)));
    const auto segments = 2 + static_cast<int>(rng.uniform_int(3));
    for (int k = 0; k < segments; ++k) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double length = 4.0 + static_cast<double>(rng.uniform_int(9));
      const auto nx = x + static_cast<std::int64_t>(std::floor(length * std::cos(angle) + 0.5));
      const auto ny = y + static_cast<std::int64_t>(std::floor(length * std::sin(angle) + 0.5));
      draw_line(out.image, x, y, nx, ny);
      x = nx;
      y = ny;
    }
  }

  if (spec.noise_stddev > 0.0) {
    for (auto& b : out.image.pixels) {
      const double v = std::floor(static_cast<double>(b) + spec.noise_stddev * rng.normal() + 0.5);
      b = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

SplitFractions SplitFractions::parse(const std::string& text) {
  std::istringstream in(text);
  std::string part;
  std::vector<double> values;
  while (std::getline(in, part, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (part.empty() || used != part.size() || !(v >= 0.0) || !std::isfinite(v))
      throw ArgumentError("split: expected three non-negative numbers 'train:cv:test', got '" +
                          text + "'");
    values.push_back(v);
  }
  if (values.size() != 3)
    throw ArgumentError("split: expected three parts 'train:cv:test', got '" + text + "'");
  const double total = values[0] + values[1] + values[2];
  if (!(total > 0.0)) throw ArgumentError("split: weights sum to zero");
  return {values[0] / total, values[1] / total, values[2] / total};
}

std::array<std::int64_t, 3> SplitFractions::counts(std::int64_t count) const {
  if (!(train > 0.0 && cv > 0.0 && test > 0.0))
    throw ArgumentError("split: every fraction must be positive");
  const double total = train + cv + test;
  const auto n = static_cast<double>(count);
  const std::int64_t n_train = std::llround(n * train / total);
  const std::int64_t n_cv = std::llround(n * cv / total);
  const std::int64_t n_test = count - n_train - n_cv;
  if (n_train < 1 || n_cv < 1 || n_test < 1)
    throw ArgumentError("split: " + std::to_string(count) +
                        " samples leave a partition empty; use more samples");
  return {n_train, n_cv, n_test};
}

DatasetManifest generate_corpus(const SynthSpec& spec, std::int64_t count,
                                const SplitFractions& split, std::uint64_t seed,
                                const Palette& palette, const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (count < 3) throw ArgumentError("corpus: count must be >= 3");
  spec.validate(palette.size());
  const auto counts = split.counts(count);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("corpus: cannot create '" + out_dir + "': " + ec.message());

  DatasetManifest relative;
  for (std::int64_t i = 0; i < count; ++i) {
    char img[32], lbl[32];
    std::snprintf(img, sizeof img, "img_%04lld.png", static_cast<long long>(i));
    std::snprintf(lbl, sizeof lbl, "lbl_%04lld.png", static_cast<long long>(i));
    const Partition part = i < counts[0]               ? Partition::Train
                           : i < counts[0] + counts[1] ? Partition::CrossValidation
                                                       : Partition::Test;
    relative.entries.push_back({part, img, lbl});
  }

  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      SynthSpec s = spec;
      s.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
      const SynthSample sample = generate(s, palette);
      const auto& e = relative.entries[static_cast<std::size_t>(i)];
      save_png(sample.image, (fs::path(out_dir) / e.image_path).string());
      save_png(render_labels(sample.labels, palette), (fs::path(out_dir) / e.label_path).string());
    } catch (...) {
#pragma omp critical(mapseg_generate_corpus)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  palette.save((fs::path(out_dir) / "palette.txt").string());
  relative.save((fs::path(out_dir) / "manifest.txt").string());
  return DatasetManifest::parse(relative.to_text(), out_dir);
}

}  // namespace mapseg
