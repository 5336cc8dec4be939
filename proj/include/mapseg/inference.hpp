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
#include <vector>

#include "mapseg/image.hpp"
#include "mapseg/unet.hpp"

namespace mapseg {

struct TileRect {
  std::int64_t x = 0;
  std::int64_t y = 0;
  bool operator==(const TileRect&) const = default;
};

/// Square tiles of `tile_size` covering a raster. Tiles start every
/// tile_size - overlap pixels; the last row and column are shifted flush with
/// the border.
struct TilingPlan {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::int64_t tile_size = 0;
  std::int64_t overlap = 0;
  std::vector<TileRect> tiles;  // row-major order
};

/// Tile origins along one axis of length `extent`.
std::vector<std::int64_t> tile_starts(std::int64_t extent, std::int64_t tile_size,
                                      std::int64_t overlap);

/// ArgumentError if the raster is smaller than a tile or overlap is not in
/// [0, tile_size).
TilingPlan plan_tiles(std::int64_t width, std::int64_t height, std::int64_t tile_size,
                      std::int64_t overlap);

/// Per-pixel class probabilities, stored as C planes of height x width.
struct ProbabilityMap {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::int64_t classes = 0;
  std::vector<float> probs;

  float at(std::int64_t c, std::int64_t x, std::int64_t y) const {
    return probs[static_cast<std::size_t>((c * height + y) * width + x)];
  }
  float& at(std::int64_t c, std::int64_t x, std::int64_t y) {
    return probs[static_cast<std::size_t>((c * height + y) * width + x)];
  }
  bool operator==(const ProbabilityMap&) const = default;
};

/// Softmax probabilities of every tile, averaged with equal weight where
/// tiles overlap and renormalized per pixel. Tiles run through the network in
/// batches of `batch_size`; blending accumulates in tile order, so the result
/// does not depend on batching or thread count. ConfigError if the model
/// does not take RGB tiles of the plan's size.
ProbabilityMap predict_map(const UNet& model, const RasterImage& image, const TilingPlan& plan,
                           std::int64_t batch_size = 8);

/// Per-pixel argmax; ties go to the lowest class index.
LabelMap argmax_labels(const ProbabilityMap& probs);

/// Convenience: plan with the model's patch size and `overlap`, predict, argmax.
LabelMap segment(const UNet& model, const RasterImage& image, std::int64_t overlap);

}  // namespace mapseg
