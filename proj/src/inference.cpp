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

#include "mapseg/inference.hpp"

#include <algorithm>

#include "mapseg/error.hpp"
#include "mapseg/patches.hpp"

namespace mapseg {

std::vector<std::int64_t> tile_starts(std::int64_t extent, std::int64_t tile_size,
                                      std::int64_t overlap) {
  if (tile_size < 1) throw ArgumentError("tiling: tile size must be >= 1");
  if (overlap < 0 || overlap >= tile_size)
    throw ArgumentError("tiling: overlap must lie in [0, tile size)");
  if (extent < tile_size)
    throw ArgumentError("tiling: raster extent " + std::to_string(extent) +
                        " is smaller than the tile size " + std::to_string(tile_size));
  const std::int64_t stride = tile_size - overlap;
  std::vector<std::int64_t> starts;
  for (std::int64_t s = 0;; s += stride) {
    if (s + tile_size >= extent) {
      starts.push_back(extent - tile_size);
      break;
    }
    starts.push_back(s);
  }
  return starts;
}

TilingPlan plan_tiles(std::int64_t width, std::int64_t height, std::int64_t tile_size,
                      std::int64_t overlap) {
  TilingPlan plan{width, height, tile_size, overlap, {}};
  const auto xs = tile_starts(width, tile_size, overlap);
  const auto ys = tile_starts(height, tile_size, overlap);
  for (auto y : ys)
    for (auto x : xs) plan.tiles.push_back({x, y});
  return plan;
}

ProbabilityMap predict_map(const UNet& model, const RasterImage& image, const TilingPlan& plan,
                           std::int64_t batch_size) {
  const UNetConfig& cfg = model.config();
  if (cfg.input_channels != 3)
    throw ConfigError("predict: model expects " + std::to_string(cfg.input_channels) +
                      " input channels, images are RGB");
  if (cfg.patch_size != plan.tile_size)
    throw ConfigError("predict: tile size " + std::to_string(plan.tile_size) +
                      " differs from the model patch size " + std::to_string(cfg.patch_size));
  if (plan.width != image.width || plan.height != image.height)
    throw ArgumentError("predict: tiling plan does not match the image size");
  if (batch_size < 1) throw ArgumentError("predict: batch size must be >= 1");

  const std::int64_t classes = cfg.num_classes;
  const std::int64_t t = plan.tile_size;
  const auto plane = static_cast<std::size_t>(image.width * image.height);
  std::vector<double> sum(static_cast<std::size_t>(classes) * plane, 0.0);
  std::vector<std::int32_t> hits(plane, 0);

  for (std::size_t first = 0; first < plan.tiles.size(); first += static_cast<std::size_t>(batch_size)) {
    const std::size_t last = std::min(plan.tiles.size(), first + static_cast<std::size_t>(batch_size));
    Tensor batch({static_cast<std::int64_t>(last - first), 3, t, t});
    for (std::size_t i = first; i < last; ++i) {
      const Tensor tile = image_to_tensor(image, plan.tiles[i].x, plan.tiles[i].y, t, t);
      std::copy(tile.data().begin(), tile.data().end(),
                batch.sample(static_cast<std::int64_t>(i - first)));
    }
    const Tensor probs = nn::softmax_channels(infer(model, batch));
    for (std::size_t i = first; i < last; ++i) {
      const auto n = static_cast<std::int64_t>(i - first);
      const TileRect r = plan.tiles[i];
      for (std::int64_t y = 0; y < t; ++y)
        for (std::int64_t x = 0; x < t; ++x) {
          const auto p = static_cast<std::size_t>((r.y + y) * image.width + r.x + x);
          ++hits[p];
          for (std::int64_t c = 0; c < classes; ++c)
            sum[static_cast<std::size_t>(c) * plane + p] += probs.at(n, c, y, x);
        }
    }
  }

  ProbabilityMap out{image.width, image.height, classes,
                     std::vector<float>(static_cast<std::size_t>(classes) * plane)};
  for (std::size_t p = 0; p < plane; ++p) {
    if (hits[p] == 0) throw StateError("predict: tiling plan leaves a pixel uncovered");
    if (hits[p] == 1) {
      // A single contribution is already a distribution; keep it bit-exact.
      for (std::int64_t c = 0; c < classes; ++c)
        out.probs[static_cast<std::size_t>(c) * plane + p] =
            static_cast<float>(sum[static_cast<std::size_t>(c) * plane + p]);
      continue;
    }
    double total = 0.0;
    for (std::int64_t c = 0; c < classes; ++c) total += sum[static_cast<std::size_t>(c) * plane + p];
    for (std::int64_t c = 0; c < classes; ++c)
      out.probs[static_cast<std::size_t>(c) * plane + p] =
          static_cast<float>(sum[static_cast<std::size_t>(c) * plane + p] / total);
  }
  return out;
}

LabelMap argmax_labels(const ProbabilityMap& probs) {
  if (probs.classes < 1) throw ArgumentError("argmax: no classes");
  LabelMap out(probs.width, probs.height);
  for (std::int64_t y = 0; y < probs.height; ++y)
    for (std::int64_t x = 0; x < probs.width; ++x) {
      std::int64_t best = 0;
      float best_p = probs.at(0, x, y);
      for (std::int64_t c = 1; c < probs.classes; ++c)
        if (probs.at(c, x, y) > best_p) {
          best = c;
          best_p = probs.at(c, x, y);
        }
      out.at(x, y) = static_cast<std::uint8_t>(best);
    }
  return out;
}

LabelMap segment(const UNet& model, const RasterImage& image, std::int64_t overlap) {
  const auto plan = plan_tiles(image.width, image.height, model.config().patch_size, overlap);
  return argmax_labels(predict_map(model, image, plan));
}

}  // namespace mapseg
