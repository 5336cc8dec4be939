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
#include <span>
#include <vector>

#include "mapseg/image.hpp"
#include "mapseg/manifest.hpp"
#include "mapseg/palette.hpp"
#include "mapseg/rng.hpp"
#include "mapseg/tensor.hpp"

namespace mapseg {

/// One training example: image as a (1, 3, P, P) tensor in [0, 1] and its
/// aligned P x P labels.
struct Patch {
  Tensor image;
  LabelMap labels;

  bool operator==(const Patch&) const = default;
};

struct LabeledImage {
  RasterImage image;
  LabelMap labels;
};

/// Loads both rasters of a manifest entry and decodes the label raster.
LabeledImage load_labeled(const ManifestEntry& entry, const Palette& palette, int tolerance);
std::vector<LabeledImage> load_partition(const DatasetManifest& manifest, Partition partition,
                                         const Palette& palette, int tolerance);

/// (1, 3, h, w) tensor of the window at (x0, y0), each byte divided by 255.
Tensor image_to_tensor(const RasterImage& image, std::int64_t x0, std::int64_t y0,
                       std::int64_t w, std::int64_t h);
LabelMap crop_labels(const LabelMap& labels, std::int64_t x0, std::int64_t y0, std::int64_t w,
                     std::int64_t h);

/// `count` patches with uniformly random top-left corners (x drawn before y).
std::vector<Patch> sample_patches(const RasterImage& image, const LabelMap& labels,
                                  std::int64_t patch_size, std::int64_t count, Rng& rng);

enum class Transform { Rotate90, Rotate180, Rotate270, FlipHorizontal, FlipVertical, Stretch };

struct AugmentSpec {
  bool rotate = true;
  bool flip = true;
  bool stretch = true;
  double stretch_min = 0.8;
  double stretch_max = 1.25;

  /// Throws ArgumentError on an empty or inverted range or a range that
  /// excludes 1.
  void validate() const;
  std::vector<Transform> enabled() const;
};

/// Rotations turn clockwise. Stretch scales both axes by `factor` about the
/// patch centre, then crops (factor > 1) or replicates the border
/// (factor < 1) back to the original size; the image is resampled bilinearly
/// and the labels by nearest neighbour from the same source coordinates.
/// Rotations need a square patch. A stretch factor outside the spec's range is
/// an ArgumentError.
Patch apply_transform(const Patch& patch, Transform t, double factor, const AugmentSpec& spec);

/// Picks one enabled transform uniformly (and a uniform factor for stretch).
Patch augment(const Patch& patch, const AugmentSpec& spec, Rng& rng);

struct EpochSpec {
  std::int64_t patch_size = 128;
  std::int64_t patches_per_image = 1;
  double augment_fraction = 0.10;
  AugmentSpec augment;
};

/// Number of augmented extras for `base` patches: ceil(fraction * base).
std::int64_t augmented_count(std::int64_t base, double fraction);

/// Base patches from every image (in order), plus augmented copies of
/// uniformly chosen base patches, all shuffled by `rng`.
std::vector<Patch> build_epoch(std::span<const LabeledImage> images, const EpochSpec& spec,
                               Rng& rng);
std::vector<Patch> build_epoch(const DatasetManifest& manifest, const Palette& palette,
                               int tolerance, const EpochSpec& spec, Rng& rng);

/// Stacks patches into an (n, 3, P, P) batch and an n*P*P label vector.
void make_batch(std::span<const Patch> patches, Tensor& images, std::vector<std::uint8_t>& labels);

}  // namespace mapseg
