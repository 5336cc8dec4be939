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

#include "mapseg/patches.hpp"

#include <algorithm>
#include <cmath>

#include "mapseg/error.hpp"

namespace mapseg {

LabeledImage load_labeled(const ManifestEntry& entry, const Palette& palette, int tolerance) {
  LabeledImage out;
  out.image = load_png(entry.image_path);
  const RasterImage label_raster = load_png(entry.label_path);
  try {
    out.labels = decode_labels(label_raster, palette, tolerance);
  } catch (const DataError& e) {
    throw DataError(entry.label_path + ": " + e.what());
  }
  if (out.labels.width != out.image.width || out.labels.height != out.image.height)
    throw DataError(entry.label_path + ": label size does not match image '" + entry.image_path +
                    "'");
  return out;
}

std::vector<LabeledImage> load_partition(const DatasetManifest& manifest, Partition partition,
                                         const Palette& palette, int tolerance) {
  const auto entries = manifest.select(partition);
  std::vector<LabeledImage> out(entries.size());
  // Entries are independent; any exception is rethrown after the loop.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < entries.size(); ++i) {
    try {
      out[i] = load_labeled(entries[i], palette, tolerance);
    } catch (...) {
#pragma omp critical(mapseg_load_partition)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Tensor image_to_tensor(const RasterImage& image, std::int64_t x0, std::int64_t y0, std::int64_t w,
                       std::int64_t h) {
  if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > image.width || y0 + h > image.height)
    throw ArgumentError("image_to_tensor: window outside the raster");
  Tensor t({1, 3, h, w});
  for (std::int64_t c = 0; c < 3; ++c) {
    float* plane = t.plane(0, c);
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x)
        plane[y * w + x] = static_cast<float>(image.at(x0 + x, y0 + y)[c]) / 255.0f;
  }
  return t;
}

LabelMap crop_labels(const LabelMap& labels, std::int64_t x0, std::int64_t y0, std::int64_t w,
                     std::int64_t h) {
  if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > labels.width || y0 + h > labels.height)
    throw ArgumentError("crop_labels: window outside the label map");
  LabelMap out(w, h);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) out.at(x, y) = labels.at(x0 + x, y0 + y);
  return out;
}

std::vector<Patch> sample_patches(const RasterImage& image, const LabelMap& labels,
                                  std::int64_t patch_size, std::int64_t count, Rng& rng) {
  if (patch_size < 1) throw ArgumentError("sample_patches: patch size must be >= 1");
  if (count < 0) throw ArgumentError("sample_patches: count must be >= 0");
  if (image.width != labels.width || image.height != labels.height)
    throw ArgumentError("sample_patches: image and labels differ in size");
  if (image.width < patch_size || image.height < patch_size)
    throw ArgumentError("sample_patches: image " + std::to_string(image.width) + "x" +
                        std::to_string(image.height) + " smaller than patch " +
                        std::to_string(patch_size));
  std::vector<Patch> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    const auto x0 = static_cast<std::int64_t>(
        rng.uniform_int(static_cast<std::uint64_t>(image.width - patch_size + 1)));
    const auto y0 = static_cast<std::int64_t>(
        rng.uniform_int(static_cast<std::uint64_t>(image.height - patch_size + 1)));
    out.push_back({image_to_tensor(image, x0, y0, patch_size, patch_size),
                   crop_labels(labels, x0, y0, patch_size, patch_size)});
  }
  return out;
}

void AugmentSpec::validate() const {
  if (!(stretch_min > 0.0) || !(stretch_min <= 1.0) || !(stretch_max >= 1.0) ||
      !std::isfinite(stretch_max))
    throw ArgumentError("augment: stretch range must satisfy 0 < min <= 1 <= max");
  if (!rotate && !flip && !stretch) throw ArgumentError("augment: no transform enabled");
}

std::vector<Transform> AugmentSpec::enabled() const {
  std::vector<Transform> out;
  if (rotate) out.insert(out.end(), {Transform::Rotate90, Transform::Rotate180, Transform::Rotate270});
  if (flip) out.insert(out.end(), {Transform::FlipHorizontal, Transform::FlipVertical});
  if (stretch) out.push_back(Transform::Stretch);
  return out;
}

namespace {

// Pure index permutations: out(x, y) = in(map(x, y)).
template <typename Map>
Patch remap(const Patch& p, Map map) {
  const std::int64_t w = p.labels.width, h = p.labels.height;
  Patch out{Tensor(p.image.shape()), LabelMap(w, h)};
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const auto [sx, sy] = map(x, y);
      out.labels.at(x, y) = p.labels.at(sx, sy);
      for (std::int64_t c = 0; c < p.image.shape().c; ++c)
        out.image.at(0, c, y, x) = p.image.at(0, c, sy, sx);
    }
  return out;
}

Patch stretch(const Patch& p, double factor) {
  const std::int64_t w = p.labels.width, h = p.labels.height;
  const double cx = 0.5 * static_cast<double>(w - 1);
  const double cy = 0.5 * static_cast<double>(h - 1);
  Patch out{Tensor(p.image.shape()), LabelMap(w, h)};
  const std::int64_t channels = p.image.shape().c;
  for (std::int64_t y = 0; y < h; ++y) {
    const double sy = std::clamp((static_cast<double>(y) - cy) / factor + cy, 0.0,
                                 static_cast<double>(h - 1));
    const auto y0 = static_cast<std::int64_t>(std::floor(sy));
    const std::int64_t y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - static_cast<double>(y0);
    const auto ny = std::min(static_cast<std::int64_t>(std::floor(sy + 0.5)), h - 1);
    for (std::int64_t x = 0; x < w; ++x) {
      const double sx = std::clamp((static_cast<double>(x) - cx) / factor + cx, 0.0,
                                   static_cast<double>(w - 1));
      const auto x0 = static_cast<std::int64_t>(std::floor(sx));
      const std::int64_t x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - static_cast<double>(x0);
      const auto nx = std::min(static_cast<std::int64_t>(std::floor(sx + 0.5)), w - 1);
      out.labels.at(x, y) = p.labels.at(nx, ny);
      for (std::int64_t c = 0; c < channels; ++c) {
        const double top = p.image.at(0, c, y0, x0) * (1.0 - fx) + p.image.at(0, c, y0, x1) * fx;
        const double bottom =
            p.image.at(0, c, y1, x0) * (1.0 - fx) + p.image.at(0, c, y1, x1) * fx;
        out.image.at(0, c, y, x) = static_cast<float>(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

}  // namespace

Patch apply_transform(const Patch& patch, Transform t, double factor, const AugmentSpec& spec) {
  const std::int64_t w = patch.labels.width, h = patch.labels.height;
  const Shape4 s = patch.image.shape();
  if (s.n != 1 || s.h != h || s.w != w)
    throw ShapeError("augment: image " + s.str() + " does not match labels " + std::to_string(w) +
                     "x" + std::to_string(h));
  using P = std::pair<std::int64_t, std::int64_t>;
  const bool rotation =
      t == Transform::Rotate90 || t == Transform::Rotate180 || t == Transform::Rotate270;
  if (rotation && w != h) throw ShapeError("augment: rotations need a square patch");
  switch (t) {
    case Transform::Rotate90:
      return remap(patch, [&](std::int64_t x, std::int64_t y) { return P{y, w - 1 - x}; });
    case Transform::Rotate180:
      return remap(patch, [&](std::int64_t x, std::int64_t y) { return P{w - 1 - x, h - 1 - y}; });
    case Transform::Rotate270:
      return remap(patch, [&](std::int64_t x, std::int64_t y) { return P{h - 1 - y, x}; });
    case Transform::FlipHorizontal:
      return remap(patch, [&](std::int64_t x, std::int64_t y) { return P{w - 1 - x, y}; });
    case Transform::FlipVertical:
      return remap(patch, [&](std::int64_t x, std::int64_t y) { return P{x, h - 1 - y}; });
    case Transform::Stretch:
      if (!(factor >= spec.stretch_min && factor <= spec.stretch_max))
        throw ArgumentError("augment: stretch factor " + std::to_string(factor) +
                            " outside [" + std::to_string(spec.stretch_min) + ", " +
                            std::to_string(spec.stretch_max) + "]");
      return stretch(patch, factor);
  }
  throw ArgumentError("augment: unknown transform");
}

Patch augment(const Patch& patch, const AugmentSpec& spec, Rng& rng) {
  spec.validate();
  const auto kinds = spec.enabled();
  const Transform t = kinds[rng.uniform_int(kinds.size())];
  const double factor =
      t == Transform::Stretch ? rng.uniform(spec.stretch_min, spec.stretch_max) : 1.0;
  return apply_transform(patch, t, factor, spec);
}

std::int64_t augmented_count(std::int64_t base, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ArgumentError("augment fraction must lie in [0, 1]");
  if (base < 0) throw ArgumentError("augmented_count: negative base count");
  const double v = fraction * static_cast<double>(base);
  const double nearest = std::nearbyint(v);
  // Guard against representation error such as 0.1 * 30 = 3.0000000000000004.
  if (std::abs(v - nearest) < 1e-9) return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::ceil(v));
}

std::vector<Patch> build_epoch(std::span<const LabeledImage> images, const EpochSpec& spec,
                               Rng& rng) {
  if (images.empty()) throw DataError("build_epoch: the training partition is empty");
  if (spec.patches_per_image < 1) throw ArgumentError("build_epoch: patches_per_image must be >= 1");
  const std::int64_t extras = augmented_count(
      static_cast<std::int64_t>(images.size()) * spec.patches_per_image, spec.augment_fraction);
  if (extras > 0) spec.augment.validate();

  std::vector<Patch> out;
  for (const auto& li : images) {
    auto base = sample_patches(li.image, li.labels, spec.patch_size, spec.patches_per_image, rng);
    std::move(base.begin(), base.end(), std::back_inserter(out));
  }
  const std::size_t base_count = out.size();
  for (std::int64_t i = 0; i < extras; ++i) {
    const auto src = rng.uniform_int(base_count);
    out.push_back(augment(out[src], spec.augment, rng));
  }
  for (std::size_t i = out.size(); i > 1; --i) {
    const auto j = rng.uniform_int(i);
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

std::vector<Patch> build_epoch(const DatasetManifest& manifest, const Palette& palette,
                               int tolerance, const EpochSpec& spec, Rng& rng) {
  const auto images = load_partition(manifest, Partition::Train, palette, tolerance);
  return build_epoch(images, spec, rng);
}

void make_batch(std::span<const Patch> patches, Tensor& images, std::vector<std::uint8_t>& labels) {
  if (patches.empty()) throw ArgumentError("make_batch: no patches");
  const Shape4 s = patches.front().image.shape();
  if (s.n != 1) throw ShapeError("make_batch: patch images must hold one sample");
  images = Tensor({static_cast<std::int64_t>(patches.size()), s.c, s.h, s.w});
  labels.clear();
  labels.reserve(patches.size() * static_cast<std::size_t>(s.h * s.w));
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const Patch& p = patches[i];
    if (!(p.image.shape() == s) || p.labels.pixel_count() != static_cast<std::size_t>(s.h * s.w))
      throw ShapeError("make_batch: patches differ in shape");
    std::copy(p.image.data().begin(), p.image.data().end(),
              images.sample(static_cast<std::int64_t>(i)));
    labels.insert(labels.end(), p.labels.labels.begin(), p.labels.labels.end());
  }
}

}  // namespace mapseg
