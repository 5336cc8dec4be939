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

/// Binary raster; every value is 0 or 1.
struct BinaryMask {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> values;

  BinaryMask() = default;
  BinaryMask(std::int64_t w, std::int64_t h, std::uint8_t fill = 0)
      : width(w), height(h), values(static_cast<std::size_t>(w * h), fill) {}

  std::uint8_t at(std::int64_t x, std::int64_t y) const {
    return values[static_cast<std::size_t>(y * width + x)];
  }
  std::uint8_t& at(std::int64_t x, std::int64_t y) {
    return values[static_cast<std::size_t>(y * width + x)];
  }
  bool operator==(const BinaryMask&) const = default;
};

BinaryMask class_mask(const LabelMap& labels, std::uint8_t cls);
BinaryMask complement(const BinaryMask& m);

enum class ElementShape { Square, Cross };

/// Centred k x k window (square) or its middle row and column (cross).
struct StructuringElement {
  int k = 3;
  ElementShape shape = ElementShape::Square;

  void validate() const;  // ArgumentError unless k is odd and >= 1
};

// Window operations read outside the raster by replicating the border.
BinaryMask erode(const BinaryMask& m, const StructuringElement& se);
BinaryMask dilate(const BinaryMask& m, const StructuringElement& se);
BinaryMask open(const BinaryMask& m, const StructuringElement& se);
BinaryMask close(const BinaryMask& m, const StructuringElement& se);

/// Most frequent label in each k x k window. Ties keep the centre label when
/// it is among the most frequent, otherwise the lowest tied index.
LabelMap mode_filter(const LabelMap& labels, int k);

enum class PostOpKind { Mode, Open, Close };

struct PostOp {
  PostOpKind kind = PostOpKind::Mode;
  int k = 3;
  bool operator==(const PostOp&) const = default;
};

/// Per-class opening or closing of a label map. Each class mask (ascending
/// index) is opened or closed with a k x k square; a pixel claimed by exactly
/// one class takes it. Pixels claimed by no class or by several take the
/// most frequent label among the claimants (all classes when unclaimed) in
/// their 3 x 3 neighbourhood of the input, with the mode filter's tie rule.
LabelMap morph_labels(const LabelMap& labels, PostOpKind kind, int k);

/// Ordered list of operations, written as e.g. "mode:3,open:3,close:3".
struct PostPolicy {
  std::vector<PostOp> ops;

  /// "" or "none" is the empty policy. ArgumentError on malformed specs.
  static PostPolicy parse(const std::string& spec);
  static PostPolicy default_policy();
  std::string str() const;
  bool operator==(const PostPolicy&) const = default;
};

LabelMap denoise_labels(const LabelMap& labels, const PostPolicy& policy);

}  // namespace mapseg
