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

// Brute-force label-map checkers shared by the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mapseg/image.hpp"
#include "mapseg/rng.hpp"
#include "mapseg/synthmap.hpp"

namespace mapseg::testing {

/// Mode filter by explicit per-window histogram with replicated borders.
inline LabelMap mode_oracle(const LabelMap& l, int k) {
  LabelMap out(l.width, l.height);
  const int r = k / 2;
  for (std::int64_t y = 0; y < l.height; ++y)
    for (std::int64_t x = 0; x < l.width; ++x) {
      std::array<int, 256> hist{};
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
          ++hist[l.at(std::clamp<std::int64_t>(x + dx, 0, l.width - 1),
                      std::clamp<std::int64_t>(y + dy, 0, l.height - 1))];
      const int top = *std::max_element(hist.begin(), hist.end());
      std::uint8_t pick = l.at(x, y);
      if (hist[pick] != top)
        pick = static_cast<std::uint8_t>(std::find(hist.begin(), hist.end(), top) - hist.begin());
      out.at(x, y) = pick;
    }
  return out;
}

/// Class of the nearest seed by exhaustive scan, ties to the lowest index.
inline LabelMap voronoi_oracle(std::int64_t w, std::int64_t h,
                               const std::vector<SeedPoint>& seeds) {
  LabelMap out(w, h);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      double best = 1e300;
      std::size_t pick = 0;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const double d = std::hypot(double(x - seeds[s].x), double(y - seeds[s].y));
        if (d < best) {
          best = d;
          pick = s;
        }
      }
      out.at(x, y) = seeds[pick].cls;
    }
  return out;
}

/// Replaces `fraction` of the pixels (chosen uniformly without replacement)
/// with a different, uniformly chosen class. Returns the touched indices.
inline std::vector<std::size_t> corrupt_labels(LabelMap& l, double fraction, int classes,
                                               Rng& rng) {
  const auto n = l.labels.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  order.resize(static_cast<std::size_t>(fraction * static_cast<double>(n)));
  for (auto i : order) {
    const auto shift = 1 + rng.uniform_int(static_cast<std::uint64_t>(classes - 1));
    l.labels[i] =
        static_cast<std::uint8_t>((l.labels[i] + shift) % static_cast<std::uint64_t>(classes));
  }
  return order;
}

}  // namespace mapseg::testing
