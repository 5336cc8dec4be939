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

#include "mapseg/postprocess.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include "mapseg/error.hpp"

namespace mapseg {

BinaryMask class_mask(const LabelMap& labels, std::uint8_t cls) {
  BinaryMask m(labels.width, labels.height);
  for (std::size_t i = 0; i < labels.labels.size(); ++i) m.values[i] = labels.labels[i] == cls;
  return m;
}

BinaryMask complement(const BinaryMask& m) {
  BinaryMask out = m;
  for (auto& v : out.values) v = v ? 0 : 1;
  return out;
}

void StructuringElement::validate() const {
  if (k < 1 || k % 2 == 0)
    throw ArgumentError("structuring element size must be odd and >= 1, got " + std::to_string(k));
}

namespace {

std::int64_t clamp_index(std::int64_t v, std::int64_t n) { return std::clamp<std::int64_t>(v, 0, n - 1); }

// min (erode) or max (dilate) over the element with replicated borders.
BinaryMask window_extreme(const BinaryMask& m, const StructuringElement& se, bool take_max) {
  se.validate();
  const std::int64_t r = se.k / 2;
  BinaryMask out(m.width, m.height);
#pragma omp parallel for schedule(static) if (m.values.size() > (1u << 16))
  for (std::int64_t y = 0; y < m.height; ++y)
    for (std::int64_t x = 0; x < m.width; ++x) {
      std::uint8_t acc = take_max ? 0 : 1;
      for (std::int64_t dy = -r; dy <= r; ++dy)
        for (std::int64_t dx = -r; dx <= r; ++dx) {
          if (se.shape == ElementShape::Cross && dx != 0 && dy != 0) continue;
          const std::uint8_t v = m.at(clamp_index(x + dx, m.width), clamp_index(y + dy, m.height));
          acc = take_max ? std::max(acc, v) : std::min(acc, v);
        }
      out.at(x, y) = acc;
    }
  return out;
}

// Most frequent label among `allowed` in the k x k window around (x, y);
// ties keep the centre label if tied, else the lowest index.
std::uint8_t window_mode(const LabelMap& labels, std::int64_t x, std::int64_t y, int k,
                         const std::array<bool, 256>* allowed) {
  std::array<int, 256> counts{};
  const std::int64_t r = k / 2;
  for (std::int64_t dy = -r; dy <= r; ++dy)
    for (std::int64_t dx = -r; dx <= r; ++dx)
      ++counts[labels.at(clamp_index(x + dx, labels.width), clamp_index(y + dy, labels.height))];
  const std::uint8_t centre = labels.at(x, y);
  int best = -1, best_count = -1;
  for (int c = 0; c < 256; ++c) {
    if (allowed != nullptr && !(*allowed)[static_cast<std::size_t>(c)]) continue;
    if (counts[static_cast<std::size_t>(c)] > best_count) {
      best = c;
      best_count = counts[static_cast<std::size_t>(c)];
    }
  }
  const bool centre_allowed = allowed == nullptr || (*allowed)[centre];
  if (centre_allowed && counts[centre] == best_count) return centre;
  return static_cast<std::uint8_t>(best);
}

}  // namespace

BinaryMask erode(const BinaryMask& m, const StructuringElement& se) {
  return window_extreme(m, se, false);
}

BinaryMask dilate(const BinaryMask& m, const StructuringElement& se) {
  return window_extreme(m, se, true);
}

BinaryMask open(const BinaryMask& m, const StructuringElement& se) { return dilate(erode(m, se), se); }

BinaryMask close(const BinaryMask& m, const StructuringElement& se) { return erode(dilate(m, se), se); }

LabelMap mode_filter(const LabelMap& labels, int k) {
  if (k < 3 || k % 2 == 0)
    throw ArgumentError("mode filter size must be odd and >= 3, got " + std::to_string(k));
  LabelMap out(labels.width, labels.height);
#pragma omp parallel for schedule(static) if (labels.labels.size() > (1u << 14))
  for (std::int64_t y = 0; y < labels.height; ++y)
    for (std::int64_t x = 0; x < labels.width; ++x)
      out.at(x, y) = window_mode(labels, x, y, k, nullptr);
  return out;
}

LabelMap morph_labels(const LabelMap& labels, PostOpKind kind, int k) {
  if (kind == PostOpKind::Mode) return mode_filter(labels, k);
  const StructuringElement se{k, ElementShape::Square};
  se.validate();
  std::array<bool, 256> present{};
  for (auto l : labels.labels) present[l] = true;

  const std::size_t n = labels.labels.size();
  std::vector<std::uint16_t> claims(n, 0);
  std::vector<std::uint8_t> first(n, 0);
  std::vector<std::vector<std::uint8_t>> claimed_by(256);
  for (int c = 0; c < 256; ++c) {
    if (!present[static_cast<std::size_t>(c)]) continue;
    const auto mask = class_mask(labels, static_cast<std::uint8_t>(c));
    auto processed = kind == PostOpKind::Open ? open(mask, se) : close(mask, se);
    for (std::size_t i = 0; i < n; ++i)
      if (processed.values[i]) {
        if (claims[i]++ == 0) first[i] = static_cast<std::uint8_t>(c);
      }
    claimed_by[static_cast<std::size_t>(c)] = std::move(processed.values);
  }

  LabelMap out(labels.width, labels.height);
  for (std::int64_t y = 0; y < labels.height; ++y)
    for (std::int64_t x = 0; x < labels.width; ++x) {
      const auto i = static_cast<std::size_t>(y * labels.width + x);
      if (claims[i] == 1) {
        out.labels[i] = first[i];
        continue;
      }
      std::array<bool, 256> allowed{};
      if (claims[i] == 0) {
        allowed.fill(true);
      } else {
        for (int c = 0; c < 256; ++c)
          allowed[static_cast<std::size_t>(c)] =
              present[static_cast<std::size_t>(c)] && claimed_by[static_cast<std::size_t>(c)][i];
      }
      out.labels[i] = window_mode(labels, x, y, 3, &allowed);
    }
  return out;
}

PostPolicy PostPolicy::parse(const std::string& spec) {
  PostPolicy p;
  if (spec.empty() || spec == "none") return p;
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    const std::string name = item.substr(0, colon);
    PostOp op;
    if (name == "mode") {
      op.kind = PostOpKind::Mode;
    } else if (name == "open") {
      op.kind = PostOpKind::Open;
    } else if (name == "close") {
      op.kind = PostOpKind::Close;
    } else {
      throw ArgumentError("postprocess: unknown operation '" + name + "' in '" + spec + "'");
    }
    if (colon != std::string::npos) {
      const std::string num = item.substr(colon + 1);
      std::size_t used = 0;
      try {
        op.k = std::stoi(num, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (num.empty() || used != num.size())
        throw ArgumentError("postprocess: bad size in '" + item + "'");
    }
    const int min_k = op.kind == PostOpKind::Mode ? 3 : 1;
    if (op.k < min_k || op.k % 2 == 0)
      throw ArgumentError("postprocess: size in '" + item + "' must be odd and >= " +
                          std::to_string(min_k));
    p.ops.push_back(op);
  }
  return p;
}

PostPolicy PostPolicy::default_policy() {
  return {{{PostOpKind::Mode, 3}, {PostOpKind::Open, 3}, {PostOpKind::Close, 3}}};
}

std::string PostPolicy::str() const {
  if (ops.empty()) return "none";
  std::string out;
  for (const auto& op : ops) {
    if (!out.empty()) out += ',';
    out += op.kind == PostOpKind::Mode ? "mode" : op.kind == PostOpKind::Open ? "open" : "close";
    out += ':' + std::to_string(op.k);
  }
  return out;
}

LabelMap denoise_labels(const LabelMap& labels, const PostPolicy& policy) {
  LabelMap out = labels;
  for (const auto& op : policy.ops) out = morph_labels(out, op.kind, op.k);
  return out;
}

}  // namespace mapseg
