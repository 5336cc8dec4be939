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
#include <optional>
#include <string>
#include <vector>

#include "mapseg/image.hpp"
#include "mapseg/palette.hpp"

namespace mapseg {

/// C x C pixel counts; entry (g, p) counts pixels with ground truth g that
/// were predicted as p. Matrices from disjoint pixel sets add exactly.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::int64_t classes = 0);

  std::int64_t classes() const { return classes_; }
  std::uint64_t at(std::int64_t gt, std::int64_t pred) const {
    return counts_[static_cast<std::size_t>(gt * classes_ + pred)];
  }
  std::uint64_t total() const;
  std::uint64_t trace() const;

  /// Accumulates one prediction/ground-truth pair. DataError on a size
  /// mismatch or a label outside [0, classes).
  void add(const LabelMap& pred, const LabelMap& gt);
  void add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::int64_t classes_ = 0;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt, std::int64_t classes);

/// TP / (TP + FP + FN) per class; nullopt where the class is absent from both
/// prediction and ground truth.
std::vector<std::optional<double>> jaccard_per_class(const ConfusionMatrix& m);
/// Mean over defined classes; ArgumentError when no class is defined.
double mean_jaccard(const ConfusionMatrix& m);
/// Global sum(TP) / sum(TP + FP + FN).
double micro_jaccard(const ConfusionMatrix& m);
/// trace / total; ArgumentError on an empty matrix.
double overall_accuracy(const ConfusionMatrix& m);

struct EvalSummary {
  std::vector<std::optional<double>> per_class;
  double mean_jaccard = 0.0;
  double micro_jaccard = 0.0;
  double overall_accuracy = 0.0;
};

EvalSummary summarize(const ConfusionMatrix& m);

/// CSV report: `class,jaccard` rows (value or "undefined"), followed by
/// mean_jaccard, micro_jaccard and overall_accuracy rows. Class names come
/// from the palette when it covers every class, otherwise indices are used.
std::string metrics_csv(const EvalSummary& s, const Palette* palette = nullptr);

}  // namespace mapseg
