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

#include "mapseg/metrics.hpp"

#include <cstdio>
#include <numeric>

#include "mapseg/error.hpp"

namespace mapseg {

ConfusionMatrix::ConfusionMatrix(std::int64_t classes) : classes_(classes) {
  if (classes < 0 || classes > 256) throw ArgumentError("confusion: class count out of range");
  counts_.assign(static_cast<std::size_t>(classes * classes), 0);
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::int64_t c = 0; c < classes_; ++c) t += at(c, c);
  return t;
}

void ConfusionMatrix::add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size())
    throw DataError("confusion: prediction has " + std::to_string(pred.size()) +
                    " pixels, ground truth " + std::to_string(gt.size()));
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] >= classes_ || gt[i] >= classes_)
      throw DataError("confusion: label at pixel " + std::to_string(i) + " outside [0, " +
                      std::to_string(classes_) + ")");
  for (std::size_t i = 0; i < pred.size(); ++i)
    ++counts_[static_cast<std::size_t>(gt[i]) * static_cast<std::size_t>(classes_) + pred[i]];
}

void ConfusionMatrix::add(const LabelMap& pred, const LabelMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw DataError("confusion: prediction " + std::to_string(pred.width) + "x" +
                    std::to_string(pred.height) + " vs ground truth " + std::to_string(gt.width) +
                    "x" + std::to_string(gt.height));
  add(pred.labels, gt.labels);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw ArgumentError("confusion: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& gt, std::int64_t classes) {
  ConfusionMatrix m(classes);
  m.add(pred, gt);
  return m;
}

std::vector<std::optional<double>> jaccard_per_class(const ConfusionMatrix& m) {
  const std::int64_t c = m.classes();
  std::vector<std::optional<double>> out(static_cast<std::size_t>(c));
  for (std::int64_t k = 0; k < c; ++k) {
    const std::uint64_t tp = m.at(k, k);
    std::uint64_t fp = 0, fn = 0;
    for (std::int64_t j = 0; j < c; ++j) {
      if (j == k) continue;
      fp += m.at(j, k);
      fn += m.at(k, j);
    }
    const std::uint64_t denom = tp + fp + fn;
    if (denom > 0)
      out[static_cast<std::size_t>(k)] = static_cast<double>(tp) / static_cast<double>(denom);
  }
  return out;
}

double mean_jaccard(const ConfusionMatrix& m) {
  double sum = 0.0;
  int defined = 0;
  for (const auto& j : jaccard_per_class(m))
    if (j) {
      sum += *j;
      ++defined;
    }
  if (defined == 0) throw ArgumentError("mean_jaccard: no class occurs in prediction or truth");
  return sum / defined;
}

double micro_jaccard(const ConfusionMatrix& m) {
  const std::uint64_t total = m.total();
  if (total == 0) throw ArgumentError("micro_jaccard: empty confusion matrix");
  const std::uint64_t tp = m.trace();
  // Every off-diagonal pixel is one false positive and one false negative.
  return static_cast<double>(tp) / static_cast<double>(tp + 2 * (total - tp));
}

double overall_accuracy(const ConfusionMatrix& m) {
  const std::uint64_t total = m.total();
  if (total == 0) throw ArgumentError("overall_accuracy: empty confusion matrix");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

EvalSummary summarize(const ConfusionMatrix& m) {
  return {jaccard_per_class(m), mean_jaccard(m), micro_jaccard(m), overall_accuracy(m)};
}

std::string metrics_csv(const EvalSummary& s, const Palette* palette) {
  const bool named = palette != nullptr && palette->size() >= s.per_class.size();
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  std::string out = "class,jaccard\n";
  for (std::size_t k = 0; k < s.per_class.size(); ++k) {
    out += named ? (*palette)[k].name : std::to_string(k);
    out += ',';
    out += s.per_class[k] ? fmt(*s.per_class[k]) : "undefined";
    out += '\n';
  }
  out += "mean_jaccard," + fmt(s.mean_jaccard) + "\n";
  out += "micro_jaccard," + fmt(s.micro_jaccard) + "\n";
  out += "overall_accuracy," + fmt(s.overall_accuracy) + "\n";
  return out;
}

}  // namespace mapseg
