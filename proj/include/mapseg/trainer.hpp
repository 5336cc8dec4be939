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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mapseg/metrics.hpp"
#include "mapseg/patches.hpp"
#include "mapseg/unet.hpp"

namespace mapseg {

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::int64_t batch_size = 8;
  std::int64_t epochs = 8;
  std::uint64_t seed = 0;
  std::int64_t eval_every = 1;

  /// ConfigError unless lr > 0, momentum in [0, 1), batch_size >= 1,
  /// epochs >= 1 and 1 <= eval_every <= epochs.
  void validate() const;
};

/// Classical momentum SGD, applied parameter by parameter:
///   v <- momentum * v + g;   theta <- theta - lr * v.
/// Batch-norm running statistics are not parameters and are left alone.
/// StateError if the gradient or velocity sets do not line up with the
/// model's parameters by name and size.
template <typename T>
void sgd_step(BasicUNet<T>& model, const GradientSet<T>& grads, GradientSet<T>& velocity,
              const TrainConfig& cfg);

struct EvalResult {
  ConfusionMatrix confusion;
  EvalSummary summary;
};

/// Argmax predictions for each patch against its labels.
EvalResult evaluate(const UNet& model, std::span<const Patch> patches,
                    std::int64_t batch_size = 8);
/// Tiled whole-image predictions (see segment) against the decoded labels.
EvalResult evaluate(const UNet& model, std::span<const LabeledImage> images,
                    std::int64_t overlap);

struct TrainReport {
  std::vector<double> losses;             // one per epoch, pixel-mean cross-entropy
  std::vector<std::int64_t> eval_epochs;  // 1-based epochs with a CV evaluation
  std::vector<double> cv_mean_jaccard;
  std::vector<double> cv_accuracy;
  std::int64_t best_epoch = 0;  // 1-based; earliest epoch on an exact tie
  double seconds = 0.0;         // wall clock, excluded from csv()

  /// `epoch,loss,cv_mjacc,cv_oa` with empty CV fields on epochs without an
  /// evaluation.
  std::string csv() const;
};

struct TrainResult {
  UNet model;  // parameter snapshot with the best CV mean Jaccard
  TrainReport report;
};

struct EpochLog {
  std::int64_t epoch = 0;
  double loss = 0.0;
  std::optional<EvalSummary> cv;
};

/// Patches for one epoch; `epoch` is 1-based.
using EpochSource = std::function<std::vector<Patch>(std::int64_t epoch, Rng& rng)>;
using Evaluator = std::function<EvalSummary(const UNet&)>;
using ProgressFn = std::function<void(const EpochLog&)>;

/// Runs cfg.epochs epochs of forward / loss / backward / sgd_step over
/// batches of each epoch's patches in order, evaluating every eval_every
/// epochs. A non-finite batch loss aborts with a NumericError naming the
/// epoch, batch and value.
TrainResult train(UNet model, const EpochSource& source, const Evaluator& evaluate,
                  const TrainConfig& cfg, const ProgressFn& progress = {});

/// Standard loop: epochs from build_epoch over `train_set`, model selection
/// on tiled predictions over `cv_set`.
TrainResult train(UNet model, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> cv_set, const EpochSpec& epoch_spec,
                  const TrainConfig& cfg, std::int64_t overlap, const ProgressFn& progress = {});

}  // namespace mapseg
