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

#include "mapseg/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mapseg/error.hpp"
#include "mapseg/inference.hpp"
#include "mapseg/layers.hpp"

namespace mapseg {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("train: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (eval_every < 1 || eval_every > epochs)
    throw ConfigError("train: eval_every must be in [1, epochs]");
}

template <typename T>
void sgd_step(BasicUNet<T>& model, const GradientSet<T>& grads, GradientSet<T>& velocity,
              const TrainConfig& cfg) {
  auto params = model.parameters();
  if (grads.size() != params.size() || velocity.size() != params.size())
    throw StateError("sgd_step: expected " + std::to_string(params.size()) +
                     " gradient and velocity entries, got " + std::to_string(grads.size()) +
                     " and " + std::to_string(velocity.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    const auto& g = grads[i];
    auto& v = velocity[i];
    if (g.name != p.name || v.name != p.name || g.values.size() != p.values.size() ||
        v.values.size() != p.values.size())
      throw StateError("sgd_step: entry " + std::to_string(i) + " (" + g.name + ", " + v.name +
                       ") does not match parameter " + p.name);
  }
  const T lr = static_cast<T>(cfg.learning_rate);
  const T mom = static_cast<T>(cfg.momentum);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].values;
    const auto& g = grads[i].values;
    auto& v = velocity[i].values;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      v[j] = mom * v[j] + g[j];
      theta[j] -= lr * v[j];
    }
  }
}

template void sgd_step<float>(BasicUNet<float>&, const GradientSet<float>&, GradientSet<float>&,
                              const TrainConfig&);
template void sgd_step<double>(BasicUNet<double>&, const GradientSet<double>&,
                               GradientSet<double>&, const TrainConfig&);

EvalResult evaluate(const UNet& model, std::span<const Patch> patches, std::int64_t batch_size) {
  if (patches.empty()) throw ArgumentError("evaluate: empty patch set");
  if (batch_size < 1) throw ArgumentError("evaluate: batch_size must be >= 1");
  const std::int64_t classes = model.config().num_classes;
  EvalResult r{ConfusionMatrix(classes), {}};
  Tensor images;
  std::vector<std::uint8_t> labels;
  std::vector<std::uint8_t> pred;
  for (std::size_t b = 0; b < patches.size(); b += static_cast<std::size_t>(batch_size)) {
    const auto n = std::min(patches.size() - b, static_cast<std::size_t>(batch_size));
    make_batch(patches.subspan(b, n), images, labels);
    const Tensor logits = infer(model, images);
    const Shape4 s = logits.shape();
    pred.assign(labels.size(), 0);
    for (std::int64_t i = 0; i < s.n; ++i)
      for (std::int64_t y = 0; y < s.h; ++y)
        for (std::int64_t x = 0; x < s.w; ++x) {
          std::int64_t best = 0;
          for (std::int64_t c = 1; c < s.c; ++c)
            if (logits.at(i, c, y, x) > logits.at(i, best, y, x)) best = c;
          pred[static_cast<std::size_t>((i * s.h + y) * s.w + x)] =
              static_cast<std::uint8_t>(best);
        }
    r.confusion.add(pred, labels);
  }
  r.summary = summarize(r.confusion);
  return r;
}

EvalResult evaluate(const UNet& model, std::span<const LabeledImage> images,
                    std::int64_t overlap) {
  if (images.empty()) throw ArgumentError("evaluate: empty image set");
  EvalResult r{ConfusionMatrix(model.config().num_classes), {}};
  for (const auto& item : images) r.confusion.add(segment(model, item.image, overlap), item.labels);
  r.summary = summarize(r.confusion);
  return r;
}

std::string TrainReport::csv() const {
  std::string out = "epoch,loss,cv_mjacc,cv_oa\n";
  std::size_t next_eval = 0;
  char buf[128];
  for (std::size_t e = 0; e < losses.size(); ++e) {
    const auto epoch = static_cast<std::int64_t>(e + 1);
    std::snprintf(buf, sizeof buf, "%lld,%.9g", static_cast<long long>(epoch), losses[e]);
    out += buf;
    if (next_eval < eval_epochs.size() && eval_epochs[next_eval] == epoch) {
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f", cv_mean_jaccard[next_eval],
                    cv_accuracy[next_eval]);
      out += buf;
      ++next_eval;
    } else {
      out += ",,";
    }
    out += '\n';
  }
  return out;
}

TrainResult train(UNet model, const EpochSource& source, const Evaluator& evaluate_fn,
                  const TrainConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);
  auto velocity = zero_gradients(model);
  TrainResult result{model, {}};
  double best = -1.0;

  Tensor images;
  std::vector<std::uint8_t> labels;
  for (std::int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<Patch> patches = source(epoch, rng);
    if (patches.empty()) throw DataError("train: epoch " + std::to_string(epoch) + " is empty");
    double loss_sum = 0.0;
    std::int64_t batch = 0;
    for (std::size_t b = 0; b < patches.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      ++batch;
      const auto n = std::min(patches.size() - b, static_cast<std::size_t>(cfg.batch_size));
      make_batch(std::span<const Patch>(patches).subspan(b, n), images, labels);
      auto fwd = forward(model, images, true);
      auto abort = [&](double loss, const char* detail) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "train: non-finite loss %g at epoch %lld, batch %lld%s%s",
                      loss, static_cast<long long>(epoch), static_cast<long long>(batch),
                      *detail ? ": " : "", detail);
        throw NumericError(buf);
      };
      nn::LossResult<float> ce;
      try {
        ce = nn::softmax_cross_entropy(fwd.logits, labels);
      } catch (const NumericError& e) {
        abort(std::numeric_limits<double>::quiet_NaN(), e.what());
      }
      if (!std::isfinite(ce.loss)) abort(ce.loss, "");
      loss_sum += ce.loss * static_cast<double>(n);
      const auto grads = backward(model, fwd.cache, ce.grad_logits);
      sgd_step(model, grads, velocity, cfg);
    }
    EpochLog log{epoch, loss_sum / static_cast<double>(patches.size()), std::nullopt};
    result.report.losses.push_back(log.loss);
    if (epoch % cfg.eval_every == 0) {
      const EvalSummary s = evaluate_fn(model);
      result.report.eval_epochs.push_back(epoch);
      result.report.cv_mean_jaccard.push_back(s.mean_jaccard);
      result.report.cv_accuracy.push_back(s.overall_accuracy);
      if (s.mean_jaccard > best) {
        best = s.mean_jaccard;
        result.model = model;
        result.report.best_epoch = epoch;
      }
      log.cv = s;
    }
    if (progress) progress(log);
  }
  result.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TrainResult train(UNet model, std::span<const LabeledImage> train_set,
                  std::span<const LabeledImage> cv_set, const EpochSpec& epoch_spec,
                  const TrainConfig& cfg, std::int64_t overlap, const ProgressFn& progress) {
  if (train_set.empty()) throw DataError("train: empty training partition");
  if (cv_set.empty()) throw DataError("train: empty cross-validation partition");
  if (epoch_spec.patch_size != model.config().patch_size)
    throw ConfigError("train: epoch patch size " + std::to_string(epoch_spec.patch_size) +
                      " != model patch size " + std::to_string(model.config().patch_size));
  const EpochSource source = [&](std::int64_t, Rng& rng) {
    return build_epoch(train_set, epoch_spec, rng);
  };
  const Evaluator cv = [&](const UNet& m) { return evaluate(m, cv_set, overlap).summary; };
  return train(std::move(model), source, cv, cfg, progress);
}

}  // namespace mapseg
