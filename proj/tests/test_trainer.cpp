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

#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "mapseg/error.hpp"
#include "mapseg/synthmap.hpp"
#include "mapseg/trainer.hpp"

using namespace mapseg;

namespace {

UNetConfig tiny_config(std::int64_t patch, std::int64_t classes) {
  UNetConfig c;
  c.depth = 1;
  c.base_filters = 4;
  c.num_classes = classes;
  c.patch_size = patch;
  return c;
}

template <typename T>
void fill_parameters(BasicUNet<T>& m, T value) {
  for (auto& p : m.parameters()) std::fill(p.values.begin(), p.values.end(), value);
}

template <typename T>
GradientSet<T> constant_gradients(const BasicUNet<T>& m, T value) {
  auto g = zero_gradients(m);
  for (auto& e : g) std::fill(e.values.begin(), e.values.end(), value);
  return g;
}

std::vector<LabeledImage> synthetic_set(std::int64_t size, std::int64_t count, std::uint64_t seed,
                                        std::int64_t classes) {
  const auto pal = Palette::default_palette();
  SynthSpec spec;
  spec.width = spec.height = size;
  spec.num_regions = 3;
  spec.num_classes = classes;
  spec.noise_stddev = 4.0;
  std::vector<LabeledImage> out;
  for (std::int64_t i = 0; i < count; ++i) {
    spec.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    auto s = generate(spec, pal);
    out.push_back({std::move(s.image), std::move(s.labels)});
  }
  return out;
}

}  // namespace

TEST_CASE("train config validation") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  TrainConfig c;
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.momentum = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.epochs = 3;
  c.eval_every = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("sgd_step: zero gradient and velocity is a fixed point") {
  Rng rng(1);
  auto m = UNet::build(tiny_config(8, 2), rng);
  const auto before = m;
  auto v = zero_gradients(m);
  sgd_step(m, zero_gradients(m), v, TrainConfig{});
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    const auto a = m.parameters()[i].values;
    const auto b = before.parameters()[i].values;
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST_CASE("sgd_step: single plain step arithmetic") {
  auto m = BasicUNet<double>::zeros(tiny_config(8, 2));
  fill_parameters(m, 1.0);
  auto v = zero_gradients(m);
  TrainConfig c;
  c.learning_rate = 0.1;
  c.momentum = 0.0;
  sgd_step(m, constant_gradients(m, 0.5), v, c);
  for (const auto& p : m.parameters())
    for (double x : p.values) CHECK(x == doctest::Approx(0.95).epsilon(1e-15));
}

TEST_CASE("sgd_step: two momentum steps match the unrolled recurrence") {
  Rng rng(2);
  auto m = BasicUNet<double>::build(tiny_config(8, 2), rng);
  std::vector<std::vector<double>> theta0;
  for (const auto& p : m.parameters()) theta0.emplace_back(p.values.begin(), p.values.end());
  auto g1 = zero_gradients(m), g2 = zero_gradients(m);
  for (auto* g : {&g1, &g2})
    for (auto& e : *g)
      for (auto& x : e.values) x = rng.normal();
  TrainConfig c;
  c.learning_rate = 0.05;
  c.momentum = 0.9;
  auto v = zero_gradients(m);
  sgd_step(m, g1, v, c);
  sgd_step(m, g2, v, c);
  // theta2 = theta0 - lr*g1 - lr*(0.9*g1 + g2)
  const auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i].values.size(); ++j) {
      const double a = g1[i].values[j], b = g2[i].values[j];
      const double expect = theta0[i][j] - 0.05 * a - 0.05 * (0.9 * a + b);
      CHECK(std::abs(params[i].values[j] - expect) <= 1e-7);
      CHECK(std::abs(v[i].values[j] - (0.9 * a + b)) <= 1e-12);
    }
}

TEST_CASE("sgd_step leaves running statistics and rejects mismatched sets") {
  Rng rng(3);
  auto m = UNet::build(tiny_config(8, 2), rng);
  for (auto& b : m.buffers()) std::fill(b.values.begin(), b.values.end(), 0.25f);
  auto v = zero_gradients(m);
  sgd_step(m, constant_gradients(m, 1.0f), v, TrainConfig{});
  for (const auto& b : m.buffers())
    for (float x : b.values) CHECK(x == 0.25f);

  auto renamed = zero_gradients(m);
  renamed[3].name = "bogus";
  CHECK_THROWS_AS(sgd_step(m, renamed, v, TrainConfig{}), StateError);
  auto shorter = zero_gradients(m);
  shorter.pop_back();
  CHECK_THROWS_AS(sgd_step(m, shorter, v, TrainConfig{}), StateError);
  auto resized = zero_gradients(m);
  resized[0].values.push_back(0.0f);
  CHECK_THROWS_AS(sgd_step(m, resized, v, TrainConfig{}), StateError);
}

TEST_CASE("evaluate: constant predictors") {
  auto m = UNet::zeros(tiny_config(4, 2));
  // All-zero weights make the logits equal to the head bias: always class 0.
  m.head.bias = {1.0f, 0.0f};

  Patch all_zero{Tensor({1, 3, 4, 4}), LabelMap(4, 4)};
  const Patch patches[] = {all_zero, all_zero};
  const auto perfect = evaluate(m, patches);
  CHECK(perfect.summary.mean_jaccard == 1.0);
  CHECK(perfect.summary.overall_accuracy == 1.0);

  Patch half = all_zero;
  for (std::int64_t y = 0; y < 4; ++y)
    for (std::int64_t x = 2; x < 4; ++x) half.labels.at(x, y) = 1;
  const Patch balanced[] = {half};
  const auto r = evaluate(m, balanced);
  CHECK(r.summary.overall_accuracy == 0.5);
  CHECK(r.confusion.at(0, 0) == 8);
  CHECK(r.confusion.at(1, 0) == 8);
  CHECK(r.confusion.at(0, 1) == 0);
  CHECK(r.confusion.at(1, 1) == 0);
  CHECK(r.summary.mean_jaccard == doctest::Approx(0.25));  // J0 = 8/16, J1 = 0
}

TEST_CASE("train: bookkeeping, report CSV and determinism") {
  const auto data = synthetic_set(16, 6, 11, 4);
  const std::span<const LabeledImage> all(data);
  EpochSpec es;
  es.patch_size = 16;
  TrainConfig c;
  c.epochs = 5;
  c.eval_every = 2;
  c.batch_size = 3;
  c.seed = 9;
  auto run = [&] {
    Rng rng(4);
    return train(UNet::build(tiny_config(16, 4), rng), all.first(4), all.last(2), es, c, 4);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.report.losses.size() == 5);
  CHECK(a.report.eval_epochs == std::vector<std::int64_t>{2, 4});
  CHECK(a.report.losses == b.report.losses);
  CHECK(a.report.csv() == b.report.csv());
  for (std::size_t i = 0; i < a.model.parameters().size(); ++i) {
    const auto x = a.model.parameters()[i].values;
    const auto y = b.model.parameters()[i].values;
    CHECK(std::equal(x.begin(), x.end(), y.begin(), y.end()));
  }

  const std::string csv = a.report.csv();
  CHECK(csv.rfind("epoch,loss,cv_mjacc,cv_oa\n1,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.find("\n3,") != std::string::npos);
  CHECK(csv.find(",,\n") != std::string::npos);

  c.epochs = 1;
  c.eval_every = 1;
  Rng rng(4);
  const auto one = train(UNet::build(tiny_config(16, 4), rng), all.first(4), all.last(2), es, c, 4);
  CHECK(one.report.losses.size() == 1);
  CHECK(one.report.best_epoch == 1);
}

TEST_CASE("train: returned model is the best cross-validated snapshot") {
  const auto data = synthetic_set(16, 8, 12, 4);
  const std::span<const LabeledImage> all(data);
  EpochSpec es;
  es.patch_size = 16;
  TrainConfig c;
  c.epochs = 6;
  c.batch_size = 2;
  c.learning_rate = 0.2;
  Rng rng(5);
  const auto r = train(UNet::build(tiny_config(16, 4), rng), all.first(6), all.last(2), es, c, 4);
  const auto& mj = r.report.cv_mean_jaccard;
  const auto best = std::max_element(mj.begin(), mj.end());  // first maximum
  CHECK(r.report.best_epoch == r.report.eval_epochs[static_cast<std::size_t>(best - mj.begin())]);
  CHECK(evaluate(r.model, all.last(2), 4).summary.mean_jaccard == *best);
}

TEST_CASE("train: empty partitions and mismatched patch size") {
  const auto data = synthetic_set(16, 2, 13, 4);
  const std::span<const LabeledImage> all(data);
  EpochSpec es;
  es.patch_size = 16;
  Rng rng(6);
  const auto m = UNet::build(tiny_config(16, 4), rng);
  CHECK_THROWS_AS(train(m, all.first(0), all, es, TrainConfig{}, 4), DataError);
  CHECK_THROWS_AS(train(m, all, all.first(0), es, TrainConfig{}, 4), DataError);
  es.patch_size = 8;
  CHECK_THROWS_AS(train(m, all, all, es, TrainConfig{}, 4), ConfigError);
}

TEST_CASE("train: non-finite loss aborts with diagnostics") {
  Rng rng(7);
  const auto m = UNet::build(tiny_config(8, 2), rng);
  Patch p{Tensor({1, 3, 8, 8}), LabelMap(8, 8)};
  Patch bad = p;
  bad.image.at(0, 1, 2, 3) = std::numeric_limits<float>::quiet_NaN();
  const EpochSource source = [&](std::int64_t epoch, Rng&) {
    return epoch < 2 ? std::vector<Patch>{p, p} : std::vector<Patch>{p, bad};
  };
  const Evaluator none = [](const UNet&) { return EvalSummary{}; };
  TrainConfig c;
  c.epochs = 3;
  c.batch_size = 1;
  try {
    (void)train(m, source, none, c);
    FAIL("expected a NumericError");
  } catch (const NumericError& e) {
    const std::string what = e.what();
    INFO(what);
    CHECK(what.find("epoch 2") != std::string::npos);
    CHECK(what.find("batch 2") != std::string::npos);
    CHECK(what.find("nan") != std::string::npos);
  }
}

TEST_CASE("train: memorizes a handful of fixed patches") {
  const auto pal = Palette::default_palette();
  SynthSpec spec;
  spec.width = spec.height = 16;
  spec.num_regions = 4;
  spec.noise_stddev = 8.0;
  spec.boundary_ink = true;
  std::vector<Patch> patches;
  for (std::uint64_t i = 0; i < 8; ++i) {
    spec.seed = derive_seed(21, i);
    const auto s = generate(spec, pal);
    patches.push_back({image_to_tensor(s.image, 0, 0, 16, 16), s.labels});
  }
  UNetConfig mc;
  mc.depth = 2;
  mc.base_filters = 8;
  mc.patch_size = 16;
  Rng rng(8);
  TrainConfig c;
  c.epochs = 200;
  c.eval_every = 200;
  const auto r = train(
      UNet::build(mc, rng), [&](std::int64_t, Rng&) { return patches; },
      [&](const UNet& m) { return evaluate(m, patches).summary; }, c);
  CHECK(r.report.cv_accuracy.back() >= 0.99);
  CHECK(r.report.losses.front() >= 10.0 * r.report.losses.back());
}
