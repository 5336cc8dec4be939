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

#include "doctest.h"
#include "mapseg/error.hpp"
#include "mapseg/run_config.hpp"
#include "support/tempdir.hpp"

using namespace mapseg;

TEST_CASE("defaults serialize and read back unchanged") {
  const RunConfig c;
  CHECK_NOTHROW(c.validate());
  const std::string text = c.to_text();
  CHECK(RunConfig::parse(text).to_text() == text);
  CHECK(std::count(text.begin(), text.end(), '\n') ==
        static_cast<std::ptrdiff_t>(RunConfig::keys().size()));
  CHECK(c.get("train.learning_rate") == "0.05");
  CHECK(c.get("train.momentum") == "0.9");
  CHECK(c.get("train.batch_size") == "8");
  CHECK(c.get("data.augment_fraction") == "0.1");
  CHECK(c.get("infer.overlap") == "auto");
  CHECK(c.get("post.policy") == "mode:3,open:3,close:3");
  CHECK(c.resolved_overlap() == 32);
}

TEST_CASE("document syntax: comments, blanks and whitespace") {
  const auto c = RunConfig::parse(
      "# experiment\n"
      "\n"
      "seed = 42   # trailing comment\n"
      "  train.epochs=3\r\n"
      "synth.ink = false\n"
      "infer.overlap = 16\n"
      "post.policy = none\n");
  CHECK(c.seed == 42);
  CHECK(c.train.epochs == 3);
  CHECK_FALSE(c.synth.boundary_ink);
  CHECK(c.overlap == 16);
  CHECK(c.resolved_overlap() == 16);
  CHECK(c.postprocess == "none");
}

TEST_CASE("every key reads back what was set") {
  RunConfig c;
  for (const auto& key : RunConfig::keys()) {
    const std::string value = c.get(key);
    c.set(key, value);
    CHECK(c.get(key) == value);
  }
}

TEST_CASE("errors name the key and the line") {
  try {
    (void)RunConfig::parse("seed=1\nmodel.dpeth=3\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find(":2:") != std::string::npos);
    CHECK(what.find("model.dpeth") != std::string::npos);
  }
  CHECK_THROWS_AS(RunConfig::parse("seed\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("seed=-1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("train.epochs=2.5\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("train.learning_rate=fast\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::parse("synth.ink=maybe\n"), ConfigError);
  RunConfig c;
  CHECK_THROWS_AS(c.apply_override("seed"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("nope=1"), ConfigError);
  c.apply_override("seed=9");
  CHECK(c.seed == 9);
}

TEST_CASE("cross-field validation") {
  auto invalid = [](const char* text) { return RunConfig::parse(text); };
  CHECK_THROWS_AS(invalid("infer.overlap=128\n").validate(), ConfigError);
  CHECK_THROWS_AS(invalid("model.patch_size=100\n").validate(), ConfigError);
  CHECK_THROWS_AS(invalid("post.policy=blur:3\n").validate(), ConfigError);
  CHECK_THROWS_AS(invalid("synth.split=1:1\n").validate(), ConfigError);
  CHECK_THROWS_AS(invalid("train.momentum=1\n").validate(), ConfigError);
  CHECK_THROWS_AS(invalid("data.augment_fraction=1.5\n").validate(), ConfigError);
  CHECK_THROWS_AS(invalid("data.stretch_min=1.1\n").validate(), ConfigError);
  CHECK_THROWS_AS(invalid("threads=-2\n").validate(), ConfigError);
}

TEST_CASE("derived seeds differ per purpose and follow the master seed") {
  RunConfig a, b;
  b.seed = 2;
  CHECK(a.model_seed() != a.train_config().seed);
  CHECK(a.model_seed() != b.model_seed());
  CHECK(a.train_config().epochs == a.train.epochs);
}

TEST_CASE("load reports missing files as I/O errors") {
  mapseg::testing::TempDir dir;
  CHECK_THROWS_AS(RunConfig::load(dir.file("absent.cfg")), IoError);
}
