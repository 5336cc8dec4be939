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

#include <filesystem>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "mapseg/cli.hpp"
#include "mapseg/image.hpp"
#include "support/tempdir.hpp"

using mapseg::read_file;
using mapseg::testing::TempDir;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = mapseg::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// A desk-sized corpus and model so commands finish in well under a second.
const std::vector<std::string> kSmall = {
    "--set", "synth.count=12",      "--set", "synth.split=8:2:2",  "--set", "synth.width=32",
    "--set", "synth.height=32",     "--set", "model.patch_size=16", "--set", "model.depth=1",
    "--set", "model.base_filters=2", "--set", "train.epochs=2",    "--threads", "1"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.end(), kSmall.begin(), kSmall.end());
  return args;
}

bool single_error_line(const std::string& err, const std::string& kind) {
  static const std::regex line("mapseg: error\\[([a-z]+)\\]: [^\n]+\n");
  std::smatch m;
  return std::regex_match(err, m, line) && m[1] == kind;
}

}  // namespace

TEST_CASE("eval of identical prediction and ground truth is perfect") {
  TempDir dir;
  REQUIRE(run(with_small({"gen-data", "--out", dir.path().string()})).code == 0);
  const auto lbl = dir.file("lbl_0000.png");
  const auto r = run({"eval", "--pred", lbl, "--gt", lbl, "--out", dir.file("m")});
  CHECK(r.code == 0);
  CHECK(r.out.find("mean_jaccard=1.000000") != std::string::npos);
  CHECK(r.out.find("overall_accuracy=1.000000") != std::string::npos);
  const auto csv = read_file(dir.file("m/metrics.csv"));
  CHECK(std::string(csv.begin(), csv.end()).rfind("class,jaccard\n", 0) == 0);
}

TEST_CASE("gen-data and train are byte-reproducible") {
  TempDir a, b;
  for (auto* d : {&a, &b}) {
    REQUIRE(run(with_small({"gen-data", "--out", d->file("data")})).code == 0);
    const auto r = run(with_small({"train", "--manifest", d->file("data/manifest.txt"), "--out",
                                   d->path().string()}));
    REQUIRE(r.code == 0);
    CHECK(r.err.find("epoch 2/2") != std::string::npos);
  }
  for (const auto& entry : std::filesystem::directory_iterator(a.file("data")))
    CHECK(read_file(entry.path().string()) ==
          read_file(b.file("data/" + entry.path().filename().string())));
  CHECK(read_file(a.file("model.ckpt")) == read_file(b.file("model.ckpt")));
  CHECK(read_file(a.file("train_report.csv")) == read_file(b.file("train_report.csv")));
}

TEST_CASE("flags win over the config file, which wins over defaults") {
  TempDir dir;
  const std::string cfg = dir.file("run.cfg");
  const std::string text = "seed=5\nsynth.count=6\nsynth.width=32\nsynth.height=32\n";
  mapseg::write_file(cfg, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  REQUIRE(run({"gen-data", "--config", cfg, "--seed", "7", "--out", dir.file("flag")}).code == 0);
  REQUIRE(run({"gen-data", "--config", cfg, "--set", "seed=7", "--out", dir.file("set")}).code == 0);
  REQUIRE(run({"gen-data", "--config", cfg, "--out", dir.file("file")}).code == 0);
  CHECK(read_file(dir.file("flag/img_0000.png")) == read_file(dir.file("set/img_0000.png")));
  CHECK(read_file(dir.file("flag/img_0000.png")) != read_file(dir.file("file/img_0000.png")));
  CHECK_FALSE(std::filesystem::exists(dir.file("file/img_0006.png")));
}

TEST_CASE("predict writes labels, raw labels and probabilities; none policy keeps raw") {
  TempDir dir;
  REQUIRE(run(with_small({"gen-data", "--out", dir.file("data")})).code == 0);
  REQUIRE(run(with_small({"train", "--manifest", dir.file("data/manifest.txt"), "--out",
                          dir.path().string()}))
              .code == 0);
  const auto r = run({"predict", "--checkpoint", dir.file("model.ckpt"), "--out", dir.file("p"),
                      "--postprocess", "none", "--raw", "--probs", dir.file("data/img_0003.png")});
  CHECK(r.code == 0);
  CHECK(read_file(dir.file("p/img_0003_labels.png")) == read_file(dir.file("p/img_0003_raw.png")));
  CHECK(std::filesystem::exists(dir.file("p/img_0003_prob_commercial.png")));

  const auto e = run({"eval", "--manifest", dir.file("data/manifest.txt"), "--pred-dir",
                      dir.file("p"), "--partition", "test"});
  CHECK(e.code == 4);  // only one of the two test images was predicted
}

TEST_CASE("failures print one categorized line and map to exit codes") {
  TempDir dir;
  auto r = run({});
  CHECK(r.code == 1);
  CHECK(single_error_line(r.err, "usage"));

  r = run({"gen-data", "--out", dir.file("x"), "--set", "bogus=1"});
  CHECK(r.code == 1);
  CHECK(single_error_line(r.err, "config"));

  r = run({"eval", "--pred", dir.file("missing.png"), "--gt", dir.file("missing.png")});
  CHECK(r.code == 4);
  CHECK(single_error_line(r.err, "io"));

  const std::vector<std::uint8_t> junk(64, 7);
  mapseg::write_file(dir.file("junk.ckpt"), junk);
  r = run({"predict", "--checkpoint", dir.file("junk.ckpt"), "--out", dir.file("p"),
           dir.file("junk.ckpt")});
  CHECK(r.code == 2);
  CHECK(single_error_line(r.err, "data"));

  r = run({"eval", "--pred", "a.png"});
  CHECK(r.code == 1);
  CHECK(single_error_line(r.err, "usage"));

  r = run({"train", "--out", dir.file("t")});  // missing --manifest
  CHECK(r.code == 1);
  CHECK(single_error_line(r.err, "usage"));

  r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("pipeline") != std::string::npos);
}
