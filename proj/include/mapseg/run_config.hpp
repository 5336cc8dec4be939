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
#include <string_view>
#include <vector>

#include "mapseg/patches.hpp"
#include "mapseg/synthmap.hpp"
#include "mapseg/trainer.hpp"
#include "mapseg/unet.hpp"

namespace mapseg {

/// Every tunable of a run as one flat `key=value` document. Keys are
/// grouped by prefix (model., data., train., infer., post., synth.); see
/// RunConfig::keys() and the README for the full list with defaults.
struct RunConfig {
  std::uint64_t seed = 1;
  std::int64_t threads = 0;  // 0 leaves the OpenMP default

  UNetConfig model;  // num_classes is taken from the palette at run time
  int tolerance = 4;
  EpochSpec epoch;
  TrainConfig train;
  std::int64_t overlap = -1;  // -1: a quarter of the patch size
  std::int64_t infer_batch = 8;
  std::string postprocess = "mode:3,open:3,close:3";

  SynthSpec synth = default_synth();
  std::int64_t synth_count = 280;
  std::string split = "200:40:40";

  static SynthSpec default_synth();

  /// All accepted keys, in document order.
  static const std::vector<std::string>& keys();

  /// ConfigError naming the key for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  /// Applies a document: UTF-8 lines of `key = value`, blank lines and `#`
  /// comments ignored. `origin` prefixes error messages (e.g. a path).
  void apply(std::string_view text, std::string_view origin = "config");
  /// Applies a `key=value` override as given on the command line.
  void apply_override(std::string_view assignment);

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);
  std::string to_text() const;

  /// Cross-field checks (ConfigError): model, epoch and training settings,
  /// overlap below the patch size, parsable post-processing policy and split.
  void validate() const;

  std::int64_t resolved_overlap() const;
  TrainConfig train_config() const;  // with the derived training seed
  std::uint64_t model_seed() const;
};

}  // namespace mapseg
