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

#include "mapseg/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

#include "mapseg/error.hpp"
#include "mapseg/image.hpp"
#include "mapseg/postprocess.hpp"
#include "mapseg/rng.hpp"

namespace mapseg {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("config: key '" + std::string(key) + "': expected " + expected + ", got '" +
                    std::string(value) + "'");
}

std::int64_t parse_int(std::string_view key, std::string_view v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an unsigned integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    bad_value(key, v, "a finite number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean (true/false)");
}

std::string fmt_double(double v) {
  // Shortest representation that reads back to the same double.
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MAPSEG_INT(expr)                                                              \
  Field {                                                                             \
    [](RunConfig& c, std::string_view k, std::string_view v) {                        \
      c.expr = static_cast<std::remove_reference_t<decltype(c.expr)>>(parse_int(k, v)); \
    },                                                                                \
        [](const RunConfig& c) { return std::to_string(c.expr); }                     \
  }
#define MAPSEG_DOUBLE(expr)                                                                    \
  Field {                                                                                      \
    [](RunConfig& c, std::string_view k, std::string_view v) { c.expr = parse_double(k, v); }, \
        [](const RunConfig& c) { return fmt_double(c.expr); }                                  \
  }
#define MAPSEG_BOOL(expr)                                                                    \
  Field {                                                                                    \
    [](RunConfig& c, std::string_view k, std::string_view v) { c.expr = parse_bool(k, v); }, \
        [](const RunConfig& c) { return std::string(c.expr ? "true" : "false"); }            \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"seed", Field{[](RunConfig& c, std::string_view k, std::string_view v) {
                       c.seed = parse_u64(k, v);
                     },
                     [](const RunConfig& c) { return std::to_string(c.seed); }}},
      {"threads", MAPSEG_INT(threads)},
      {"model.depth", MAPSEG_INT(model.depth)},
      {"model.base_filters", MAPSEG_INT(model.base_filters)},
      {"model.patch_size", MAPSEG_INT(model.patch_size)},
      {"data.tolerance", MAPSEG_INT(tolerance)},
      {"data.patches_per_image", MAPSEG_INT(epoch.patches_per_image)},
      {"data.augment_fraction", MAPSEG_DOUBLE(epoch.augment_fraction)},
      {"data.rotate", MAPSEG_BOOL(epoch.augment.rotate)},
      {"data.flip", MAPSEG_BOOL(epoch.augment.flip)},
      {"data.stretch", MAPSEG_BOOL(epoch.augment.stretch)},
      {"data.stretch_min", MAPSEG_DOUBLE(epoch.augment.stretch_min)},
      {"data.stretch_max", MAPSEG_DOUBLE(epoch.augment.stretch_max)},
      {"train.learning_rate", MAPSEG_DOUBLE(train.learning_rate)},
      {"train.momentum", MAPSEG_DOUBLE(train.momentum)},
      {"train.batch_size", MAPSEG_INT(train.batch_size)},
      {"train.epochs", MAPSEG_INT(train.epochs)},
      {"train.eval_every", MAPSEG_INT(train.eval_every)},
      {"infer.overlap",
       Field{[](RunConfig& c, std::string_view k, std::string_view v) {
               c.overlap = v == "auto" ? -1 : parse_int(k, v);
             },
             [](const RunConfig& c) {
               return c.overlap < 0 ? std::string("auto") : std::to_string(c.overlap);
             }}},
      {"infer.batch_size", MAPSEG_INT(infer_batch)},
      {"post.policy", Field{[](RunConfig& c, std::string_view, std::string_view v) {
                              c.postprocess = std::string(v);
                            },
                            [](const RunConfig& c) { return c.postprocess; }}},
      {"synth.count", MAPSEG_INT(synth_count)},
      {"synth.split", Field{[](RunConfig& c, std::string_view, std::string_view v) {
                              c.split = std::string(v);
                            },
                            [](const RunConfig& c) { return c.split; }}},
      {"synth.width", MAPSEG_INT(synth.width)},
      {"synth.height", MAPSEG_INT(synth.height)},
      {"synth.regions", MAPSEG_INT(synth.num_regions)},
      {"synth.classes", MAPSEG_INT(synth.num_classes)},
      {"synth.noise", MAPSEG_DOUBLE(synth.noise_stddev)},
      {"synth.ink", MAPSEG_BOOL(synth.boundary_ink)},
      {"synth.clutter", MAPSEG_INT(synth.clutter_strokes)},
  };
  return table;
}

#undef MAPSEG_INT
#undef MAPSEG_DOUBLE
#undef MAPSEG_BOOL

const Field& field(std::string_view key) {
  for (const auto& [name, f] : fields())
    if (name == key) return f;
  throw ConfigError("config: unknown key '" + std::string(key) + "'");
}

}  // namespace

SynthSpec RunConfig::default_synth() {
  SynthSpec s;
  s.noise_stddev = 8.0;
  s.boundary_ink = true;
  s.clutter_strokes = 10;
  return s;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, f] : fields()) out.push_back(name);
    return out;
  }();
  return names;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  field(key).set(*this, key, value);
}

std::string RunConfig::get(std::string_view key) const { return field(key).get(*this); }

void RunConfig::apply(std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos)
      throw ConfigError(where + "expected key=value, got '" + std::string(line) + "'");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("config: override '" + std::string(assignment) + "' is not key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig c;
  c.apply(text);
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  const auto bytes = read_file(path);
  RunConfig c;
  c.apply(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path);
  return c;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + "=" + f.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  if (threads < 0) throw ConfigError("config: threads must be >= 0");
  UNetConfig m = model;
  m.validate();
  if (tolerance < 0 || tolerance > 255) throw ConfigError("config: data.tolerance must be in [0, 255]");
  if (epoch.patches_per_image < 1) throw ConfigError("config: data.patches_per_image must be >= 1");
  if (!(epoch.augment_fraction >= 0.0 && epoch.augment_fraction <= 1.0))
    throw ConfigError("config: data.augment_fraction must be in [0, 1]");
  try {
    epoch.augment.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  train.validate();
  if (overlap >= model.patch_size)
    throw ConfigError("config: infer.overlap must be below model.patch_size");
  if (overlap < -1) throw ConfigError("config: infer.overlap must be >= 0 or auto");
  if (infer_batch < 1) throw ConfigError("config: infer.batch_size must be >= 1");
  if (synth_count < 3) throw ConfigError("config: synth.count must be >= 3");
  try {
    (void)PostPolicy::parse(postprocess);
    (void)SplitFractions::parse(split).counts(synth_count);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::int64_t RunConfig::resolved_overlap() const {
  return overlap < 0 ? model.patch_size / 4 : overlap;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = derive_seed(seed, 2);
  return t;
}

std::uint64_t RunConfig::model_seed() const { return derive_seed(seed, 1); }

}  // namespace mapseg
