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

#include "mapseg/manifest.hpp"

#include <filesystem>
#include <set>
#include <sstream>

#include "mapseg/error.hpp"
#include "mapseg/image.hpp"

namespace mapseg {

std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::Train:
      return "train";
    case Partition::CrossValidation:
      return "cv";
    case Partition::Test:
      return "test";
  }
  return "?";
}

Partition parse_partition(std::string_view text) {
  if (text == "train") return Partition::Train;
  if (text == "cv") return Partition::CrossValidation;
  if (text == "test") return Partition::Test;
  throw DataError("unknown partition '" + std::string(text) + "' (expected train, cv or test)");
}

DatasetManifest DatasetManifest::parse(const std::string& text, const std::string& base_dir) {
  namespace fs = std::filesystem;
  DatasetManifest m;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto resolve = [&](const std::string& p) {
    if (base_dir.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).lexically_normal().string();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string part, image, label, extra;
    if (!(fields >> part)) continue;
    if (!(fields >> image >> label) || (fields >> extra))
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": expected 'partition image_path label_path'");
    ManifestEntry e{parse_partition(part), resolve(image), resolve(label)};
    for (const auto* p : {&e.image_path, &e.label_path})
      if (!seen.insert(*p).second)
        throw DataError("manifest line " + std::to_string(line_no) + ": duplicate path '" + *p +
                        "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  const auto bytes = read_file(path);
  const std::string dir = std::filesystem::path(path).parent_path().string();
  try {
    return parse(std::string(bytes.begin(), bytes.end()), dir);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string DatasetManifest::to_text() const {
  std::ostringstream out;
  for (const auto& e : entries)
    out << to_string(e.partition) << ' ' << e.image_path << ' ' << e.label_path << '\n';
  return out.str();
}

void DatasetManifest::save(const std::string& path) const {
  const std::string text = to_text();
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::vector<ManifestEntry> DatasetManifest::select(Partition p) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.partition == p) out.push_back(e);
  return out;
}

std::size_t DatasetManifest::count(Partition p) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.partition == p;
  return n;
}

}  // namespace mapseg
