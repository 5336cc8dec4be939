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

#include <string>
#include <string_view>
#include <vector>

namespace mapseg {

enum class Partition { Train, CrossValidation, Test };

std::string_view to_string(Partition p);
/// Accepts "train", "cv" and "test".
Partition parse_partition(std::string_view text);

struct ManifestEntry {
  Partition partition = Partition::Train;
  std::string image_path;
  std::string label_path;

  bool operator==(const ManifestEntry&) const = default;
};

/// Listing of (image, label) pairs with their partition.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  /// Text format: one `partition image_path label_path` per line, '#'
  /// comments. Relative paths are resolved against `base_dir` when it is
  /// non-empty. Throws DataError on malformed lines or duplicate paths.
  static DatasetManifest parse(const std::string& text, const std::string& base_dir = "");
  /// Resolves relative paths against the manifest's own directory.
  static DatasetManifest load(const std::string& path);

  std::string to_text() const;
  void save(const std::string& path) const;

  std::vector<ManifestEntry> select(Partition p) const;
  std::size_t count(Partition p) const;

  bool operator==(const DatasetManifest&) const = default;
};

}  // namespace mapseg
