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
#include <span>
#include <string>
#include <vector>

#include "mapseg/unet.hpp"

namespace mapseg {

/// Binary model file, all integers and floats little-endian:
///
///   "UMAP"  u32 version
///   u32 field count, then per field: u8 tag, i64 value   (UNetConfig)
///   u32 record count, then per record:
///       u32 name length, name bytes (UTF-8), u32 rank, rank x i64 dims,
///       prod(dims) x f32
///   u32 CRC-32 (zlib polynomial) of every preceding byte
///
/// Records hold every trainable parameter followed by the batch-norm running
/// statistics, in model order.
constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const UNet& model);

/// DataError on a bad magic, version, CRC, truncated or trailing bytes, an
/// invalid configuration, or records that do not match the configuration.
UNet decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const UNet& model, const std::string& path);
UNet load_checkpoint(const std::string& path);

}  // namespace mapseg
