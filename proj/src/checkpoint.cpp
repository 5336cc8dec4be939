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

#include "mapseg/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>

#include "mapseg/error.hpp"
#include "mapseg/image.hpp"

namespace mapseg {

namespace {

constexpr char kMagic[4] = {'U', 'M', 'A', 'P'};

enum ConfigTag : std::uint8_t {
  kInputChannels = 1,
  kNumClasses = 2,
  kDepth = 3,
  kBaseFilters = 4,
  kPatchSize = 5,
};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) {
    const auto u = static_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > in_.size() - pos_)
      throw DataError("checkpoint: truncated at byte offset " + std::to_string(pos_));
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
  }
  std::int64_t i64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[static_cast<std::size_t>(i)]) << (8 * i);
    return static_cast<std::int64_t>(v);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large models.
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = std::min<std::size_t>(bytes.size() - done, 1u << 30);
    crc = crc32(crc, bytes.data() + done, static_cast<uInt>(n));
    done += n;
  }
  return static_cast<std::uint32_t>(crc);
}

template <typename Ref>
void write_record(Writer& w, const Ref& r) {
  w.u32(static_cast<std::uint32_t>(r.name.size()));
  w.bytes(r.name.data(), r.name.size());
  w.u32(static_cast<std::uint32_t>(r.dims.size()));
  for (auto d : r.dims) w.i64(d);
  for (float v : r.values) w.f32(v);
}

template <typename Ref>
void read_record(Reader& r, Ref& expected) {
  const std::size_t at = r.offset();
  const std::uint32_t len = r.u32();
  const auto name_bytes = r.take(len);
  const std::string name(name_bytes.begin(), name_bytes.end());
  if (name != expected.name)
    throw DataError("checkpoint: record at byte offset " + std::to_string(at) + " is '" + name +
                    "', expected '" + expected.name + "'");
  const std::uint32_t rank = r.u32();
  std::vector<std::int64_t> dims(rank);
  for (auto& d : dims) d = r.i64();
  if (dims != expected.dims)
    throw DataError("checkpoint: record '" + name + "' has dims that do not match the model");
  for (auto& v : expected.values) v = r.f32();
}

// Stored floats for a configuration (parameters plus running statistics),
// computed in floating point so absurd configurations cannot overflow.
double stored_floats(const UNetConfig& c) {
  auto stage = [](double in, double out) { return 9 * in * out + 9 * out * out + 2 * out + 8 * out; };
  const double base = static_cast<double>(c.base_filters);
  double total = 0.0;
  double in = static_cast<double>(c.input_channels);
  for (std::int64_t l = 0; l < c.depth; ++l) {
    const double out = base * std::pow(2.0, static_cast<double>(l));
    total += stage(in, out) + stage(out + 2 * out, out);  // encoder and decoder level
    in = out;
  }
  total += stage(in, 2 * in);
  const double classes = static_cast<double>(c.num_classes);
  return total + classes * base + classes;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const UNet& model) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  const UNetConfig& c = model.config();
  const std::pair<ConfigTag, std::int64_t> fields[] = {
      {kInputChannels, c.input_channels}, {kNumClasses, c.num_classes}, {kDepth, c.depth},
      {kBaseFilters, c.base_filters},     {kPatchSize, c.patch_size},
  };
  w.u32(static_cast<std::uint32_t>(std::size(fields)));
  for (const auto& [tag, value] : fields) {
    w.u8(tag);
    w.i64(value);
  }
  const auto params = model.parameters();
  const auto buffers = model.buffers();
  w.u32(static_cast<std::uint32_t>(params.size() + buffers.size()));
  for (const auto& p : params) write_record(w, p);
  for (const auto& b : buffers) write_record(w, b);
  const std::uint32_t crc = crc_of(w.data());
  w.u32(crc);
  return std::move(w.data());
}

UNet decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DataError("checkpoint: missing UMAP header");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  const std::uint32_t stored = tail.u32();
  if (crc_of(body) != stored) throw DataError("checkpoint: CRC mismatch (file is corrupt)");

  Reader r(body);
  (void)r.take(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));

  UNetConfig c;
  bool seen[6] = {};
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t tag = r.u8();
    const std::int64_t value = r.i64();
    switch (tag) {
      case kInputChannels: c.input_channels = value; break;
      case kNumClasses: c.num_classes = value; break;
      case kDepth: c.depth = value; break;
      case kBaseFilters: c.base_filters = value; break;
      case kPatchSize: c.patch_size = value; break;
      default: throw DataError("checkpoint: unknown config tag " + std::to_string(tag));
    }
    if (seen[tag]) throw DataError("checkpoint: duplicate config tag " + std::to_string(tag));
    seen[tag] = true;
  }
  for (int tag = 1; tag <= 5; ++tag)
    if (!seen[tag]) throw DataError("checkpoint: missing config tag " + std::to_string(tag));
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint: invalid model config: ") + e.what());
  }

  if (stored_floats(c) * 4.0 > static_cast<double>(bytes.size()))
    throw DataError("checkpoint: file too small for its model config");

  UNet model = UNet::zeros(c);
  auto params = model.parameters();
  auto buffers = model.buffers();
  const std::uint32_t records = r.u32();
  if (records != params.size() + buffers.size())
    throw DataError("checkpoint: " + std::to_string(records) + " records, model needs " +
                    std::to_string(params.size() + buffers.size()));
  for (auto& p : params) read_record(r, p);
  for (auto& b : buffers) read_record(r, b);
  if (!r.done()) throw DataError("checkpoint: trailing bytes after the last record");
  return model;
}

void save_checkpoint(const UNet& model, const std::string& path) {
  write_file(path, encode_checkpoint(model));
}

UNet load_checkpoint(const std::string& path) {
  const auto bytes = read_file(path);
  return decode_checkpoint(bytes);
}

}  // namespace mapseg
