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

#include "mapseg/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mapseg/error.hpp"

namespace mapseg {

RasterImage::RasterImage(std::int64_t w, std::int64_t h, Rgb fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw ArgumentError("raster: negative dimensions");
  pixels.resize(3 * static_cast<std::size_t>(w * h));
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill[0];
    pixels[i + 1] = fill[1];
    pixels[i + 2] = fill[2];
  }
}

LabelMap::LabelMap(std::int64_t w, std::int64_t h, std::uint8_t fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw ArgumentError("label map: negative dimensions");
  labels.assign(static_cast<std::size_t>(w * h), fill);
}

namespace {

// libpng reports errors through longjmp. The functions that call setjmp keep
// only trivially destructible locals; every owning object lives in the caller.

constexpr std::uint32_t kMaxDimension = 1u << 15;

struct ReadState {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t offset = 0;
  char message[256] = {};
};

struct WriteState {
  std::vector<std::uint8_t>* out = nullptr;
  char message[256] = {};
};

void on_read_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<ReadState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s (at byte offset %zu)", msg, st->offset);
  png_longjmp(png, 1);
}

void on_write_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<WriteState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s", msg);
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void read_bytes(png_structp png, png_bytep dst, png_size_t len) {
  auto* st = static_cast<ReadState*>(png_get_io_ptr(png));
  if (len > st->size - st->offset) {
    st->offset = st->size;
    png_error(png, "unexpected end of data");
  }
  std::memcpy(dst, st->data + st->offset, len);
  st->offset += len;
}

void write_bytes(png_structp png, png_bytep src, png_size_t len) {
  auto* st = static_cast<WriteState*>(png_get_io_ptr(png));
  st->out->insert(st->out->end(), src, src + len);
}

void flush_bytes(png_structp) {}

struct DecodeOut {
  std::vector<std::uint8_t> pixels;
  std::vector<png_bytep> rows;
  std::int64_t width = 0;
  std::int64_t height = 0;
};

bool decode_impl(ReadState* st, DecodeOut* out) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, st, on_read_error, on_warning);
  if (png == nullptr) {
    std::snprintf(st->message, sizeof st->message, "cannot allocate decoder");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::snprintf(st->message, sizeof st->message, "cannot allocate decoder");
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, st, read_bytes);
  png_set_user_limits(png, kMaxDimension, kMaxDimension);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  if (png_get_rowbytes(png, info) != 3 * static_cast<std::size_t>(w))
    png_error(png, "unsupported pixel layout");
  out->width = w;
  out->height = h;
  out->pixels.resize(3 * static_cast<std::size_t>(w) * h);
  out->rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) out->rows[y] = out->pixels.data() + 3 * std::size_t{w} * y;
  png_read_image(png, out->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_impl(WriteState* st, png_uint_32 w, png_uint_32 h, int color, png_bytepp rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, st, on_write_error, on_warning);
  if (png == nullptr) {
    std::snprintf(st->message, sizeof st->message, "cannot allocate encoder");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    std::snprintf(st->message, sizeof st->message, "cannot allocate encoder");
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, st, write_bytes, flush_bytes);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, w, h, 8, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

std::vector<std::uint8_t> encode_rows(std::int64_t width, std::int64_t height, int color,
                                      int channels, const std::uint8_t* data) {
  if (width < 1 || height < 1 || width > kMaxDimension || height > kMaxDimension)
    throw ArgumentError("png: cannot encode a " + std::to_string(width) + "x" +
                        std::to_string(height) + " image");
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (std::int64_t y = 0; y < height; ++y)
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(data + static_cast<std::size_t>(y * width * channels));
  std::vector<std::uint8_t> out;
  WriteState st;
  st.out = &out;
  if (!encode_impl(&st, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), color,
                   rows.data()))
    throw IoError(std::string("png encode failed: ") + st.message);
  return out;
}

}  // namespace

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw IoError("png decode failed: not a PNG signature (at byte offset 0)");
  ReadState st;
  st.data = bytes.data();
  st.size = bytes.size();
  DecodeOut out;
  if (!decode_impl(&st, &out)) throw IoError(std::string("png decode failed: ") + st.message);
  RasterImage image;
  image.width = out.width;
  image.height = out.height;
  image.pixels = std::move(out.pixels);
  return image;
}

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  if (image.pixels.size() != 3 * image.pixel_count())
    throw ShapeError("png: raster buffer does not match its dimensions");
  return encode_rows(image.width, image.height, PNG_COLOR_TYPE_RGB, 3, image.pixels.data());
}

std::vector<std::uint8_t> encode_png_gray(std::int64_t width, std::int64_t height,
                                          std::span<const std::uint8_t> values) {
  if (width < 0 || height < 0 || values.size() != static_cast<std::size_t>(width * height))
    throw ShapeError("png: gray buffer does not match its dimensions");
  return encode_rows(width, height, PNG_COLOR_TYPE_GRAY, 1, values.data());
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read error on '" + path + "'");
  return bytes;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write error on '" + path + "'");
}

RasterImage load_png(const std::string& path) {
  const auto bytes = read_file(path);
  try {
    return decode_png(bytes);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

void save_png(const RasterImage& image, const std::string& path) {
  write_file(path, encode_png(image));
}

void save_png_gray(std::int64_t width, std::int64_t height, std::span<const std::uint8_t> values,
                   const std::string& path) {
  write_file(path, encode_png_gray(width, height, values));
}

}  // namespace mapseg
