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

#include "mapseg/tensor.hpp"

#include "mapseg/error.hpp"

namespace mapseg {

std::size_t Shape4::count() const {
  if (n < 0 || c < 0 || h < 0 || w < 0) throw ShapeError("negative dimension in " + str());
  std::size_t total = 1;
  for (std::int64_t d : {n, c, h, w}) {
    if (__builtin_mul_overflow(total, static_cast<std::size_t>(d), &total))
      throw ShapeError("element count of " + str() + " overflows size_t");
  }
  if (total > std::numeric_limits<std::size_t>::max() / sizeof(double))
    throw ShapeError("element count of " + str() + " is not addressable");
  return total;
}

std::string Shape4::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Argument: return "argument";
    case ErrorKind::Config: return "config";
    case ErrorKind::State: return "state";
    case ErrorKind::Data: return "data";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Argument:
    case ErrorKind::Config:
      return 1;
    case ErrorKind::Shape:
    case ErrorKind::State:
    case ErrorKind::Data:
      return 2;
    case ErrorKind::Numeric:
      return 3;
    case ErrorKind::Io:
      return 4;
  }
  return 1;
}

}  // namespace mapseg
