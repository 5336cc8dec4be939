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

#include <array>
#include <cstdint>

namespace mapseg {

/// SplitMix64 step. Used to expand a 64-bit seed into generator state and to
/// derive independent child seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Portable pseudo-random generator: xoshiro256** with state filled by
/// SplitMix64 from the seed. All derived draws (uniform, integer, normal) are
/// computed with explicit arithmetic so the stream is identical on every
/// platform; nothing here touches <random> distributions.
///
///   uniform01()      top 53 bits of next_u64() scaled by 2^-53, in [0, 1)
///   uniform_int(n)   rejection sampling on next_u64(), unbiased, in [0, n)
///   normal()         Box-Muller on two uniform01() draws, cosine branch only
///   split()          new Rng seeded with next_u64() of this one
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  double uniform01();
  double uniform(double lo, double hi);
  std::uint64_t uniform_int(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev);
  Rng split();

  bool operator==(const Rng&) const = default;

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Seed for the i-th child of a parent seed; a pure function so corpus samples
/// can be generated in any order.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

}  // namespace mapseg
