// Copyright 2026 The dp_toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPTK_RANDOM_H_
#define DPTK_RANDOM_H_

#include <array>
#include <cstdint>
#include <span>

namespace dptk {

// Philox4x32-10 block function (Salmon et al., SC'11). Pure: the same
// (counter, key) always yields the same four words.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key);
};

// Sequential uniform stream over a counter-based generator. Streams with
// different `stream` ids under one seed are independent.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal, Box-Muller on two fresh uniforms (cosine branch only).
  double normal();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  // Number of 32-bit words consumed so far.
  std::uint64_t position() const noexcept { return position_; }
  void seek(std::uint64_t position);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::uint64_t buffered_block_ = ~std::uint64_t{0};
  Philox4x32::Counter buffer_{};
};

// Gaussian noise stream for the sanitizer. The i-th draw is a pure function
// of (seed, i): block i/2 of the Philox stream feeds one Box-Muller pair and
// even/odd i take the cosine/sine branch.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed, std::uint64_t position = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t position() const noexcept { return position_; }

  double next();
  // Fills `out` with N(0, stddev^2) draws and advances the stream.
  void fill(std::span<double> out, double stddev = 1.0);

  static double normal_at(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t seed_;
  std::uint64_t position_;
};

}  // namespace dptk

#endif  // DPTK_RANDOM_H_
