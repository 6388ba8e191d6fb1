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

#include "dptk/random.h"

#include <cmath>
#include <numbers>

#include "dptk/error.h"

namespace dptk {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

// Tag placed in counter word 2 so the noise stream never collides with
// CounterRng streams of the same seed.
constexpr std::uint32_t kNoiseStreamTag = 0x6E6F6973;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product = std::uint64_t{a} * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

Philox4x32::Key key_from_seed(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed),
          static_cast<std::uint32_t>(seed >> 32)};
}

inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline std::uint64_t join(std::uint32_t hi, std::uint32_t lo) {
  return (std::uint64_t{hi} << 32) | lo;
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {}

void CounterRng::seek(std::uint64_t position) { position_ = position; }

std::uint32_t CounterRng::next_u32() {
  const std::uint64_t block = position_ >> 2;
  if (block != buffered_block_) {
    buffer_ = Philox4x32::generate(
        {static_cast<std::uint32_t>(block),
         static_cast<std::uint32_t>(block >> 32),
         static_cast<std::uint32_t>(stream_),
         static_cast<std::uint32_t>(stream_ >> 32)},
        key_from_seed(seed_));
    buffered_block_ = block;
  }
  return buffer_[position_++ & 3];
}

std::uint64_t CounterRng::next_u64() {
  const std::uint32_t hi = next_u32();
  const std::uint32_t lo = next_u32();
  return join(hi, lo);
}

double CounterRng::uniform() { return to_unit(next_u64()); }

double CounterRng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  if (bound == 0) fail(ErrorCode::kDomainError, "below() needs a positive bound");
  if (bound == 1) return 0;
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

NoiseSource::NoiseSource(std::uint64_t seed, std::uint64_t position)
    : seed_(seed), position_(position) {}

double NoiseSource::normal_at(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t block = index >> 1;
  const auto words = Philox4x32::generate(
      {static_cast<std::uint32_t>(block),
       static_cast<std::uint32_t>(block >> 32), kNoiseStreamTag, 0},
      key_from_seed(seed));
  const double u1 = 1.0 - to_unit(join(words[0], words[1]));
  const double u2 = to_unit(join(words[2], words[3]));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (index & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
}

double NoiseSource::next() { return normal_at(seed_, position_++); }

void NoiseSource::fill(std::span<double> out, double stddev) {
  std::size_t i = 0;
  // Odd starting position: finish the pending pair first.
  if ((position_ & 1) && i < out.size()) {
    out[i++] = stddev * next();
  }
  const auto key = key_from_seed(seed_);
  for (; i + 1 < out.size(); i += 2) {
    const std::uint64_t block = position_ >> 1;
    const auto words = Philox4x32::generate(
        {static_cast<std::uint32_t>(block),
         static_cast<std::uint32_t>(block >> 32), kNoiseStreamTag, 0},
        key);
    const double u1 = 1.0 - to_unit(join(words[0], words[1]));
    const double u2 = to_unit(join(words[2], words[3]));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] = stddev * (radius * std::cos(angle));
    out[i + 1] = stddev * (radius * std::sin(angle));
    position_ += 2;
  }
  if (i < out.size()) out[i] = stddev * next();
}

}  // namespace dptk
