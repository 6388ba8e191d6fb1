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

#include "dptk/binary_io.h"

#include <bit>
#include <fstream>
#include <iterator>

#include "dptk/error.h"

namespace dptk {

BinaryWriter::BinaryWriter(std::filesystem::path path) : path_(std::move(path)) {}

void BinaryWriter::raw(std::string_view bytes) { buffer_.append(bytes); }

void BinaryWriter::u32(std::uint32_t value) {
  for (int i = 0; i < 4; ++i) {
    buffer_.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

void BinaryWriter::f64(double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    buffer_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

void BinaryWriter::f64s(std::span<const double> values) {
  buffer_.reserve(buffer_.size() + 8 * values.size());
  for (double v : values) f64(v);
}

void BinaryWriter::close() {
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path_.string());
  out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  if (!out) fail(ErrorCode::kIoError, "short write to " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  bytes_.assign(std::istreambuf_iterator<char>(in), {});
}

void BinaryReader::require(std::size_t n) const {
  if (offset_ + n > bytes_.size()) {
    fail(ErrorCode::kTruncatedFile,
         path_.string() + ": need " + std::to_string(n) + " bytes at offset " +
             std::to_string(offset_) + ", file has " +
             std::to_string(bytes_.size()));
  }
}

void BinaryReader::expect_magic(std::string_view magic) {
  require(magic.size());
  const std::string_view found(reinterpret_cast<const char*>(bytes_.data()) + offset_,
                               magic.size());
  if (found != magic) {
    fail(ErrorCode::kBadMagic, path_.string() + ": expected magic \"" +
                                   std::string(magic) + "\" at offset " +
                                   std::to_string(offset_));
  }
  offset_ += magic.size();
}

std::uint32_t BinaryReader::u32() {
  require(4);
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) {
    value |= std::uint32_t{bytes_[offset_ + i]} << (8 * i);
  }
  offset_ += 4;
  return value;
}

double BinaryReader::f64() {
  require(8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= std::uint64_t{bytes_[offset_ + i]} << (8 * i);
  }
  offset_ += 8;
  return std::bit_cast<double>(bits);
}

void BinaryReader::f64s(std::span<double> out) {
  require(8 * out.size());
  for (double& v : out) v = f64();
}

void BinaryReader::expect_end() const {
  if (offset_ != bytes_.size()) {
    fail(ErrorCode::kCountMismatch, path_.string() + ": " +
                                  std::to_string(bytes_.size() - offset_) +
                                  " trailing bytes after offset " +
                                  std::to_string(offset_));
  }
}

}  // namespace dptk
