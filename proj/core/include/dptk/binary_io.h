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

#ifndef DPTK_BINARY_IO_H_
#define DPTK_BINARY_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dptk {

// Little-endian writer; bytes are buffered and flushed by close().
class BinaryWriter {
 public:
  explicit BinaryWriter(std::filesystem::path path);

  void raw(std::string_view bytes);
  void u32(std::uint32_t value);
  void f64(double value);
  void f64s(std::span<const double> values);
  void close();

 private:
  std::filesystem::path path_;
  std::string buffer_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path);

  // Reads four bytes and fails with BadMagic unless they equal `magic`.
  void expect_magic(std::string_view magic);
  std::uint32_t u32();
  double f64();
  void f64s(std::span<double> out);
  void expect_end() const;

  std::size_t offset() const noexcept { return offset_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void require(std::size_t n) const;

  std::filesystem::path path_;
  std::vector<unsigned char> bytes_;
  std::size_t offset_ = 0;
};

}  // namespace dptk

#endif  // DPTK_BINARY_IO_H_
