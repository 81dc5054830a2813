// Copyright 2026 The Robin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Flat binary array container shared by latents, waveforms, video features
// and embedding sets. Layout (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "RBNA"
//   4       2     version (1)
//   6       2     dtype (1 = float64)
//   8       4     rank R
//   12      4     aux (sample rate for waveforms, unpadded sample count
//                 for latents, 0 otherwise)
//   16      8*R   extents, uint64 each
//   16+8R   8*N   row-major IEEE-754 binary64 values, N = product(extents)
//
// See docs/FORMATS.md.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "robin/tensor.hpp"

namespace robin {

inline constexpr char kArrayMagic[4] = {'R', 'B', 'N', 'A'};
inline constexpr std::uint16_t kArrayVersion = 1;
inline constexpr std::uint16_t kDtypeFloat64 = 1;

struct ArrayFile {
  Shape shape;
  std::vector<double> values;
  std::uint32_t aux = 0;
};

std::string encode_array(const ArrayFile& array);
/// `origin` names the source in error messages.
ArrayFile decode_array(std::string_view bytes, const std::string& origin);

void write_array(const std::filesystem::path& path, const ArrayFile& array);
ArrayFile read_array(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Little-endian append-only byte sink.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void bytes(std::string_view b) { out_.append(b); }
  /// u32 length then raw bytes.
  void str(std::string_view s);

  const std::string& buffer() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

/// Little-endian cursor; throws DataError on truncation.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string origin)
      : bytes_(bytes), origin_(std::move(origin)) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string_view bytes(std::size_t n);
  std::string str();

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& origin() const { return origin_; }

 private:
  std::uint64_t little(std::size_t n);

  std::string_view bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace robin
