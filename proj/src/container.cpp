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

#include "robin/container.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <limits>

#include "robin/error.hpp"

namespace robin {

void ByteWriter::u16(std::uint16_t v) {
  for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes(s);
}

std::uint64_t ByteReader::little(std::size_t n) {
  if (remaining() < n) {
    throw DataError(origin_ + ": truncated at byte " + std::to_string(pos_));
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
  }
  pos_ += n;
  return v;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(little(1)); }
std::uint16_t ByteReader::u16() { return static_cast<std::uint16_t>(little(2)); }
std::uint32_t ByteReader::u32() { return static_cast<std::uint32_t>(little(4)); }
std::uint64_t ByteReader::u64() { return little(8); }
double ByteReader::f64() { return std::bit_cast<double>(little(8)); }

std::string_view ByteReader::bytes(std::size_t n) {
  if (remaining() < n) {
    throw DataError(origin_ + ": truncated at byte " + std::to_string(pos_));
  }
  auto out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::str() {
  const std::uint32_t n = u32();
  return std::string(bytes(n));
}

std::string encode_array(const ArrayFile& array) {
  if (shape_numel(array.shape) != array.values.size()) {
    throw ShapeError("container: shape " + shape_str(array.shape) + " does not hold " +
                     std::to_string(array.values.size()) + " values");
  }
  ByteWriter w;
  w.bytes(std::string_view(kArrayMagic, 4));
  w.u16(kArrayVersion);
  w.u16(kDtypeFloat64);
  w.u32(static_cast<std::uint32_t>(array.shape.size()));
  w.u32(array.aux);
  for (std::size_t e : array.shape) w.u64(e);
  for (double v : array.values) w.f64(v);
  return w.take();
}

ArrayFile decode_array(std::string_view bytes, const std::string& origin) {
  ByteReader r(bytes, origin);
  if (r.bytes(4) != std::string_view(kArrayMagic, 4)) {
    throw DataError(origin + ": not an array container (bad magic)");
  }
  const std::uint16_t version = r.u16();
  if (version != kArrayVersion) {
    throw DataError(origin + ": unsupported container version " + std::to_string(version));
  }
  const std::uint16_t dtype = r.u16();
  if (dtype != kDtypeFloat64) {
    throw DataError(origin + ": unsupported dtype code " + std::to_string(dtype));
  }
  const std::uint32_t rank = r.u32();
  ArrayFile out;
  out.aux = r.u32();
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint64_t e = r.u64();
    if (e == 0 || e > std::numeric_limits<std::uint32_t>::max()) {
      throw DataError(origin + ": invalid extent " + std::to_string(e));
    }
    out.shape.push_back(static_cast<std::size_t>(e));
    count *= static_cast<std::size_t>(e);
  }
  if (r.remaining() != count * 8) {
    throw DataError(origin + ": payload holds " + std::to_string(r.remaining()) +
                    " bytes, shape " + shape_str(out.shape) + " needs " + std::to_string(count * 8));
  }
  out.values.resize(count);
  for (double& v : out.values) v = r.f64();
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_array(const std::filesystem::path& path, const ArrayFile& array) {
  write_file(path, encode_array(array));
}

ArrayFile read_array(const std::filesystem::path& path) {
  return decode_array(read_file(path), path.string());
}

}  // namespace robin
