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

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace robin {

/// Deterministic random stream.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distributions are implemented here rather than taken from
/// <random> because the standard leaves their algorithms unspecified:
///   uniform(): top 53 bits scaled by 2^-53, in [0, 1)
///   normal():  Box-Muller, cosine branch only, one normal per two words
///   index(n):  multiply-shift of one 64-bit word
/// Identical seeds therefore produce identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Seed for an independent stream derived from (seed, tag).
  static std::uint64_t derive(std::uint64_t seed, std::string_view tag);

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();
  std::size_t index(std::size_t n);

  /// Full engine state as text; set_state(state()) restores the stream.
  std::string state() const;
  void set_state(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a. Stable across platforms; used for config hashes.
std::uint64_t fnv1a64(std::string_view bytes);

std::string hex64(std::uint64_t value);

}  // namespace robin
