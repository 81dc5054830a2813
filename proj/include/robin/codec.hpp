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

// Fixed latent codec standing in for a frozen audio autoencoder, plus the
// patch view of a latent sequence.
//
// The codec cuts a waveform into non-overlapping frames of `frame_size`
// samples and maps each frame through one seeded orthogonal matrix, so it is
// exactly invertible and norm preserving.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "robin/tensor.hpp"

namespace robin {

struct Waveform {
  std::vector<double> samples;
  std::uint32_t sample_rate = 48000;  // metadata only
};

/// [frames, channels] row-major.
struct LatentSequence {
  std::size_t frames = 0;
  std::size_t channels = 0;
  std::vector<double> values;
  /// Samples before right-padding; 0 means "no trimming on decode".
  std::size_t source_length = 0;

  double at(std::size_t frame, std::size_t channel) const { return values[frame * channels + channel]; }
};

/// [count, length, channels] row-major: patch i holds frames i*length ..
/// (i+1)*length - 1.
struct PatchSequence {
  std::size_t count = 0;
  std::size_t length = 0;
  std::size_t channels = 0;
  std::vector<double> values;
  std::size_t source_length = 0;

  std::size_t patch_elems() const { return length * channels; }
  /// Patch i as a [length, channels] tensor (no history).
  Tensor patch(std::size_t i) const;
  /// First `n` patches.
  PatchSequence prefix(std::size_t n) const;
  void append(const Tensor& patch);
};

struct CodecSpec {
  std::size_t frame_size = 8;
  std::size_t channels = 8;
  std::uint64_t seed = 0;

  /// Throws ConfigError; channels must equal frame_size.
  void validate() const;
};

class LatentCodec {
 public:
  explicit LatentCodec(const CodecSpec& spec);

  LatentSequence encode(const Waveform& w) const;
  Waveform decode(const LatentSequence& z) const;

  const CodecSpec& spec() const { return spec_; }
  /// [channels, frame_size] row-major; latent = matrix * frame.
  const std::vector<double>& matrix() const { return matrix_; }

 private:
  CodecSpec spec_;
  std::vector<double> matrix_;
};

/// Right-pads with zero frames to a multiple of `patch_length`.
PatchSequence patchify(const LatentSequence& z, std::size_t patch_length);
LatentSequence unpatchify(const PatchSequence& m);

void write_waveform(const std::filesystem::path& path, const Waveform& w);
Waveform read_waveform(const std::filesystem::path& path);
void write_latents(const std::filesystem::path& path, const LatentSequence& z);
LatentSequence read_latents(const std::filesystem::path& path);

}  // namespace robin
