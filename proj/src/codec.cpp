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

#include "robin/codec.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "robin/container.hpp"
#include "robin/error.hpp"
#include "robin/rng.hpp"

namespace robin {

Tensor PatchSequence::patch(std::size_t i) const {
  if (i >= count) throw ShapeError("patch index " + std::to_string(i) + " out of range");
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(i * patch_elems());
  return Tensor::from({length, channels},
                      std::vector<double>(first, first + static_cast<std::ptrdiff_t>(patch_elems())));
}

PatchSequence PatchSequence::prefix(std::size_t n) const {
  if (n > count) throw ShapeError("patch prefix longer than sequence");
  PatchSequence out{n, length, channels, {}, 0};
  out.values.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n * patch_elems()));
  return out;
}

void PatchSequence::append(const Tensor& patch) {
  if (patch.shape() != Shape{length, channels}) {
    throw ShapeError("patch shape " + shape_str(patch.shape()) + " does not match [" +
                     std::to_string(length) + "," + std::to_string(channels) + "]");
  }
  auto d = patch.data();
  values.insert(values.end(), d.begin(), d.end());
  ++count;
}

void CodecSpec::validate() const {
  if (frame_size == 0) throw ConfigError("codec: frame_size must be positive");
  if (channels == 0) throw ConfigError("codec: channels must be positive");
  if (channels != frame_size) {
    throw ConfigError("codec: channels (" + std::to_string(channels) +
                      ") must equal frame_size (" + std::to_string(frame_size) +
                      ") for an orthogonal codec");
  }
}

LatentCodec::LatentCodec(const CodecSpec& spec) : spec_(spec) {
  spec_.validate();
  const auto n = static_cast<Eigen::Index>(spec_.frame_size);
  Rng rng(Rng::derive(spec_.seed, "latent-codec"));
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  // Sign-normalize so the factorization (and hence the codec) is unique.
  for (Eigen::Index c = 0; c < n; ++c) {
    if (rmat(c, c) < 0) q.col(c) *= -1.0;
  }
  matrix_.resize(static_cast<std::size_t>(n * n));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) matrix_[static_cast<std::size_t>(r * n + c)] = q(r, c);
  }
}

LatentSequence LatentCodec::encode(const Waveform& w) const {
  if (w.samples.empty()) throw DataError("codec: cannot encode an empty waveform");
  const std::size_t fs = spec_.frame_size;
  const std::size_t k = spec_.channels;
  const std::size_t frames = (w.samples.size() + fs - 1) / fs;
  LatentSequence z{frames, k, std::vector<double>(frames * k, 0.0), w.samples.size()};
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t c = 0; c < k; ++c) {
      double acc = 0.0;
      for (std::size_t s = 0; s < fs; ++s) {
        const std::size_t idx = f * fs + s;
        if (idx < w.samples.size()) acc += matrix_[c * fs + s] * w.samples[idx];
      }
      z.values[f * k + c] = acc;
    }
  }
  return z;
}

Waveform LatentCodec::decode(const LatentSequence& z) const {
  const std::size_t fs = spec_.frame_size;
  const std::size_t k = spec_.channels;
  if (z.channels != k) {
    throw ShapeError("codec: latent has " + std::to_string(z.channels) + " channels, codec expects " +
                     std::to_string(k));
  }
  Waveform w;
  w.samples.assign(z.frames * fs, 0.0);
  for (std::size_t f = 0; f < z.frames; ++f) {
    for (std::size_t s = 0; s < fs; ++s) {
      double acc = 0.0;
      for (std::size_t c = 0; c < k; ++c) acc += matrix_[c * fs + s] * z.values[f * k + c];
      w.samples[f * fs + s] = acc;
    }
  }
  if (z.source_length != 0 && z.source_length < w.samples.size()) {
    w.samples.resize(z.source_length);
  }
  return w;
}

PatchSequence patchify(const LatentSequence& z, std::size_t patch_length) {
  if (patch_length == 0) throw ConfigError("patchify: patch length must be positive");
  const std::size_t count = (z.frames + patch_length - 1) / patch_length;
  PatchSequence m{count, patch_length, z.channels, z.values, z.source_length};
  m.values.resize(count * patch_length * z.channels, 0.0);
  return m;
}

LatentSequence unpatchify(const PatchSequence& m) {
  return {m.count * m.length, m.channels, m.values, m.source_length};
}

void write_waveform(const std::filesystem::path& path, const Waveform& w) {
  write_array(path, {{w.samples.size()}, w.samples, w.sample_rate});
}

Waveform read_waveform(const std::filesystem::path& path) {
  ArrayFile a = read_array(path);
  if (a.shape.size() != 1) throw DataError(path.string() + ": waveform must be rank 1");
  return {std::move(a.values), a.aux};
}

void write_latents(const std::filesystem::path& path, const LatentSequence& z) {
  write_array(path, {{z.frames, z.channels}, z.values, static_cast<std::uint32_t>(z.source_length)});
}

LatentSequence read_latents(const std::filesystem::path& path) {
  ArrayFile a = read_array(path);
  if (a.shape.size() != 2) throw DataError(path.string() + ": latents must be rank 2 [frames, k]");
  return {a.shape[0], a.shape[1], std::move(a.values), a.aux};
}

}  // namespace robin
