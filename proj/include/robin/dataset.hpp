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

// Paired (text, video, latent) examples: synthetic task generation and the
// line-delimited manifest format.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "robin/codec.hpp"
#include "robin/config.hpp"
#include "robin/tensor.hpp"

namespace robin {

struct TextTokens {
  std::vector<int> ids;
  std::size_t vocab_size = 0;

  void validate() const;
};

/// [frames, dim] row-major framewise visual features.
struct VideoFeatures {
  std::size_t frames = 0;
  std::size_t dim = 0;
  std::vector<double> values;

  Tensor tensor() const;
  VideoFeatures zeroed() const;
};

struct Example {
  std::string id;
  TextTokens text;
  std::optional<VideoFeatures> video;
  LatentSequence latents;
};

struct ManifestRecord {
  std::string id;
  std::vector<int> text_ids;
  std::string video_path;  // empty when the example has no video
  std::string latent_path;

  bool operator==(const ManifestRecord&) const = default;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  /// Relative paths in records resolve against this directory.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& relative) const { return base_dir / relative; }
};

enum class TaskMode { TextOnly, TextVideo };

TaskMode parse_task_mode(const std::string& text);
const char* task_mode_name(TaskMode mode);

struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t count = 8;
  TaskMode mode = TaskMode::TextOnly;
  std::size_t vocab_size = 32;
  std::size_t text_len = 4;
  std::size_t video_frames = 2;
  std::size_t video_dim = 8;
  std::size_t n_patches = 4;
  std::size_t patch_size = 4;
  std::size_t channels = 8;
  std::size_t frame_size = 8;
  std::size_t text_pool = 2;

  void validate() const;
};

/// Deterministic examples whose targets are a fixed function of their
/// conditioning:
///   text part  = sum over tokens of a seeded per-token [F, k] signature,
///                scaled by 1/sqrt(text_len)
///   video part = seeded linear readout of the flattened features
/// text_only targets are the text part; text_video targets mix both parts
/// with weight sqrt(1/2) each. In text_video mode prompts are drawn from a
/// pool of `text_pool` prompts shared across examples.
std::vector<Example> synth_examples(const SynthSpec& spec);

/// Task spec implied by the data, model and codec sections of `cfg`.
SynthSpec synth_spec(const Config& cfg);

/// The target function alone, for checking functional determinism.
LatentSequence synth_target(const SynthSpec& spec, const TextTokens& text,
                            const std::optional<VideoFeatures>& video);

/// Writes latents/ and video/ containers plus manifest.jsonl under `dir`.
Manifest write_examples(const std::vector<Example>& examples, const std::filesystem::path& dir);
Manifest synth_task(const SynthSpec& spec, const std::filesystem::path& dir);

std::string serialize_manifest(const Manifest& m);
/// Parses records only; no file checks.
Manifest parse_manifest(const std::string& text, const std::string& origin);

void save_manifest(const Manifest& m, const std::filesystem::path& path);
/// Parses and verifies that every referenced file exists.
Manifest load_manifest(const std::filesystem::path& path);

std::vector<Example> load_examples(const Manifest& m, std::size_t vocab_size);

}  // namespace robin
