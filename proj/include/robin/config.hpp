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

// Run configuration.
//
// File format: INI-style sections with `key = value` lines; `#` and `;`
// start comments. Every key has a default, unknown sections or keys are
// rejected. Example:
//
//   [model]
//   d = 32
//   heads = 2
//   [flow]
//   cfg_scale = 2.0
//
// The full key list with defaults is in docs/CONFIG.md and is what
// `Config{}.canonical()` prints.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "robin/codec.hpp"

namespace robin {

struct ModelConfig {
  std::size_t vocab_size = 32;
  std::size_t d = 32;
  std::size_t heads = 2;
  std::size_t mlp_ratio = 4;
  std::size_t n_sem = 2;
  std::size_t n_rite = 1;
  std::size_t n_ale = 1;
  std::size_t n_dit = 2;
  std::size_t d_q = 16;
  std::size_t fsq_levels = 4;   // L
  double fsq_step = 0.25;       // Delta
  std::size_t video_dim = 8;    // d_v
  std::size_t null_len = 1;     // unconditional context length
  std::size_t patch_size = 4;   // p

  void validate() const;
};

struct FlowConfig {
  std::size_t euler_steps = 20;
  double cfg_scale = 2.0;
  double cond_drop_prob = 0.1;

  void validate() const;
};

struct TrainConfig {
  int stage = 1;
  std::size_t steps = 2000;
  std::size_t batch_size = 4;
  double peak_lr = 2e-3;
  double warmup_frac = 0.10;
  double weight_decay = 0.01;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
  std::size_t eval_every = 50;

  void validate() const;
};

struct DataConfig {
  std::string mode = "text_only";  // text_only | text_video
  std::size_t count = 8;
  std::size_t text_len = 4;
  std::size_t video_frames = 2;
  std::size_t n_patches = 4;
  /// Distinct prompts in text_video mode; examples share prompts so the
  /// video path carries information text cannot.
  std::size_t text_pool = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PathsConfig {
  std::string manifest;
  std::string checkpoint;
  std::string out;
};

struct Config {
  ModelConfig model;
  CodecSpec codec;
  FlowConfig flow;
  TrainConfig train;
  DataConfig data;
  PathsConfig paths;

  static Config parse(std::string_view text, const std::string& origin = "config");
  static Config load(const std::filesystem::path& path);
  /// Named presets: "desk" (defaults), "paper-stage1", "paper-stage2".
  static Config preset(std::string_view name);

  /// Sets section.key from text; throws ConfigError on unknown key or bad value.
  void set(std::string_view section, std::string_view key, std::string_view value);
  void validate() const;

  /// Sorted `section.key = value` lines covering every key.
  std::string canonical() const;
  std::uint64_t hash() const;
  /// Hash of the sections that fix parameter shapes (model, codec).
  std::uint64_t model_hash() const;
};

}  // namespace robin
