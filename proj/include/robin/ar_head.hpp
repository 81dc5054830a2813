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

// Autoregressive planner.
//
// Conditioning and history are fused into one sequence
//
//     [ video frames | text tokens | history patches ]
//
// which a prefix-LM transformer (SemanticLM) turns into a semantic sequence.
// That sequence is squeezed through a finite scalar quantization bottleneck,
// and a residual transformer (RITE) adds back detail:
//
//     E_d = up(fsq(down(E_s)))
//     E_p = E_d + RITE(E_d)
//
// Attention is bidirectional inside the conditioning prefix and causal over
// history positions, so the plan for patch i is a prefix of the plan for any
// later patch.

#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "robin/codec.hpp"
#include "robin/config.hpp"
#include "robin/dataset.hpp"
#include "robin/nn.hpp"

namespace robin {

/// Per-call record of quantization offsets (q - z). In Record mode each
/// quantize() call appends its offsets; in Replay mode quantize() returns
/// z + recorded offset, a smooth function of z whose derivative equals the
/// straight-through gradient. Used by finite-difference gradient checks.
struct FsqOffsetTape {
  enum class Mode { Record, Replay };
  Mode mode = Mode::Record;
  std::vector<std::vector<double>> offsets;
  std::size_t cursor = 0;
};

class FsqLayer {
 public:
  FsqLayer() = default;
  FsqLayer(std::size_t width, std::size_t bottleneck, std::size_t levels, double step, Rng& rng);

  /// step * clip(round(z / step), -levels, levels)
  static double quantize_value(double z, double step, std::size_t levels);

  Tensor down(const Tensor& x) const { return down_(x); }
  /// Grid values forward, identity gradient.
  Tensor quantize(const Tensor& z) const;
  Tensor up(const Tensor& q) const { return up_(q); }
  Tensor operator()(const Tensor& x) const { return up(quantize(down(x))); }

  double step() const { return step_; }
  std::size_t levels() const { return levels_; }
  std::size_t bottleneck() const { return down_.out_features(); }

  void set_offset_tape(std::shared_ptr<FsqOffsetTape> tape) { tape_ = std::move(tape); }
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Linear down_;
  Linear up_;
  std::size_t levels_ = 4;
  double step_ = 0.25;
  std::shared_ptr<FsqOffsetTape> tape_;
};

/// Residual branch: transformer stack followed by a linear read-out.
class RiteEncoder {
 public:
  RiteEncoder() = default;
  RiteEncoder(const ModelConfig& cfg, Rng& rng);

  Tensor operator()(const Tensor& x, const AttentionMask& mask) const;
  /// Zeroes the read-out so the branch outputs exactly 0.
  void zero_output();
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  TransformerStack stack_;
  Linear out_;
};

/// Encodes each latent patch independently: frames are projected to the
/// model width, a learned summary token is prepended, and the summary
/// token's output after a small transformer is the patch embedding.
class AudioLatentEncoder {
 public:
  AudioLatentEncoder() = default;
  AudioLatentEncoder(const ModelConfig& cfg, std::size_t channels, Rng& rng);

  /// [length, channels] -> [1, d]
  Tensor encode_patch(const Tensor& patch) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Linear in_;
  Tensor summary_;  // [1, d]
  TransformerStack stack_;
};

struct Segments {
  std::size_t video = 0;
  std::size_t text = 0;
  std::size_t history = 0;

  std::size_t prefix() const { return video + text; }
  std::size_t total() const { return video + text + history; }
};

struct FusedInput {
  Tensor sequence;  // [total, d]
  Segments segments;
};

struct PlanOutput {
  Tensor semantic;    // E_s
  Tensor bottleneck;  // down(E_s), pre-quantization
  Tensor quantized;   // grid values in the bottleneck space
  Tensor discrete;    // E_d
  Tensor planning;    // E_p
  Segments segments;
};

class ArHead {
 public:
  ArHead() = default;
  ArHead(const ModelConfig& cfg, std::size_t channels, Rng& rng);

  /// Adds a freshly initialized video projection.
  void enable_video(Rng& rng);
  bool has_video() const { return video_proj_.weight.defined(); }

  /// [t, d_v] -> [t, d]
  Tensor project_video(const Tensor& features) const;
  Tensor embed_text(const TextTokens& text) const;
  /// One row per history patch; undefined tensor when history is empty.
  Tensor encode_history(const PatchSequence& history) const;
  /// Concatenates video, text, history (each may be undefined except text),
  /// adds segment-type and sinusoidal position embeddings.
  FusedInput fuse(const Tensor& video, const Tensor& text, const Tensor& history) const;
  Tensor semantic(const FusedInput& fused) const;

  PlanOutput plan(const TextTokens& text, const std::optional<VideoFeatures>& video,
                  const PatchSequence& history) const;

  FsqLayer& fsq() { return fsq_; }
  const FsqLayer& fsq() const { return fsq_; }
  RiteEncoder& rite() { return rite_; }
  const AudioLatentEncoder& audio_encoder() const { return audio_; }
  const ModelConfig& config() const { return cfg_; }

  void collect(ParamList& out) const;

 private:
  ModelConfig cfg_;
  std::size_t channels_ = 0;
  Linear video_proj_;  // absent until enable_video()
  Tensor token_table_;
  Tensor segment_table_;  // [3, d]: video, text, history
  AudioLatentEncoder audio_;
  TransformerStack semantic_lm_;
  FsqLayer fsq_;
  RiteEncoder rite_;
};

}  // namespace robin
