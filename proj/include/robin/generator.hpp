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

// Full model and the patch-by-patch generation loop.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "robin/ar_head.hpp"
#include "robin/codec.hpp"
#include "robin/config.hpp"
#include "robin/dataset.hpp"
#include "robin/refiner.hpp"

namespace robin {

class RobinModel {
 public:
  RobinModel(const ModelConfig& cfg, std::size_t channels, std::uint64_t seed);

  /// Adds the stage-2 video projection, initialized from `seed`.
  void enable_video(std::uint64_t seed);
  bool has_video() const { return ar_.has_video(); }

  ArHead& ar() { return ar_; }
  const ArHead& ar() const { return ar_; }
  LocDiT& refiner() { return refiner_; }
  const LocDiT& refiner() const { return refiner_; }
  /// Learned stand-in for the patch before the first one, [p, k].
  const Tensor& bos() const { return bos_; }

  const ModelConfig& config() const { return cfg_; }
  std::size_t channels() const { return channels_; }
  std::size_t patch_size() const { return cfg_.patch_size; }

  /// Every trainable tensor, names unique and stable.
  ParamList params() const;

 private:
  ModelConfig cfg_;
  std::size_t channels_;
  ArHead ar_;
  LocDiT refiner_;
  Tensor bos_;
};

struct GenerationRequest {
  TextTokens text;
  std::optional<VideoFeatures> video;
  std::size_t n_patches = 1;
  FlowConfig flow;
  std::uint64_t seed = 0;
};

struct GenerationResult {
  PatchSequence patches;
  LatentSequence latents;
  Waveform waveform;
  std::vector<double> per_patch_ms;
  /// History rows the planner saw when producing each patch.
  std::vector<std::size_t> history_lengths;
};

/// For i = 1..n: plan from (video, text, m_1..m_{i-1}), sample m_i from
/// the refiner with m_{i-1} (BOS for i = 1), append. Then decode.
GenerationResult generate(const GenerationRequest& req, const RobinModel& model,
                          const LatentCodec& codec);

/// Per-patch flow-matching losses with ground-truth history. The planner
/// runs once over the full history; patch i uses the first
/// prefix + (i - 1) planning rows, which the prefix-causal mask makes equal
/// to a separate run with i - 1 history patches.
std::vector<Tensor> teacher_forced_losses(const Example& example, const RobinModel& model,
                                          const FlowConfig& flow, Rng& rng);

/// Same with an arbitrary velocity model standing in for the refiner.
std::vector<Tensor> teacher_forced_losses(const Example& example, const ArHead& planner,
                                          const VelocityModel& refiner, const Tensor& bos,
                                          std::size_t patch_size, const FlowConfig& flow, Rng& rng);

/// Mean of teacher_forced_losses.
Tensor teacher_forced_loss(const Example& example, const RobinModel& model, const FlowConfig& flow,
                           Rng& rng);

}  // namespace robin
