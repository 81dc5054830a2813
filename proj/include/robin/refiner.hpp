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

// Patch refiner: a local diffusion transformer trained by conditional flow
// matching, and the Euler sampler with classifier-free guidance.
//
// Conventions (rectified flow):
//   x_t = (1 - t) x0 + t eps,   eps ~ N(0, I),   t in (0, 1)
//   target velocity d/dt x_t = eps - x0
//   sampling integrates from t = 1 (noise) to t = 0 (data): x <- x - h v

#pragma once

#include <vector>

#include "robin/config.hpp"
#include "robin/nn.hpp"

namespace robin {

class Rng;

/// Anything that predicts a velocity for a noisy patch.
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;
  /// x_t, prev: [p, k]; ctx: [c, d]. Returns [p, k].
  virtual Tensor velocity(const Tensor& x_t, double t, const Tensor& ctx, const Tensor& prev) const = 0;
  /// Context substituted when conditioning is dropped.
  virtual Tensor null_context() const = 0;
};

/// t = sigmoid(z), z ~ N(0, 1).
double sample_timestep(Rng& rng);

/// Draw order per call: z for t, then eps (row-major), then one uniform for
/// the conditioning drop decision.
Tensor flow_loss(const VelocityModel& model, const Tensor& x0, const Tensor& ctx, const Tensor& prev,
                 const FlowConfig& flow, Rng& rng);

/// Guided Euler integration of `model` from fresh noise. With cfg_scale == 1
/// only conditional evaluations are made.
Tensor euler_sample(const VelocityModel& model, const Tensor& ctx, const Tensor& prev,
                    const FlowConfig& flow, Rng& rng);

/// Same integration starting from a given noise tensor.
Tensor euler_integrate(const VelocityModel& model, Tensor x, const Tensor& ctx, const Tensor& prev,
                       const FlowConfig& flow);

class DitBlock {
 public:
  DitBlock() = default;
  DitBlock(std::size_t width, std::size_t heads, std::size_t mlp_ratio, Rng& rng);

  /// `cond` is the activated timestep embedding, [1, width].
  Tensor operator()(const Tensor& x, const Tensor& cond, const AttentionMask& mask) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Linear modulation_;  // width -> 6 width, zero-initialized
  MultiHeadAttention attn_;
  Mlp mlp_;
};

/// Token sequence: [context rows | previous-patch frames | noisy frames], all
/// mutually visible. Timesteps enter through adaptive layer-norm shift,
/// scale and gate on every block.
class LocDiT : public VelocityModel {
 public:
  LocDiT() = default;
  LocDiT(const ModelConfig& cfg, std::size_t channels, Rng& rng);

  Tensor velocity(const Tensor& x_t, double t, const Tensor& ctx, const Tensor& prev) const override;
  Tensor null_context() const override { return null_ctx_; }

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  Linear frame_in_;
  Linear ctx_in_;
  Tensor segment_table_;  // [3, d]: context, previous, noisy
  Linear time_fc1_;
  Linear time_fc2_;
  std::vector<DitBlock> blocks_;
  Linear final_modulation_;  // width -> 2 width, zero-initialized
  Linear out_;               // width -> channels, zero-initialized
  Tensor null_ctx_;          // [null_len, d]
};

}  // namespace robin
