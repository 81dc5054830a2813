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

#include "robin/refiner.hpp"

#include <array>
#include <cmath>

#include "robin/error.hpp"
#include "robin/rng.hpp"

namespace robin {

namespace {

constexpr double kTimeScale = 1000.0;

Tensor modulate(const Tensor& normed, const Tensor& shift, const Tensor& scale_vec) {
  return add(mul(normed, add_scalar(scale_vec, 1.0)), shift);
}

}  // namespace

double sample_timestep(Rng& rng) {
  const double z = rng.normal();
  return 1.0 / (1.0 + std::exp(-z));
}

Tensor flow_loss(const VelocityModel& model, const Tensor& x0, const Tensor& ctx, const Tensor& prev,
                 const FlowConfig& flow, Rng& rng) {
  const double t = sample_timestep(rng);
  const Tensor eps = Tensor::randn(x0.shape(), rng);
  const bool drop = rng.uniform() < flow.cond_drop_prob;

  const Tensor x_t = add(scale(x0, 1.0 - t), scale(eps, t));
  const Tensor target = sub(eps, x0);
  const Tensor v = model.velocity(x_t, t, drop ? model.null_context() : ctx, prev);
  const Tensor diff = sub(v, target);
  return mean(mul(diff, diff));
}

Tensor euler_integrate(const VelocityModel& model, Tensor x, const Tensor& ctx, const Tensor& prev,
                       const FlowConfig& flow) {
  flow.validate();
  NoGradGuard no_grad;
  const std::size_t steps = flow.euler_steps;
  const double h = 1.0 / static_cast<double>(steps);
  const bool guided = flow.cfg_scale != 1.0;
  const Tensor null_ctx = guided ? model.null_context() : Tensor{};
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = 1.0 - static_cast<double>(s) * h;
    Tensor v = model.velocity(x, t, ctx, prev);
    if (guided) {
      const Tensor v_uncond = model.velocity(x, t, null_ctx, prev);
      v = add(v_uncond, scale(sub(v, v_uncond), flow.cfg_scale));
    }
    x = sub(x, scale(v, h));
  }
  return x;
}

Tensor euler_sample(const VelocityModel& model, const Tensor& ctx, const Tensor& prev,
                    const FlowConfig& flow, Rng& rng) {
  return euler_integrate(model, Tensor::randn(prev.shape(), rng), ctx, prev, flow);
}

// ---- DitBlock ----

DitBlock::DitBlock(std::size_t width, std::size_t heads, std::size_t mlp_ratio, Rng& rng)
    : modulation_(Linear::zeros(width, 6 * width)), attn_(width, heads, rng), mlp_(width, mlp_ratio, rng) {}

Tensor DitBlock::operator()(const Tensor& x, const Tensor& cond, const AttentionMask& mask) const {
  const std::size_t w = x.dim(1);
  const Tensor mod = modulation_(cond);
  const Tensor shift1 = row_segment(mod, 0, w);
  const Tensor scale1 = row_segment(mod, w, 2 * w);
  const Tensor gate1 = row_segment(mod, 2 * w, 3 * w);
  const Tensor shift2 = row_segment(mod, 3 * w, 4 * w);
  const Tensor scale2 = row_segment(mod, 4 * w, 5 * w);
  const Tensor gate2 = row_segment(mod, 5 * w, 6 * w);

  const Tensor h = add(x, mul(attn_(modulate(layernorm(x, {}, {}), shift1, scale1), mask), gate1));
  return add(h, mul(mlp_(modulate(layernorm(h, {}, {}), shift2, scale2)), gate2));
}

void DitBlock::collect(const std::string& prefix, ParamList& out) const {
  modulation_.collect(prefix + ".modulation", out);
  attn_.collect(prefix + ".attn", out);
  mlp_.collect(prefix + ".mlp", out);
}

// ---- LocDiT ----

LocDiT::LocDiT(const ModelConfig& cfg, std::size_t channels, Rng& rng)
    : width_(cfg.d),
      channels_(channels),
      frame_in_(Linear::init(channels, cfg.d, rng)),
      ctx_in_(Linear::init(cfg.d, cfg.d, rng)),
      segment_table_(param_randn({3, cfg.d}, rng, 0.02)),
      time_fc1_(Linear::init(cfg.d, cfg.d, rng)),
      time_fc2_(Linear::init(cfg.d, cfg.d, rng)),
      final_modulation_(Linear::zeros(cfg.d, 2 * cfg.d)),
      out_(Linear::zeros(cfg.d, channels)),
      null_ctx_(param_randn({cfg.null_len, cfg.d}, rng, 0.02)) {
  blocks_.reserve(cfg.n_dit);
  for (std::size_t i = 0; i < cfg.n_dit; ++i) blocks_.emplace_back(cfg.d, cfg.heads, cfg.mlp_ratio, rng);
}

Tensor LocDiT::velocity(const Tensor& x_t, double t, const Tensor& ctx, const Tensor& prev) const {
  if (!(t >= 0.0 && t <= 1.0)) throw ContractError("locdit: timestep outside [0, 1]");
  if (x_t.rank() != 2 || x_t.dim(1) != channels_ || x_t.shape() != prev.shape()) {
    throw ShapeError("locdit: noisy patch " + shape_str(x_t.shape()) + " and previous patch " +
                     shape_str(prev.shape()) + " must both be [p, " + std::to_string(channels_) + "]");
  }
  if (ctx.rank() != 2 || ctx.dim(1) != width_) {
    throw ShapeError("locdit: context " + shape_str(ctx.shape()) + " is not [*, " +
                     std::to_string(width_) + "]");
  }
  const std::size_t n_ctx = ctx.dim(0);
  const std::size_t p = x_t.dim(0);
  const std::size_t total = n_ctx + 2 * p;

  auto segment = [&](std::size_t s) { return row_segment(slice_rows(segment_table_, s, s + 1), 0, width_); };
  const std::array<Tensor, 3> parts{add(ctx_in_(ctx), segment(0)), add(frame_in_(prev), segment(1)),
                                    add(frame_in_(x_t), segment(2))};
  Tensor h = add(concat_rows(parts), sinusoidal_positions(total, width_));

  const Tensor cond = gelu(time_fc2_(gelu(time_fc1_(sinusoidal_scalar(t * kTimeScale, width_)))));
  const AttentionMask mask = AttentionMask::full(total);
  for (const DitBlock& block : blocks_) h = block(h, cond, mask);

  const Tensor mod = final_modulation_(cond);
  h = modulate(layernorm(h, {}, {}), row_segment(mod, 0, width_), row_segment(mod, width_, 2 * width_));
  return out_(slice_rows(h, n_ctx + p, total));
}

void LocDiT::collect(const std::string& prefix, ParamList& out) const {
  frame_in_.collect(prefix + ".frame_in", out);
  ctx_in_.collect(prefix + ".ctx_in", out);
  out.push_back({prefix + ".segment_table", segment_table_});
  time_fc1_.collect(prefix + ".time_fc1", out);
  time_fc2_.collect(prefix + ".time_fc2", out);
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  final_modulation_.collect(prefix + ".final_modulation", out);
  out_.collect(prefix + ".out", out);
  out.push_back({prefix + ".null_ctx", null_ctx_});
}

}  // namespace robin
