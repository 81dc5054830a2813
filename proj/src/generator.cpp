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

#include "robin/generator.hpp"

#include <chrono>
#include <cmath>

#include "robin/error.hpp"
#include "robin/rng.hpp"

namespace robin {

namespace {

ArHead make_ar(const ModelConfig& cfg, std::size_t channels, std::uint64_t seed) {
  Rng rng(Rng::derive(seed, "ar-head"));
  return ArHead(cfg, channels, rng);
}

LocDiT make_refiner(const ModelConfig& cfg, std::size_t channels, std::uint64_t seed) {
  Rng rng(Rng::derive(seed, "refiner"));
  return LocDiT(cfg, channels, rng);
}

}  // namespace

RobinModel::RobinModel(const ModelConfig& cfg, std::size_t channels, std::uint64_t seed)
    : cfg_(cfg),
      channels_(channels),
      ar_(make_ar(cfg, channels, seed)),
      refiner_(make_refiner(cfg, channels, seed)),
      bos_(param_zeros({cfg.patch_size, channels})) {}

void RobinModel::enable_video(std::uint64_t seed) {
  Rng rng(Rng::derive(seed, "video-projection"));
  ar_.enable_video(rng);
}

ParamList RobinModel::params() const {
  ParamList out;
  ar_.collect(out);
  refiner_.collect("refiner", out);
  out.push_back({"bos", bos_});
  return out;
}

GenerationResult generate(const GenerationRequest& req, const RobinModel& model,
                          const LatentCodec& codec) {
  if (req.n_patches == 0) throw ConfigError("generate: n_patches must be >= 1");
  if (codec.spec().channels != model.channels()) {
    throw ShapeError("generate: codec has " + std::to_string(codec.spec().channels) +
                     " channels, model expects " + std::to_string(model.channels()));
  }
  req.flow.validate();
  NoGradGuard no_grad;
  Rng rng(req.seed);

  GenerationResult out;
  out.patches = PatchSequence{0, model.patch_size(), model.channels(), {}, 0};
  Tensor prev = model.bos().detach();
  for (std::size_t i = 0; i < req.n_patches; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const PlanOutput plan = model.ar().plan(req.text, req.video, out.patches);
    const Tensor patch = euler_sample(model.refiner(), plan.planning, prev, req.flow, rng);
    for (double v : patch.data()) {
      if (!std::isfinite(v)) {
        throw GenerationError("generate: patch " + std::to_string(i) + " contains non-finite values");
      }
    }
    out.patches.append(patch);
    out.history_lengths.push_back(plan.segments.history);
    prev = patch;
    const auto stop = std::chrono::steady_clock::now();
    out.per_patch_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  out.latents = unpatchify(out.patches);
  out.waveform = codec.decode(out.latents);
  return out;
}

std::vector<Tensor> teacher_forced_losses(const Example& example, const RobinModel& model,
                                          const FlowConfig& flow, Rng& rng) {
  return teacher_forced_losses(example, model.ar(), model.refiner(), model.bos(), model.patch_size(), flow, rng);
}

std::vector<Tensor> teacher_forced_losses(const Example& example, const ArHead& planner,
                                          const VelocityModel& refiner, const Tensor& bos,
                                          std::size_t patch_size, const FlowConfig& flow, Rng& rng) {
  const PatchSequence patches = patchify(example.latents, patch_size);
  const PlanOutput plan = planner.plan(example.text, example.video, patches.prefix(patches.count - 1));
  const std::size_t prefix = plan.segments.prefix();

  std::vector<Tensor> losses;
  losses.reserve(patches.count);
  for (std::size_t i = 0; i < patches.count; ++i) {
    const Tensor ctx = slice_rows(plan.planning, 0, prefix + i);
    const Tensor prev = i == 0 ? bos : patches.patch(i - 1);
    losses.push_back(flow_loss(refiner, patches.patch(i), ctx, prev, flow, rng));
  }
  return losses;
}

Tensor teacher_forced_loss(const Example& example, const RobinModel& model, const FlowConfig& flow,
                           Rng& rng) {
  const std::vector<Tensor> losses = teacher_forced_losses(example, model, flow, rng);
  Tensor total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = add(total, losses[i]);
  return scale(total, 1.0 / static_cast<double>(losses.size()));
}

}  // namespace robin
