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

#include "robin/ar_head.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "robin/error.hpp"
#include "robin/rng.hpp"

namespace robin {

// ---- FsqLayer ----

FsqLayer::FsqLayer(std::size_t width, std::size_t bottleneck, std::size_t levels, double step,
                   Rng& rng)
    : down_(Linear::init(width, bottleneck, rng)),
      up_(Linear::init(bottleneck, width, rng)),
      levels_(levels),
      step_(step) {}

double FsqLayer::quantize_value(double z, double step, std::size_t levels) {
  // round, then clip
  const double bound = static_cast<double>(levels);
  return step * std::clamp(std::round(z / step), -bound, bound);
}

Tensor FsqLayer::quantize(const Tensor& z) const {
  std::vector<double> q(z.numel());
  auto zd = z.data();
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = quantize_value(zd[i], step_, levels_);

  if (tape_ && tape_->mode == FsqOffsetTape::Mode::Replay) {
    if (tape_->cursor >= tape_->offsets.size()) {
      throw ContractError("fsq: offset tape exhausted during replay");
    }
    const auto& off = tape_->offsets[tape_->cursor++];
    if (off.size() != q.size()) throw ContractError("fsq: offset tape shape mismatch");
    return add(z, Tensor::from(z.shape(), off));
  }
  if (tape_) {
    std::vector<double> off(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) off[i] = q[i] - zd[i];
    tape_->offsets.push_back(std::move(off));
  }
  return straight_through(z, Tensor::from(z.shape(), std::move(q)));
}

void FsqLayer::collect(const std::string& prefix, ParamList& out) const {
  down_.collect(prefix + ".down", out);
  up_.collect(prefix + ".up", out);
}

// ---- RiteEncoder ----

RiteEncoder::RiteEncoder(const ModelConfig& cfg, Rng& rng)
    : stack_(cfg.n_rite, cfg.d, cfg.heads, cfg.mlp_ratio, rng), out_(Linear::init(cfg.d, cfg.d, rng)) {}

Tensor RiteEncoder::operator()(const Tensor& x, const AttentionMask& mask) const {
  return out_(stack_(x, mask));
}

void RiteEncoder::zero_output() {
  for (Tensor* t : {&out_.weight, &out_.bias}) {
    auto d = t->mutable_data();
    std::fill(d.begin(), d.end(), 0.0);
  }
}

void RiteEncoder::collect(const std::string& prefix, ParamList& out) const {
  stack_.collect(prefix + ".stack", out);
  out_.collect(prefix + ".out", out);
}

// ---- AudioLatentEncoder ----

AudioLatentEncoder::AudioLatentEncoder(const ModelConfig& cfg, std::size_t channels, Rng& rng)
    : in_(Linear::init(channels, cfg.d, rng)),
      summary_(param_randn({1, cfg.d}, rng, 0.02)),
      stack_(cfg.n_ale, cfg.d, cfg.heads, cfg.mlp_ratio, rng) {}

Tensor AudioLatentEncoder::encode_patch(const Tensor& patch) const {
  const Tensor frames = in_(patch);
  const std::size_t n = frames.dim(0) + 1;
  const std::array<Tensor, 2> parts{summary_, frames};
  const Tensor seq = add(concat_rows(parts), sinusoidal_positions(n, frames.dim(1)));
  return slice_rows(stack_(seq, AttentionMask::full(n)), 0, 1);
}

void AudioLatentEncoder::collect(const std::string& prefix, ParamList& out) const {
  in_.collect(prefix + ".in", out);
  out.push_back({prefix + ".summary", summary_});
  stack_.collect(prefix + ".stack", out);
}

// ---- ArHead ----

ArHead::ArHead(const ModelConfig& cfg, std::size_t channels, Rng& rng)
    : cfg_(cfg),
      channels_(channels),
      token_table_(param_randn({cfg.vocab_size, cfg.d}, rng, 1.0)),
      segment_table_(param_randn({3, cfg.d}, rng, 0.02)),
      audio_(cfg, channels, rng),
      semantic_lm_(cfg.n_sem, cfg.d, cfg.heads, cfg.mlp_ratio, rng),
      fsq_(cfg.d, cfg.d_q, cfg.fsq_levels, cfg.fsq_step, rng),
      rite_(cfg, rng) {
  cfg.validate();
}

void ArHead::enable_video(Rng& rng) { video_proj_ = Linear::init(cfg_.video_dim, cfg_.d, rng); }

Tensor ArHead::project_video(const Tensor& features) const {
  if (!has_video()) throw ShapeError("ar-head: model has no video projection (stage-1 model)");
  if (features.rank() != 2 || features.dim(1) != cfg_.video_dim) {
    throw ShapeError("ar-head: video features " + shape_str(features.shape()) +
                     " do not match projection input " + std::to_string(cfg_.video_dim));
  }
  return video_proj_(features);
}

Tensor ArHead::embed_text(const TextTokens& text) const {
  return embedding(token_table_, text.ids);
}

Tensor ArHead::encode_history(const PatchSequence& history) const {
  if (history.count == 0) return {};
  if (history.channels != channels_) {
    throw ShapeError("ar-head: history has " + std::to_string(history.channels) +
                     " channels, model expects " + std::to_string(channels_));
  }
  std::vector<Tensor> rows;
  rows.reserve(history.count);
  for (std::size_t i = 0; i < history.count; ++i) rows.push_back(audio_.encode_patch(history.patch(i)));
  return rows.size() == 1 ? rows.front() : concat_rows(rows);
}

FusedInput ArHead::fuse(const Tensor& video, const Tensor& text, const Tensor& history) const {
  FusedInput out;
  std::vector<Tensor> parts;
  const Tensor* segment_inputs[3] = {&video, &text, &history};
  std::size_t* lengths[3] = {&out.segments.video, &out.segments.text, &out.segments.history};
  for (std::size_t s = 0; s < 3; ++s) {
    const Tensor& part = *segment_inputs[s];
    if (!part.defined()) continue;
    if (part.rank() != 2 || part.dim(1) != cfg_.d) {
      throw ShapeError("ar-head: fuse input " + shape_str(part.shape()) + " is not [*, " +
                       std::to_string(cfg_.d) + "]");
    }
    *lengths[s] = part.dim(0);
    parts.push_back(add(part, row_segment(slice_rows(segment_table_, s, s + 1), 0, cfg_.d)));
  }
  if (!text.defined()) throw ShapeError("ar-head: text segment is required");
  const std::size_t total = out.segments.total();
  out.sequence = add(concat_rows(parts), sinusoidal_positions(total, cfg_.d));
  return out;
}

Tensor ArHead::semantic(const FusedInput& fused) const {
  return semantic_lm_(fused.sequence,
                      AttentionMask::prefix_causal(fused.segments.total(), fused.segments.prefix()));
}

PlanOutput ArHead::plan(const TextTokens& text, const std::optional<VideoFeatures>& video,
                        const PatchSequence& history) const {
  text.validate();
  Tensor fv;
  if (video) fv = project_video(video->tensor());
  const FusedInput fused = fuse(fv, embed_text(text), encode_history(history));
  const AttentionMask mask =
      AttentionMask::prefix_causal(fused.segments.total(), fused.segments.prefix());

  PlanOutput out;
  out.segments = fused.segments;
  out.semantic = semantic_lm_(fused.sequence, mask);
  out.bottleneck = fsq_.down(out.semantic);
  out.quantized = fsq_.quantize(out.bottleneck);
  out.discrete = fsq_.up(out.quantized);
  out.planning = add(out.discrete, rite_(out.discrete, mask));
  return out;
}

void ArHead::collect(ParamList& out) const {
  if (has_video()) video_proj_.collect("ar.video_proj", out);
  out.push_back({"ar.token_table", token_table_});
  out.push_back({"ar.segment_table", segment_table_});
  audio_.collect("ar.audio_encoder", out);
  semantic_lm_.collect("ar.semantic_lm", out);
  fsq_.collect("ar.fsq", out);
  rite_.collect("ar.rite", out);
}

}  // namespace robin
