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

// Two-stage training: text-only pretraining, then finetuning with a fresh
// video projection. AdamW, warmup + cosine schedule, global-norm clipping,
// bit-exact checkpoint/resume.
//
// Checkpoint layout (little-endian):
//   "RBCK"  u32 version  u32 stage  u64 step  u64 model hash  u64 adam t
//   str rng state
//   u32 record count, then per record sorted by name:
//     str name  u16 dtype (1 = f64)  u32 rank  u64 extents[rank]  f64 payload
// Parameter records use their model names; Adam moments are stored as
// "adam.m/<name>" and "adam.v/<name>".

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "robin/config.hpp"
#include "robin/dataset.hpp"
#include "robin/generator.hpp"
#include "robin/rng.hpp"

namespace robin {

inline constexpr char kCheckpointMagic[4] = {'R', 'B', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Linear ramp 0 -> peak over warmup_frac * steps, cosine decay to 0 at steps.
double lr_at(std::size_t step, const TrainConfig& cfg);

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

struct AdamState {
  std::uint64_t t = 0;  // completed updates
  std::map<std::string, AdamMoments> moments;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// One AdamW update of a single array. `t` is the 1-based update count used
/// for bias correction. Weight decay is decoupled: param -= lr * wd * param
/// happens before the adaptive step.
void adamw_update(std::span<double> param, std::span<const double> grad, AdamMoments& moments,
                  std::uint64_t t, double lr, double wd);

/// AdamW over every parameter using its accumulated gradient times
/// `grad_scale`. A missing gradient counts as zero. Throws NumericError
/// naming the parameter on a non-finite gradient.
void adamw_step(const ParamList& params, AdamState& state, double lr, double wd,
                double grad_scale = 1.0);

/// Global L2 norm of all accumulated gradients.
double global_grad_norm(const ParamList& params);

struct ArrayRecord {
  Shape shape;
  std::vector<double> values;

  bool operator==(const ArrayRecord&) const = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  int stage = 1;
  std::uint64_t step = 0;
  std::uint64_t model_hash = 0;
  std::uint64_t adam_t = 0;
  std::string rng_state;
  std::map<std::string, ArrayRecord> records;

  bool operator==(const Checkpoint&) const = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& origin);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies every model parameter out of `ckpt`. Names and shapes must match
/// exactly, otherwise ConfigError lists the first difference.
void load_parameters(RobinModel& model, const Checkpoint& ckpt);

/// Builds a model for `cfg` (with the video projection when the checkpoint
/// is from stage 2) and loads its parameters. Throws ConfigError quoting
/// both hashes when the architectures differ.
RobinModel model_from_checkpoint(const Config& cfg, const Checkpoint& ckpt);

struct StepRecord {
  std::size_t step = 0;  // 1-based index of the completed update
  double loss = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

struct TrainOptions {
  /// Replace every example's video with zeros (ablation control).
  bool zero_video = false;
  /// Line-delimited JSON records (step, loss, lr, wall_ms); empty disables.
  std::filesystem::path log_path;
};

class Trainer {
 public:
  /// Fresh stage-1 run. Every example must be video-absent.
  Trainer(Config cfg, std::vector<Example> examples, TrainOptions opts = {});

  /// Stage-2 run initialized from a stage-1 checkpoint. Every example must
  /// carry video; the projection starts fresh and the optimizer restarts.
  static Trainer stage2(Config cfg, std::vector<Example> examples, const Checkpoint& init,
                        TrainOptions opts = {});

  /// Continues the run recorded in `ckpt` exactly where it stopped.
  static Trainer resume(Config cfg, std::vector<Example> examples, const Checkpoint& ckpt,
                        TrainOptions opts = {});

  /// One optimizer update on a sampled batch.
  StepRecord step();
  /// Steps until `until` updates are complete (default: cfg.train.steps).
  std::vector<StepRecord> run(std::size_t until = 0);

  Checkpoint checkpoint() const;
  const RobinModel& model() const { return model_; }
  std::size_t completed() const { return step_; }
  const Config& config() const { return cfg_; }

  /// Mean teacher-forced loss over all examples with a fixed noise stream.
  double evaluate(std::uint64_t seed, std::size_t repeats = 1) const;

 private:
  Trainer(Config cfg, std::vector<Example> examples, TrainOptions opts, RobinModel model);
  void append_log(const StepRecord& rec);

  Config cfg_;
  std::vector<Example> examples_;
  TrainOptions opts_;
  RobinModel model_;
  ParamList params_;
  AdamState adam_;
  Rng rng_;
  std::size_t step_ = 0;
};

/// Means of consecutive windows of `window` losses; a partial tail is dropped.
std::vector<double> windowed_means(const std::vector<double>& losses, std::size_t window);

/// Mean teacher-forced loss of `model` over `examples` with the noise stream
/// of Rng(seed), averaged over `repeats` passes.
double mean_teacher_forced_loss(const RobinModel& model, const std::vector<Example>& examples,
                                const FlowConfig& flow, std::uint64_t seed, std::size_t repeats = 1);

}  // namespace robin
