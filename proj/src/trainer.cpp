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

#include "robin/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "robin/container.hpp"
#include "robin/error.hpp"
#include "robin/log.hpp"

namespace robin {

double lr_at(std::size_t step, const TrainConfig& cfg) {
  if (step > cfg.steps) throw ContractError("lr_at: step beyond schedule end");
  const double total = static_cast<double>(cfg.steps);
  const double warmup = cfg.warmup_frac * total;
  const double s = static_cast<double>(step);
  if (s < warmup) return cfg.peak_lr * s / warmup;
  if (total <= warmup) return cfg.peak_lr;
  const double progress = (s - warmup) / (total - warmup);
  return 0.5 * cfg.peak_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

void adamw_update(std::span<double> param, std::span<const double> grad, AdamMoments& moments,
                  std::uint64_t t, double lr, double wd) {
  if (grad.size() != param.size()) throw ShapeError("adamw: gradient size differs from parameter");
  if (moments.m.empty()) {
    moments.m.assign(param.size(), 0.0);
    moments.v.assign(param.size(), 0.0);
  }
  if (moments.m.size() != param.size() || moments.v.size() != param.size()) {
    throw ShapeError("adamw: moment size differs from parameter");
  }
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    moments.m[i] = kAdamBeta1 * moments.m[i] + (1.0 - kAdamBeta1) * g;
    moments.v[i] = kAdamBeta2 * moments.v[i] + (1.0 - kAdamBeta2) * g * g;
    param[i] -= lr * wd * param[i];
    const double m_hat = moments.m[i] / c1;
    const double v_hat = moments.v[i] / c2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEps);
  }
}

void adamw_step(const ParamList& params, AdamState& state, double lr, double wd, double grad_scale) {
  const std::uint64_t t = state.t + 1;
  std::vector<double> grad;
  for (const NamedParam& p : params) {
    Tensor tensor = p.tensor;
    grad.assign(tensor.numel(), 0.0);
    if (tensor.has_grad()) {
      auto g = tensor.grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::isfinite(g[i])) throw NumericError("adamw: non-finite gradient in parameter " + p.name);
        grad[i] = g[i] * grad_scale;
      }
    }
    adamw_update(tensor.mutable_data(), grad, state.moments[p.name], t, lr, wd);
  }
  state.t = t;
}

double global_grad_norm(const ParamList& params) {
  double total = 0.0;
  for (const NamedParam& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) total += g * g;
  }
  return std::sqrt(total);
}

// ---- checkpoint container ----

namespace {

void write_record(ByteWriter& w, const std::string& name, const ArrayRecord& rec) {
  w.str(name);
  w.u16(kDtypeFloat64);
  w.u32(static_cast<std::uint32_t>(rec.shape.size()));
  for (std::size_t e : rec.shape) w.u64(e);
  for (double v : rec.values) w.f64(v);
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic, 4));
  w.u32(ckpt.version);
  w.u32(static_cast<std::uint32_t>(ckpt.stage));
  w.u64(ckpt.step);
  w.u64(ckpt.model_hash);
  w.u64(ckpt.adam_t);
  w.str(ckpt.rng_state);
  w.u32(static_cast<std::uint32_t>(ckpt.records.size()));
  for (const auto& [name, rec] : ckpt.records) write_record(w, name, rec);
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& origin) {
  ByteReader r(bytes, origin);
  if (r.bytes(4) != std::string_view(kCheckpointMagic, 4)) {
    throw DataError(origin + ": not a checkpoint (bad magic)");
  }
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion) {
    throw DataError(origin + ": unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  ckpt.stage = static_cast<int>(r.u32());
  if (ckpt.stage != 1 && ckpt.stage != 2) throw DataError(origin + ": invalid stage");
  ckpt.step = r.u64();
  ckpt.model_hash = r.u64();
  ckpt.adam_t = r.u64();
  ckpt.rng_state = r.str();
  const std::uint32_t count = r.u32();
  std::string previous;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    if (i > 0 && name <= previous) throw DataError(origin + ": records not sorted at '" + name + "'");
    if (r.u16() != kDtypeFloat64) throw DataError(origin + ": record '" + name + "' has unsupported dtype");
    ArrayRecord rec;
    const std::uint32_t rank = r.u32();
    for (std::uint32_t d = 0; d < rank; ++d) rec.shape.push_back(r.u64());
    const std::size_t n = shape_numel(rec.shape);
    if (n > r.remaining() / 8) throw DataError(origin + ": record '" + name + "' truncated");
    rec.values.resize(n);
    for (double& v : rec.values) v = r.f64();
    previous = name;
    ckpt.records.emplace(std::move(name), std::move(rec));
  }
  if (!r.at_end()) throw DataError(origin + ": trailing bytes after last record");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

void load_parameters(RobinModel& model, const Checkpoint& ckpt) {
  const ParamList params = model.params();
  std::size_t matched = 0;
  for (const NamedParam& p : params) {
    auto it = ckpt.records.find(p.name);
    if (it == ckpt.records.end()) throw ConfigError("checkpoint lacks parameter '" + p.name + "'");
    if (it->second.shape != p.tensor.shape()) {
      throw ConfigError("checkpoint parameter '" + p.name + "' has shape " + shape_str(it->second.shape) +
                        ", model expects " + shape_str(p.tensor.shape()));
    }
    Tensor t = p.tensor;
    std::ranges::copy(it->second.values, t.mutable_data().begin());
    ++matched;
  }
  for (const auto& [name, rec] : ckpt.records) {
    if (name.starts_with("adam.")) continue;
    const bool known = std::ranges::any_of(params, [&](const NamedParam& p) { return p.name == name; });
    if (!known) throw ConfigError("checkpoint parameter '" + name + "' does not exist in the model");
  }
  (void)matched;
}

RobinModel model_from_checkpoint(const Config& cfg, const Checkpoint& ckpt) {
  if (cfg.model_hash() != ckpt.model_hash) {
    throw ConfigError("checkpoint architecture hash " + hex64(ckpt.model_hash) +
                      " does not match config hash " + hex64(cfg.model_hash()));
  }
  RobinModel model(cfg.model, cfg.codec.channels, Rng::derive(cfg.train.seed, "model"));
  if (ckpt.stage == 2) model.enable_video(cfg.train.seed);
  load_parameters(model, ckpt);
  return model;
}

// ---- Trainer ----

namespace {

void check_examples(const std::vector<Example>& examples, int stage) {
  if (examples.empty()) throw DataError("trainer: no training examples");
  for (const Example& ex : examples) {
    if (stage == 1 && ex.video) {
      throw DataError("trainer: example '" + ex.id + "' has video; stage 1 is text-only");
    }
    if (stage == 2 && !ex.video) {
      throw DataError("trainer: example '" + ex.id + "' has no video; stage 2 needs video features");
    }
  }
}

std::vector<Example> prepare(std::vector<Example> examples, const TrainOptions& opts) {
  if (opts.zero_video) {
    for (Example& ex : examples) {
      if (ex.video) ex.video = ex.video->zeroed();
    }
  }
  return examples;
}

}  // namespace

Trainer::Trainer(Config cfg, std::vector<Example> examples, TrainOptions opts, RobinModel model)
    : cfg_(std::move(cfg)),
      examples_(prepare(std::move(examples), opts)),
      opts_(std::move(opts)),
      model_(std::move(model)),
      params_(model_.params()),
      rng_(Rng::derive(cfg_.train.seed, "train")) {
  cfg_.validate();
  check_examples(examples_, cfg_.train.stage);
  init_logging();
}

Trainer::Trainer(Config cfg, std::vector<Example> examples, TrainOptions opts)
    : Trainer(cfg, std::move(examples), std::move(opts),
              RobinModel(cfg.model, cfg.codec.channels, Rng::derive(cfg.train.seed, "model"))) {
  if (cfg_.train.stage != 1) throw ConfigError("trainer: fresh runs start at stage 1; use stage2() with --init");
}

Trainer Trainer::stage2(Config cfg, std::vector<Example> examples, const Checkpoint& init, TrainOptions opts) {
  if (init.stage != 1) throw ConfigError("trainer: stage-2 init must be a stage-1 checkpoint");
  cfg.train.stage = 2;
  RobinModel model = model_from_checkpoint(cfg, init);
  model.enable_video(cfg.train.seed);
  return Trainer(std::move(cfg), std::move(examples), std::move(opts), std::move(model));
}

Trainer Trainer::resume(Config cfg, std::vector<Example> examples, const Checkpoint& ckpt, TrainOptions opts) {
  if (ckpt.stage != cfg.train.stage) {
    throw ConfigError("trainer: checkpoint is stage " + std::to_string(ckpt.stage) + ", config says stage " +
                      std::to_string(cfg.train.stage));
  }
  RobinModel model = model_from_checkpoint(cfg, ckpt);
  Trainer trainer(std::move(cfg), std::move(examples), std::move(opts), std::move(model));
  trainer.step_ = ckpt.step;
  trainer.adam_.t = ckpt.adam_t;
  trainer.rng_.set_state(ckpt.rng_state);
  for (const NamedParam& p : trainer.params_) {
    auto m = ckpt.records.find("adam.m/" + p.name);
    auto v = ckpt.records.find("adam.v/" + p.name);
    if (m == ckpt.records.end() || v == ckpt.records.end()) {
      if (ckpt.adam_t == 0) continue;
      throw ConfigError("checkpoint lacks optimizer moments for '" + p.name + "'");
    }
    trainer.adam_.moments[p.name] = AdamMoments{m->second.values, v->second.values};
  }
  return trainer;
}

StepRecord Trainer::step() {
  if (step_ >= cfg_.train.steps) throw ContractError("trainer: schedule already complete");
  const auto start = std::chrono::steady_clock::now();
  for (const NamedParam& p : params_) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
  const std::size_t batch = cfg_.train.batch_size;
  std::vector<std::size_t> picks(batch);
  for (std::size_t& i : picks) i = rng_.index(examples_.size());

  double loss_sum = 0.0;
  for (std::size_t i : picks) {
    const Tensor loss = teacher_forced_loss(examples_[i], model_, cfg_.flow, rng_);
    loss_sum += loss.item();
    scale(loss, 1.0 / static_cast<double>(batch)).backward();
  }

  const double norm = global_grad_norm(params_);
  if (!std::isfinite(norm)) {
    for (const NamedParam& p : params_) {
      if (!p.tensor.has_grad()) continue;
      for (double g : p.tensor.grad()) {
        if (!std::isfinite(g)) throw NumericError("trainer: non-finite gradient in parameter " + p.name);
      }
    }
  }
  const double clip = cfg_.train.grad_clip;
  const double grad_scale = clip > 0.0 && norm > clip ? clip / norm : 1.0;
  const double lr = lr_at(step_ + 1, cfg_.train);
  adamw_step(params_, adam_, lr, cfg_.train.weight_decay, grad_scale);
  ++step_;

  StepRecord rec;
  rec.step = step_;
  rec.loss = loss_sum / static_cast<double>(batch);
  rec.lr = lr;
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!std::isfinite(rec.loss)) throw NumericError("trainer: loss is not finite at step " + std::to_string(step_));
  append_log(rec);
  if (cfg_.train.eval_every > 0 && step_ % cfg_.train.eval_every == 0) {
    spdlog::info("stage {} step {}/{} loss {:.6f} lr {:.3e}", cfg_.train.stage, step_, cfg_.train.steps, rec.loss,
                 rec.lr);
  }
  return rec;
}

std::vector<StepRecord> Trainer::run(std::size_t until) {
  if (until == 0 || until > cfg_.train.steps) until = cfg_.train.steps;
  std::vector<StepRecord> out;
  while (step_ < until) out.push_back(step());
  return out;
}

void Trainer::append_log(const StepRecord& rec) {
  if (opts_.log_path.empty()) return;
  nlohmann::ordered_json j;
  j["step"] = rec.step;
  j["loss"] = rec.loss;
  j["lr"] = rec.lr;
  j["wall_ms"] = rec.wall_ms;
  if (opts_.log_path.has_parent_path()) std::filesystem::create_directories(opts_.log_path.parent_path());
  std::ofstream out(opts_.log_path, std::ios::app);
  if (!out) throw IoError("cannot append to training log " + opts_.log_path.string());
  out << j.dump() << '\n';
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt;
  ckpt.stage = cfg_.train.stage;
  ckpt.step = step_;
  ckpt.model_hash = cfg_.model_hash();
  ckpt.adam_t = adam_.t;
  ckpt.rng_state = rng_.state();
  for (const NamedParam& p : params_) {
    ckpt.records[p.name] = ArrayRecord{p.tensor.shape(), p.tensor.values()};
    auto it = adam_.moments.find(p.name);
    if (it == adam_.moments.end()) continue;
    ckpt.records["adam.m/" + p.name] = ArrayRecord{p.tensor.shape(), it->second.m};
    ckpt.records["adam.v/" + p.name] = ArrayRecord{p.tensor.shape(), it->second.v};
  }
  return ckpt;
}

double Trainer::evaluate(std::uint64_t seed, std::size_t repeats) const {
  return mean_teacher_forced_loss(model_, examples_, cfg_.flow, seed, repeats);
}

std::vector<double> windowed_means(const std::vector<double>& losses, std::size_t window) {
  if (window == 0) throw ContractError("windowed_means: window must be >= 1");
  std::vector<double> out;
  for (std::size_t b = 0; b + window <= losses.size(); b += window) {
    double s = 0.0;
    for (std::size_t i = b; i < b + window; ++i) s += losses[i];
    out.push_back(s / static_cast<double>(window));
  }
  return out;
}

double mean_teacher_forced_loss(const RobinModel& model, const std::vector<Example>& examples,
                                const FlowConfig& flow, std::uint64_t seed, std::size_t repeats) {
  if (examples.empty() || repeats == 0) throw ContractError("mean_teacher_forced_loss: nothing to evaluate");
  NoGradGuard no_grad;
  FlowConfig conditioned = flow;
  conditioned.cond_drop_prob = 0.0;
  Rng rng(seed);
  double total = 0.0;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (const Example& ex : examples) total += teacher_forced_loss(ex, model, conditioned, rng).item();
  }
  return total / static_cast<double>(examples.size() * repeats);
}

}  // namespace robin
