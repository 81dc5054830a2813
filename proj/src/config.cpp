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

#include "robin/config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <vector>

#include "robin/container.hpp"
#include "robin/error.hpp"
#include "robin/rng.hpp"

namespace robin {

namespace {

template <class Fn>
void visit_fields(Config& c, Fn&& fn) {
  fn("model", "vocab_size", c.model.vocab_size);
  fn("model", "d", c.model.d);
  fn("model", "heads", c.model.heads);
  fn("model", "mlp_ratio", c.model.mlp_ratio);
  fn("model", "n_sem", c.model.n_sem);
  fn("model", "n_rite", c.model.n_rite);
  fn("model", "n_ale", c.model.n_ale);
  fn("model", "n_dit", c.model.n_dit);
  fn("model", "d_q", c.model.d_q);
  fn("model", "fsq_levels", c.model.fsq_levels);
  fn("model", "fsq_step", c.model.fsq_step);
  fn("model", "video_dim", c.model.video_dim);
  fn("model", "null_len", c.model.null_len);
  fn("model", "patch_size", c.model.patch_size);
  fn("codec", "frame_size", c.codec.frame_size);
  fn("codec", "channels", c.codec.channels);
  fn("codec", "seed", c.codec.seed);
  fn("flow", "euler_steps", c.flow.euler_steps);
  fn("flow", "cfg_scale", c.flow.cfg_scale);
  fn("flow", "cond_drop_prob", c.flow.cond_drop_prob);
  fn("train", "stage", c.train.stage);
  fn("train", "steps", c.train.steps);
  fn("train", "batch_size", c.train.batch_size);
  fn("train", "peak_lr", c.train.peak_lr);
  fn("train", "warmup_frac", c.train.warmup_frac);
  fn("train", "weight_decay", c.train.weight_decay);
  fn("train", "grad_clip", c.train.grad_clip);
  fn("train", "seed", c.train.seed);
  fn("train", "eval_every", c.train.eval_every);
  fn("data", "mode", c.data.mode);
  fn("data", "count", c.data.count);
  fn("data", "text_len", c.data.text_len);
  fn("data", "video_frames", c.data.video_frames);
  fn("data", "n_patches", c.data.n_patches);
  fn("data", "text_pool", c.data.text_pool);
  fn("data", "seed", c.data.seed);
  fn("paths", "manifest", c.paths.manifest);
  fn("paths", "checkpoint", c.paths.checkpoint);
  fn("paths", "out", c.paths.out);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
void parse_number(std::string_view text, T& out, const std::string& where) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError(where + ": cannot parse '" + std::string(text) + "'");
  }
  out = value;
}

std::string format_value(const std::string& v) { return v; }

template <class T>
std::string format_value(const T& v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(d, "d");
  positive(heads, "heads");
  positive(mlp_ratio, "mlp_ratio");
  positive(d_q, "d_q");
  positive(fsq_levels, "fsq_levels");
  positive(video_dim, "video_dim");
  positive(null_len, "null_len");
  positive(patch_size, "patch_size");
  if (d % heads != 0) throw ConfigError("model.d must be divisible by model.heads");
  if (!(fsq_step > 0.0)) throw ConfigError("model.fsq_step must be positive");
}

void FlowConfig::validate() const {
  if (euler_steps == 0) throw ConfigError("flow.euler_steps must be >= 1");
  if (!(cond_drop_prob >= 0.0 && cond_drop_prob < 1.0)) {
    throw ConfigError("flow.cond_drop_prob must lie in [0, 1)");
  }
}

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) throw ConfigError("train.stage must be 1 or 2");
  if (steps == 0) throw ConfigError("train.steps must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(peak_lr > 0.0)) throw ConfigError("train.peak_lr must be positive");
  if (!(warmup_frac >= 0.0 && warmup_frac < 1.0)) {
    throw ConfigError("train.warmup_frac must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be non-negative");
  if (!(grad_clip > 0.0)) throw ConfigError("train.grad_clip must be positive");
  if (eval_every == 0) throw ConfigError("train.eval_every must be positive");
}

void DataConfig::validate() const {
  if (mode != "text_only" && mode != "text_video") {
    throw ConfigError("data.mode must be text_only or text_video, got '" + mode + "'");
  }
  if (count == 0) throw ConfigError("data.count must be >= 1");
  if (text_len == 0) throw ConfigError("data.text_len must be >= 1");
  if (video_frames == 0) throw ConfigError("data.video_frames must be >= 1");
  if (n_patches == 0) throw ConfigError("data.n_patches must be >= 1");
  if (text_pool == 0) throw ConfigError("data.text_pool must be >= 1");
}

void Config::set(std::string_view section, std::string_view key, std::string_view value) {
  bool found = false;
  const std::string where = std::string(section) + "." + std::string(key);
  visit_fields(*this, [&](std::string_view s, std::string_view k, auto& field) {
    if (s != section || k != key) return;
    found = true;
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, std::string>) {
      field = std::string(value);
    } else {
      parse_number(value, field, where);
    }
  });
  if (!found) throw ConfigError("unknown config key '" + where + "'");
}

Config Config::parse(std::string_view text, const std::string& origin) {
  Config cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    if (section.empty()) throw ConfigError(where + ": key outside of any section");
    try {
      cfg.set(section, trim(std::string_view(line).substr(0, eq)),
              trim(std::string_view(line).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

Config Config::preset(std::string_view name) {
  Config c;
  if (name == "desk") return c;
  if (name == "paper-stage1" || name == "paper-stage2") {
    c.model.d = 1024;
    c.model.heads = 16;
    c.model.n_sem = 24;
    c.model.n_rite = 8;
    c.model.n_dit = 8;
    c.model.d_q = 256;
    c.model.video_dim = 768;
    c.train.batch_size = 8;
    if (name == "paper-stage1") {
      c.train.stage = 1;
      c.train.steps = 120000;
      c.train.peak_lr = 1e-3;
    } else {
      c.train.stage = 2;
      c.train.peak_lr = 1e-4;
      c.data.mode = "text_video";
    }
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

void Config::validate() const {
  model.validate();
  codec.validate();
  flow.validate();
  train.validate();
  data.validate();
}

std::string Config::canonical() const {
  std::vector<std::string> lines;
  visit_fields(const_cast<Config&>(*this), [&](std::string_view s, std::string_view k, auto& field) {
    lines.push_back(std::string(s) + "." + std::string(k) + " = " + format_value(field));
  });
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

std::uint64_t Config::model_hash() const {
  std::string text;
  std::istringstream in(canonical());
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with("model.") || line.starts_with("codec.")) text += line + "\n";
  }
  return fnv1a64(text);
}

}  // namespace robin
