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

#include "robin/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "robin/container.hpp"
#include "robin/error.hpp"
#include "robin/rng.hpp"

namespace robin {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kManifestName = "manifest.jsonl";

std::string example_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ex%04zu", i);
  return buf;
}

std::size_t target_frames(const SynthSpec& s) { return s.n_patches * s.patch_size; }

std::vector<double> text_part(const SynthSpec& s, const TextTokens& text) {
  const std::size_t elems = target_frames(s) * s.channels;
  // Signature for token v occupies draws [v*elems, (v+1)*elems) of one stream.
  Rng rng(Rng::derive(s.seed, "token-signatures"));
  std::vector<double> table(s.vocab_size * elems);
  for (double& v : table) v = rng.normal();
  std::vector<double> out(elems, 0.0);
  const double norm = 1.0 / std::sqrt(static_cast<double>(text.ids.size()));
  for (int id : text.ids) {
    const double* sig = table.data() + static_cast<std::size_t>(id) * elems;
    for (std::size_t i = 0; i < elems; ++i) out[i] += norm * sig[i];
  }
  return out;
}

std::vector<double> video_part(const SynthSpec& s, const VideoFeatures& video) {
  const std::size_t elems = target_frames(s) * s.channels;
  const std::size_t in = video.values.size();
  Rng rng(Rng::derive(s.seed, "video-readout"));
  const double sd = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> out(elems, 0.0);
  for (std::size_t o = 0; o < elems; ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < in; ++i) acc += sd * rng.normal() * video.values[i];
    out[o] = acc;
  }
  return out;
}

}  // namespace

void TextTokens::validate() const {
  if (ids.empty()) throw DataError("text: token sequence is empty");
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw DataError("text: token id " + std::to_string(id) + " outside vocabulary of " +
                      std::to_string(vocab_size));
    }
  }
}

Tensor VideoFeatures::tensor() const { return Tensor::from({frames, dim}, values); }

VideoFeatures VideoFeatures::zeroed() const {
  return {frames, dim, std::vector<double>(values.size(), 0.0)};
}

TaskMode parse_task_mode(const std::string& text) {
  if (text == "text_only") return TaskMode::TextOnly;
  if (text == "text_video") return TaskMode::TextVideo;
  throw ConfigError("unknown task mode '" + text + "' (expected text_only or text_video)");
}

const char* task_mode_name(TaskMode mode) {
  return mode == TaskMode::TextOnly ? "text_only" : "text_video";
}

SynthSpec synth_spec(const Config& cfg) {
  SynthSpec spec;
  spec.seed = cfg.data.seed;
  spec.count = cfg.data.count;
  spec.mode = parse_task_mode(cfg.data.mode);
  spec.vocab_size = cfg.model.vocab_size;
  spec.text_len = cfg.data.text_len;
  spec.video_frames = cfg.data.video_frames;
  spec.video_dim = cfg.model.video_dim;
  spec.n_patches = cfg.data.n_patches;
  spec.patch_size = cfg.model.patch_size;
  spec.channels = cfg.codec.channels;
  spec.frame_size = cfg.codec.frame_size;
  spec.text_pool = cfg.data.text_pool;
  return spec;
}

void SynthSpec::validate() const {
  if (count == 0) throw ConfigError("synth: count must be >= 1");
  if (vocab_size == 0 || text_len == 0 || video_frames == 0 || video_dim == 0 || n_patches == 0 ||
      patch_size == 0 || channels == 0 || frame_size == 0 || text_pool == 0) {
    throw ConfigError("synth: every dimension must be positive");
  }
  if (channels != frame_size) throw ConfigError("synth: channels must equal frame_size");
}

LatentSequence synth_target(const SynthSpec& spec, const TextTokens& text,
                            const std::optional<VideoFeatures>& video) {
  spec.validate();
  text.validate();
  std::vector<double> values = text_part(spec, text);
  if (spec.mode == TaskMode::TextVideo) {
    if (!video) throw DataError("synth: text_video target requires video features");
    const std::vector<double> vid = video_part(spec, *video);
    const double w = std::sqrt(0.5);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = w * values[i] + w * vid[i];
  }
  const std::size_t frames = target_frames(spec);
  return {frames, spec.channels, std::move(values), frames * spec.frame_size};
}

std::vector<Example> synth_examples(const SynthSpec& spec) {
  spec.validate();
  Rng rng(Rng::derive(spec.seed, "examples"));
  std::vector<TextTokens> pool;
  if (spec.mode == TaskMode::TextVideo) {
    for (std::size_t i = 0; i < spec.text_pool; ++i) {
      TextTokens t{std::vector<int>(spec.text_len), spec.vocab_size};
      for (int& id : t.ids) id = static_cast<int>(rng.index(spec.vocab_size));
      pool.push_back(std::move(t));
    }
  }
  std::vector<Example> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    Example ex;
    ex.id = example_id(i);
    if (spec.mode == TaskMode::TextOnly) {
      ex.text = {std::vector<int>(spec.text_len), spec.vocab_size};
      for (int& id : ex.text.ids) id = static_cast<int>(rng.index(spec.vocab_size));
    } else {
      ex.text = pool[i % pool.size()];
      VideoFeatures v{spec.video_frames, spec.video_dim,
                      std::vector<double>(spec.video_frames * spec.video_dim)};
      for (double& x : v.values) x = rng.normal();
      ex.video = std::move(v);
    }
    ex.latents = synth_target(spec, ex.text, ex.video);
    out.push_back(std::move(ex));
  }
  return out;
}

Manifest write_examples(const std::vector<Example>& examples, const std::filesystem::path& dir) {
  Manifest m;
  m.base_dir = dir;
  for (const Example& ex : examples) {
    ManifestRecord r;
    r.id = ex.id;
    r.text_ids = ex.text.ids;
    r.latent_path = "latents/" + ex.id + ".rbna";
    write_latents(dir / r.latent_path, ex.latents);
    if (ex.video) {
      r.video_path = "video/" + ex.id + ".rbna";
      write_array(dir / r.video_path, {{ex.video->frames, ex.video->dim}, ex.video->values, 0});
    }
    m.records.push_back(std::move(r));
  }
  save_manifest(m, dir / kManifestName);
  return m;
}

Manifest synth_task(const SynthSpec& spec, const std::filesystem::path& dir) {
  return write_examples(synth_examples(spec), dir);
}

std::string serialize_manifest(const Manifest& m) {
  std::string out;
  for (const ManifestRecord& r : m.records) {
    ordered_json j;
    j["id"] = r.id;
    j["text_ids"] = r.text_ids;
    if (!r.video_path.empty()) j["video_path"] = r.video_path;
    j["latent_path"] = r.latent_path;
    out += j.dump() + "\n";
  }
  return out;
}

Manifest parse_manifest(const std::string& text, const std::string& origin) {
  Manifest m;
  std::map<std::string, std::size_t> first_line;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed record: " + e.what());
    }
    if (!j.is_object()) throw DataError(where + ": record must be a JSON object");
    ManifestRecord r;
    try {
      for (const auto& [key, value] : j.items()) {
        if (key == "id") {
          r.id = value.get<std::string>();
        } else if (key == "text_ids") {
          r.text_ids = value.get<std::vector<int>>();
        } else if (key == "video_path") {
          r.video_path = value.get<std::string>();
        } else if (key == "latent_path") {
          r.latent_path = value.get<std::string>();
        } else {
          throw DataError(where + ": unknown field '" + key + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": malformed record: " + e.what());
    }
    if (r.id.empty()) throw DataError(where + ": missing field 'id'");
    if (r.text_ids.empty()) throw DataError(where + ": missing or empty field 'text_ids'");
    if (r.latent_path.empty()) throw DataError(where + ": missing field 'latent_path'");
    auto [it, inserted] = first_line.emplace(r.id, line_no);
    if (!inserted) {
      throw DataError(origin + ": duplicate id '" + r.id + "' on line " + std::to_string(it->second) +
                      " and line " + std::to_string(line_no));
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  write_file(path, serialize_manifest(m));
}

Manifest load_manifest(const std::filesystem::path& path) {
  Manifest m = parse_manifest(read_file(path), path.string());
  m.base_dir = path.parent_path();
  for (const ManifestRecord& r : m.records) {
    for (const std::string& rel : {r.latent_path, r.video_path}) {
      if (rel.empty()) continue;
      const auto full = m.resolve(rel);
      if (!std::filesystem::exists(full)) {
        throw DataError(path.string() + ": record '" + r.id + "' references missing file " +
                        full.string());
      }
    }
  }
  return m;
}

std::vector<Example> load_examples(const Manifest& m, std::size_t vocab_size) {
  std::vector<Example> out;
  out.reserve(m.records.size());
  for (const ManifestRecord& r : m.records) {
    Example ex;
    ex.id = r.id;
    ex.text = {r.text_ids, vocab_size};
    try {
      ex.text.validate();
    } catch (const DataError& e) {
      throw DataError("record '" + r.id + "': " + e.what());
    }
    ex.latents = read_latents(m.resolve(r.latent_path));
    if (!r.video_path.empty()) {
      ArrayFile a = read_array(m.resolve(r.video_path));
      if (a.shape.size() != 2) throw DataError(r.video_path + ": video features must be rank 2");
      ex.video = VideoFeatures{a.shape[0], a.shape[1], std::move(a.values)};
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace robin
