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

#include "robin/cli.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <numeric>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "robin/codec.hpp"
#include "robin/config.hpp"
#include "robin/container.hpp"
#include "robin/generator.hpp"
#include "robin/judge.hpp"
#include "robin/log.hpp"
#include "robin/metrics.hpp"
#include "robin/trainer.hpp"

namespace robin {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

TextTokens tokenize_prompt(const std::string& prompt, std::size_t vocab_size) {
  if (vocab_size == 0) throw ConfigError("tokenize: vocab_size must be >= 1");
  TextTokens out{{}, vocab_size};
  std::istringstream words(prompt);
  std::string w;
  while (words >> w) {
    std::ranges::transform(w, w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.ids.push_back(static_cast<int>(fnv1a64(w) % vocab_size));
  }
  if (out.ids.empty()) throw UsageError("prompt has no words");
  return out;
}

namespace {

// Options shared by every subcommand that builds a Config.
struct CommonOptions {
  std::string config_path;
  std::string preset = "desk";
  std::vector<std::string> sets;
  std::optional<long long> patch_size;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "Config file (INI sections)");
  cmd->add_option("--preset", o.preset, "Base preset when no --config: desk, paper-stage1, paper-stage2");
  cmd->add_option("--set", o.sets, "Override, section.key=value (repeatable)");
  cmd->add_option("--patch-size", o.patch_size, "Latent frames per patch");
}

std::size_t positive(long long v, const char* flag) {
  if (v < 1) throw UsageError(std::string(flag) + " must be >= 1, got " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

Config build_config(const CommonOptions& o) {
  Config cfg = o.config_path.empty() ? Config::preset(o.preset) : Config::load(o.config_path);
  for (const std::string& s : o.sets) {
    const auto dot = s.find('.');
    const auto eq = s.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq) {
      throw UsageError("--set expects section.key=value, got '" + s + "'");
    }
    cfg.set(s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1));
  }
  if (o.patch_size) cfg.model.patch_size = positive(*o.patch_size, "--patch-size");
  cfg.validate();
  return cfg;
}

std::vector<std::size_t> parse_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(positive(v, flag));
    } catch (const std::logic_error&) {
      throw UsageError(std::string(flag) + ": '" + item + "' is not a positive integer");
    }
  }
  if (out.empty()) throw UsageError(std::string(flag) + " is empty");
  return out;
}

EmbeddingSet read_embeddings(const std::string& path) {
  ArrayFile a = read_array(path);
  if (a.shape.size() != 2) throw DataError(path + ": embeddings must be a rank-2 array");
  EmbeddingSet s{a.shape[0], a.shape[1], std::move(a.values), path};
  s.validate();
  return s;
}

double median(std::vector<double> v) {
  std::ranges::sort(v);
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// ---- synthdata ----

struct SynthArgs {
  CommonOptions common;
  std::string mode;
  std::optional<long long> count;
  std::optional<std::uint64_t> seed;
  std::optional<long long> patches;
  std::string out;
};

int cmd_synthdata(const SynthArgs& a, std::ostream& out) {
  Config cfg = build_config(a.common);
  if (!a.mode.empty()) cfg.data.mode = a.mode;
  if (a.count) cfg.data.count = positive(*a.count, "--count");
  if (a.seed) cfg.data.seed = *a.seed;
  if (a.patches) cfg.data.n_patches = positive(*a.patches, "--patches");
  const std::string dir = a.out.empty() ? cfg.paths.out : a.out;
  if (dir.empty()) throw UsageError("synthdata needs --out <dir>");
  cfg.validate();

  const SynthSpec spec = synth_spec(cfg);
  const Manifest m = synth_task(spec, dir);
  out << "wrote " << m.records.size() << " examples to " << (fs::path(dir) / "manifest.jsonl").string() << '\n';
  return kExitOk;
}

// ---- train ----

struct TrainArgs {
  CommonOptions common;
  std::string manifest;
  std::optional<long long> stage;
  std::optional<long long> steps;
  std::optional<std::uint64_t> seed;
  std::string init;
  std::string resume;
  std::string out;
  bool zero_video = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  Config cfg = build_config(a.common);
  if (a.stage) {
    if (*a.stage != 1 && *a.stage != 2) throw UsageError("--stage must be 1 or 2");
    cfg.train.stage = static_cast<int>(*a.stage);
  }
  if (a.steps) cfg.train.steps = positive(*a.steps, "--steps");
  if (a.seed) cfg.train.seed = *a.seed;
  const std::string manifest = a.manifest.empty() ? cfg.paths.manifest : a.manifest;
  const std::string ckpt_path = a.out.empty() ? cfg.paths.checkpoint : a.out;
  if (manifest.empty()) throw UsageError("train needs --manifest");
  if (ckpt_path.empty()) throw UsageError("train needs --out <checkpoint>");
  if (cfg.train.stage == 2 && a.init.empty() && a.resume.empty()) {
    throw UsageError("stage-2 training needs --init <stage-1 checkpoint>");
  }
  if (cfg.train.stage == 1 && !a.init.empty()) throw UsageError("--init applies to stage 2 only");
  cfg.validate();

  std::vector<Example> examples = load_examples(load_manifest(manifest), cfg.model.vocab_size);
  TrainOptions opts;
  opts.zero_video = a.zero_video;
  opts.log_path = ckpt_path + ".log.jsonl";
  if (a.resume.empty()) fs::remove(opts.log_path);

  std::optional<Trainer> trainer;
  if (!a.resume.empty()) {
    trainer.emplace(Trainer::resume(cfg, std::move(examples), load_checkpoint(a.resume), opts));
  } else if (cfg.train.stage == 2) {
    trainer.emplace(Trainer::stage2(cfg, std::move(examples), load_checkpoint(a.init), opts));
  } else {
    trainer.emplace(cfg, std::move(examples), opts);
  }
  const double initial = trainer->evaluate(Rng::derive(cfg.train.seed, "eval"));
  const std::vector<StepRecord> records = trainer->run();
  const double final_loss = trainer->evaluate(Rng::derive(cfg.train.seed, "eval"));
  save_checkpoint(ckpt_path, trainer->checkpoint());

  std::vector<double> losses;
  for (const StepRecord& r : records) losses.push_back(r.loss);
  ordered_json summary;
  summary["checkpoint"] = ckpt_path;
  summary["stage"] = cfg.train.stage;
  summary["steps"] = trainer->completed();
  summary["config_hash"] = hex64(cfg.hash());
  summary["model_hash"] = hex64(cfg.model_hash());
  summary["eval_loss_before"] = initial;
  summary["eval_loss_after"] = final_loss;
  summary["window_means"] = windowed_means(losses, std::max<std::size_t>(cfg.train.eval_every, 1));
  out << summary.dump(2) << '\n';
  return kExitOk;
}

// ---- generate ----

struct GenerateArgs {
  CommonOptions common;
  std::string ckpt;
  std::string prompt;
  bool has_prompt = false;
  std::string video;
  std::string manifest;
  std::string example;
  std::optional<long long> patches;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct PreparedRequest {
  GenerationRequest req;
  std::optional<std::string> prompt;
  Config cfg;
  RobinModel model;
};

PreparedRequest prepare_generation(const GenerateArgs& a) {
  Config cfg = build_config(a.common);
  const std::string ckpt_path = a.ckpt.empty() ? cfg.paths.checkpoint : a.ckpt;
  if (ckpt_path.empty()) throw UsageError("generate needs --ckpt <checkpoint>");
  RobinModel model = model_from_checkpoint(cfg, load_checkpoint(ckpt_path));

  GenerationRequest req;
  req.flow = cfg.flow;
  req.seed = a.seed.value_or(cfg.train.seed);
  std::optional<std::string> prompt;
  if (!a.example.empty()) {
    if (a.manifest.empty()) throw UsageError("--example needs --manifest");
    const Manifest m = load_manifest(a.manifest);
    auto it = std::ranges::find_if(m.records, [&](const ManifestRecord& r) { return r.id == a.example; });
    if (it == m.records.end()) throw DataError("example '" + a.example + "' is not in " + a.manifest);
    Manifest one{{*it}, m.base_dir};
    Example ex = load_examples(one, cfg.model.vocab_size).front();
    req.text = ex.text;
    req.video = ex.video;
    req.n_patches = patchify(ex.latents, cfg.model.patch_size).count;
  } else {
    if (!a.video.empty()) {
      ArrayFile v = read_array(a.video);
      if (v.shape.size() != 2) throw DataError(a.video + ": video features must be rank 2");
      req.video = VideoFeatures{v.shape[0], v.shape[1], std::move(v.values)};
    }
    if (a.has_prompt) {
      prompt = a.prompt;
    } else if (req.video) {
      prompt = kFallbackPrompt;
    } else {
      throw UsageError("generate needs --prompt, --video or --example");
    }
    req.text = tokenize_prompt(*prompt, cfg.model.vocab_size);
    req.n_patches = cfg.data.n_patches;
  }
  if (a.has_prompt && !a.example.empty()) {
    prompt = a.prompt;
    req.text = tokenize_prompt(a.prompt, cfg.model.vocab_size);
  }
  if (a.patches) req.n_patches = positive(*a.patches, "--patches");
  return PreparedRequest{std::move(req), std::move(prompt), std::move(cfg), std::move(model)};
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (a.out.empty()) throw UsageError("generate needs --out <dir>");
  PreparedRequest p = prepare_generation(a);
  const LatentCodec codec(p.cfg.codec);
  const GenerationResult result = generate(p.req, p.model, codec);

  const fs::path dir(a.out);
  write_latents(dir / "latents.rbna", result.latents);
  write_waveform(dir / "waveform.rbna", result.waveform);

  ordered_json record;
  record["seed"] = p.req.seed;
  record["config_hash"] = hex64(p.cfg.hash());
  record["model_hash"] = hex64(p.cfg.model_hash());
  record["prompt"] = p.prompt ? ordered_json(*p.prompt) : ordered_json(nullptr);
  record["text_ids"] = p.req.text.ids;
  record["example"] = a.example.empty() ? ordered_json(nullptr) : ordered_json(a.example);
  record["has_video"] = p.req.video.has_value();
  record["n_patches"] = p.req.n_patches;
  record["patch_size"] = p.cfg.model.patch_size;
  record["euler_steps"] = p.cfg.flow.euler_steps;
  record["cfg_scale"] = p.cfg.flow.cfg_scale;
  record["waveform_samples"] = result.waveform.samples.size();
  write_file(dir / "run.json", record.dump(2) + "\n");

  ordered_json timing;
  timing["seed"] = p.req.seed;
  timing["config_hash"] = hex64(p.cfg.hash());
  timing["per_patch_ms"] = result.per_patch_ms;
  timing["total_ms"] = std::accumulate(result.per_patch_ms.begin(), result.per_patch_ms.end(), 0.0);
  write_file(dir / "timing.json", timing.dump(2) + "\n");

  out << "generated " << result.patches.count << " patches, " << result.waveform.samples.size()
      << " samples -> " << dir.string() << '\n';
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  std::string real;
  std::string fake;
  std::string ib_a;
  std::string ib_b;
  std::vector<std::string> judges;
  std::uint64_t seed = 0;
  long long k = 3;
  long long splits = 1;
  long long fd_dim = 16;
  long long classes = 8;
  std::string out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  MetricReport report;
  ordered_json meta;
  const RandomLinearFeaturizer fd_source(Rng::derive(a.seed, "fd-embedding"), positive(a.fd_dim, "--fd-dim"));
  const RandomLinearFeaturizer classifier(Rng::derive(a.seed, "classifier"), positive(a.classes, "--classes"));

  if (!a.real.empty() || !a.fake.empty()) {
    if (a.real.empty() || a.fake.empty()) throw UsageError("eval needs both --real and --fake");
    const EmbeddingSet real = read_embeddings(a.real);
    const EmbeddingSet fake = read_embeddings(a.fake);
    report.fad = frechet_distance(real, fake);
    report.fd = frechet_distance(fd_source.extract(real), fd_source.extract(fake));
    const DensityCoverage dc = density_coverage(real, fake, positive(a.k, "--k"));
    report.density = dc.density;
    report.coverage = dc.coverage;

    auto posteriors = [&](const EmbeddingSet& s) {
      EmbeddingSet logits = classifier.extract(s);
      for (double& v : logits.values) v *= 4.0;
      return softmax_rows(logits);
    };
    const auto fake_post = posteriors(fake);
    const InceptionScore is = inception_score(fake_post, positive(a.splits, "--splits"));
    report.is_mean = is.mean;
    report.is_std = is.std;
    if (real.n == fake.n) report.kl = kl_divergence(posteriors(real), fake_post);

    meta["fad_extractor"] = "identity (input embeddings)";
    meta["fd_extractor"] = fd_source.id();
    meta["classifier"] = classifier.id() + " x4 softmax";
    meta["kl_direction"] = "KL(reference || generated), paired by row";
    meta["density_coverage_k"] = a.k;
  }
  if (!a.ib_a.empty() || !a.ib_b.empty()) {
    if (a.ib_a.empty() || a.ib_b.empty()) throw UsageError("eval needs both --ib-a and --ib-b");
    report.ib = cosine_alignment(read_embeddings(a.ib_a), read_embeddings(a.ib_b));
  }

  std::vector<JudgeReport> judged;
  std::vector<std::string> failures;
  for (const std::string& path : a.judges) {
    try {
      judged.push_back(parse_judge(read_file(path)));
    } catch (const Error& e) {
      failures.push_back(path + ": " + e.what());
    }
  }
  if (!failures.empty()) {
    for (const std::string& f : failures) err << f << '\n';
    return kExitData;
  }
  if (!judged.empty()) {
    const auto means = aggregate_judges(judged);
    ordered_json j;
    for (std::size_t i = 0; i < kJudgeAxes; ++i) j[std::string(kJudgeAxisNames[i])] = format_mean(means[i]);
    meta["judge_reports"] = judged.size();
    meta["judge_means"] = j;
  }

  const std::string json = metric_report_json(report);
  if (!a.out.empty()) {
    write_file(a.out, json);
    fs::path meta_path(a.out);
    meta_path.replace_extension(".meta.json");
    write_file(meta_path, meta.dump(2) + "\n");
  }
  out << json;
  return kExitOk;
}

// ---- bench ----

struct BenchArgs {
  GenerateArgs gen;
  long long repeats = 3;
  std::string steps_list = "10,20,40";
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const std::size_t repeats = positive(a.repeats, "--repeats");
  const std::vector<std::size_t> steps = parse_list(a.steps_list, "--steps-list");
  GenerateArgs g = a.gen;
  if (!g.has_prompt && g.video.empty() && g.example.empty()) {
    g.prompt = kFallbackPrompt;
    g.has_prompt = true;
  }
  PreparedRequest p = prepare_generation(g);
  const LatentCodec codec(p.cfg.codec);

  ordered_json record;
  record["config_hash"] = hex64(p.cfg.hash());
  record["seed"] = p.req.seed;
  record["repeats"] = repeats;
  record["n_patches"] = p.req.n_patches;
  record["cfg_scale"] = p.cfg.flow.cfg_scale;
  ordered_json rows = ordered_json::array();
  out << "euler_steps  mean_ms  median_ms  per_patch_mean_ms\n";
  std::vector<GenerationRequest> reqs;
  for (std::size_t s : steps) {
    reqs.push_back(p.req);
    reqs.back().flow.euler_steps = s;
  }
  // One untimed pass, then step counts interleaved per repeat so machine
  // drift lands on every row alike.
  for (const auto& req : reqs) generate(req, p.model, codec);
  std::vector<std::vector<double>> totals(steps.size());
  std::vector<std::vector<double>> per_patch(steps.size(), std::vector<double>(p.req.n_patches, 0.0));
  for (std::size_t r = 0; r < repeats; ++r) {
    for (std::size_t k = 0; k < reqs.size(); ++k) {
      const auto start = std::chrono::steady_clock::now();
      const GenerationResult res = generate(reqs[k], p.model, codec);
      totals[k].push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
      for (std::size_t i = 0; i < per_patch[k].size(); ++i) {
        per_patch[k][i] += res.per_patch_ms[i] / static_cast<double>(repeats);
      }
    }
  }
  for (std::size_t k = 0; k < steps.size(); ++k) {
    ordered_json row;
    row["euler_steps"] = steps[k];
    row["mean_ms"] = mean_of(totals[k]);
    row["median_ms"] = median(totals[k]);
    row["per_patch_ms"] = per_patch[k];
    rows.push_back(row);
    out << steps[k] << "  " << mean_of(totals[k]) << "  " << median(totals[k]) << "  " << mean_of(per_patch[k]) << '\n';
  }
  record["rows"] = rows;
  if (!a.gen.out.empty()) write_file(a.gen.out, record.dump(2) + "\n");
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const IoError*>(&e) || dynamic_cast<const ShapeError*>(&e)) {
    return kExitData;
  }
  return kExitInternal;
}

void add_generate_options(CLI::App* cmd, GenerateArgs& g) {
  add_common(cmd, g.common);
  cmd->add_option("--ckpt", g.ckpt, "Checkpoint file");
  cmd->add_option("--prompt", g.prompt, "Text prompt")->each([&g](const std::string&) { g.has_prompt = true; });
  cmd->add_option("--video", g.video, "Video feature array [frames, dim]");
  cmd->add_option("--manifest", g.manifest, "Manifest for --example");
  cmd->add_option("--example", g.example, "Condition on this manifest example");
  cmd->add_option("--patches", g.patches, "Number of patches to generate");
  cmd->add_option("--seed", g.seed, "Sampling seed");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  init_logging();
  CLI::App app("Video-conditioned music latent generator", "robin");
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synthdata", "Write a synthetic dataset and manifest");
  add_common(synth_cmd, synth.common);
  synth_cmd->add_option("--mode", synth.mode, "text_only or text_video");
  synth_cmd->add_option("--count", synth.count, "Number of examples");
  synth_cmd->add_option("--seed", synth.seed, "Data seed");
  synth_cmd->add_option("--patches", synth.patches, "Patches per example");
  synth_cmd->add_option("--out", synth.out, "Output directory");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train stage 1 or stage 2");
  add_common(train_cmd, train.common);
  train_cmd->add_option("--manifest", train.manifest, "Training manifest");
  train_cmd->add_option("--stage", train.stage, "1 (text only) or 2 (video finetuning)");
  train_cmd->add_option("--steps", train.steps, "Optimizer steps");
  train_cmd->add_option("--seed", train.seed, "Training seed");
  train_cmd->add_option("--init", train.init, "Stage-1 checkpoint for stage 2");
  train_cmd->add_option("--resume", train.resume, "Continue from this checkpoint");
  train_cmd->add_option("--out", train.out, "Checkpoint output path");
  train_cmd->add_flag("--zero-video", train.zero_video, "Replace video features with zeros");

  GenerateArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("generate", "Generate latents and a waveform");
  add_generate_options(gen_cmd, gen);
  gen_cmd->add_option("--out", gen.out, "Output directory");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Compute the metric report");
  eval_cmd->add_option("--real", eval.real, "Reference embeddings [N, D]");
  eval_cmd->add_option("--fake", eval.fake, "Generated embeddings [M, D]");
  eval_cmd->add_option("--ib-a", eval.ib_a, "Paired embeddings, first modality");
  eval_cmd->add_option("--ib-b", eval.ib_b, "Paired embeddings, second modality");
  eval_cmd->add_option("--judge", eval.judges, "Judge report JSON (repeatable)");
  eval_cmd->add_option("--seed", eval.seed, "Seed of the built-in featurizers");
  eval_cmd->add_option("--k", eval.k, "Neighbours for density/coverage");
  eval_cmd->add_option("--splits", eval.splits, "Inception score splits");
  eval_cmd->add_option("--fd-dim", eval.fd_dim, "Width of the second embedding source");
  eval_cmd->add_option("--classes", eval.classes, "Classes of the built-in classifier");
  eval_cmd->add_option("--out", eval.out, "Report path (sidecar: <out>.meta.json)");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time generation across Euler step counts");
  add_generate_options(bench_cmd, bench.gen);
  bench_cmd->add_option("--repeats", bench.repeats, "Runs per step count");
  bench_cmd->add_option("--steps-list", bench.steps_list, "Comma-separated Euler step counts");
  bench_cmd->add_option("--out", bench.gen.out, "Timing record path (JSON)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synthdata(synth, out);
    if (train_cmd->parsed()) return cmd_train(train, out);
    if (gen_cmd->parsed()) return cmd_generate(gen, out);
    if (eval_cmd->parsed()) return cmd_eval(eval, out, err);
    if (bench_cmd->parsed()) return cmd_bench(bench, out);
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    err << (code == kExitUsage ? "usage error: " : code == kExitData ? "data error: " : "internal error: ") << e.what()
        << '\n';
    return code;
  }
  return kExitInternal;
}

}  // namespace robin
