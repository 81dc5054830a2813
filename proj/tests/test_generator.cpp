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

#include <doctest.h>

#include <cmath>
#include <memory>

#include "robin/error.hpp"
#include "robin/generator.hpp"
#include "robin/rng.hpp"
#include "support.hpp"

using namespace robin;

namespace {

ModelConfig tiny_model(std::size_t p = 4) {
  ModelConfig cfg;
  cfg.d = 16;
  cfg.heads = 2;
  cfg.n_sem = 1;
  cfg.n_rite = 1;
  cfg.n_ale = 1;
  cfg.n_dit = 1;
  cfg.d_q = 4;
  cfg.patch_size = p;
  return cfg;
}

SynthSpec tiny_task(TaskMode mode = TaskMode::TextOnly) {
  SynthSpec s;
  s.seed = 5;
  s.count = 4;
  s.mode = mode;
  s.n_patches = 3;
  s.patch_size = 4;
  s.channels = 4;
  s.frame_size = 4;
  return s;
}

LatentCodec tiny_codec() { return LatentCodec(CodecSpec{4, 4, 9}); }

// Every parameter off its initial value, so zero-initialized read-outs carry
// signal and gradient.
void jitter(const RobinModel& model, Rng& rng, double sd = 0.1) {
  NoGradGuard guard;
  for (auto p : model.params()) {
    for (double& v : p.tensor.mutable_data()) v += sd * rng.normal();
  }
}

GenerationRequest request(std::size_t n, std::uint64_t seed) {
  GenerationRequest req;
  req.text = TextTokens{{1, 4, 9}, 32};
  req.n_patches = n;
  req.seed = seed;
  return req;
}

// Returns the exact displacement for whichever ground-truth patch follows
// `prev`.
class OracleVelocity : public VelocityModel {
 public:
  OracleVelocity(const PatchSequence& patches, const Tensor& bos) : patches_(patches), bos_(bos) {}
  Tensor velocity(const Tensor& x_t, double t, const Tensor&, const Tensor& prev) const override {
    const auto pv = prev.values();
    for (std::size_t i = 0; i < patches_.count; ++i) {
      const Tensor before = i == 0 ? bos_ : patches_.patch(i - 1);
      if (before.values() == pv) return scale(sub(x_t, patches_.patch(i)), 1.0 / t);
    }
    FAIL("unknown previous patch");
    return x_t;
  }
  Tensor null_context() const override { return Tensor::zeros({1, 16}); }

 private:
  PatchSequence patches_;
  Tensor bos_;
};

}  // namespace

TEST_CASE("one patch is generated from an empty history") {
  RobinModel model(tiny_model(), 4, 1);
  const auto res = generate(request(1, 3), model, tiny_codec());
  CHECK(res.history_lengths == std::vector<std::size_t>{0});
  CHECK(res.per_patch_ms.size() == 1);
  CHECK(res.patches.count == 1);
}

TEST_CASE("history grows by one patch per step") {
  RobinModel model(tiny_model(), 4, 1);
  const auto res = generate(request(4, 3), model, tiny_codec());
  CHECK(res.history_lengths == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("waveform length is patches times patch size times frame size") {
  for (std::size_t p : {1u, 2u, 4u, 8u}) {
    RobinModel model(tiny_model(p), 4, 2);
    for (std::size_t n : {1u, 3u}) {
      const auto res = generate(request(n, 1), model, tiny_codec());
      CHECK(res.latents.frames == n * p);
      CHECK(res.waveform.samples.size() == n * p * 4);
    }
  }
}

TEST_CASE("generation is a pure function of the seed") {
  RobinModel model(tiny_model(), 4, 1);
  Rng rng(1);
  jitter(model, rng);
  const auto a = generate(request(3, 7), model, tiny_codec());
  const auto b = generate(request(3, 7), model, tiny_codec());
  const auto c = generate(request(3, 8), model, tiny_codec());
  CHECK(a.waveform.samples == b.waveform.samples);
  CHECK(a.patches.values == b.patches.values);
  CHECK(a.patches.values != c.patches.values);
}

TEST_CASE("generation decomposes into plan, sample, append") {
  RobinModel model(tiny_model(), 4, 1);
  Rng jr(2);
  jitter(model, jr);
  const GenerationRequest req = request(4, 11);
  const auto res = generate(req, model, tiny_codec());

  NoGradGuard guard;
  Rng rng(req.seed);
  PatchSequence seq{0, 4, 4, {}, 0};
  Tensor prev = model.bos();
  for (std::size_t i = 0; i < req.n_patches; ++i) {
    const Tensor ctx = model.ar().plan(req.text, std::nullopt, seq).planning;
    prev = euler_integrate(model.refiner(), Tensor::randn({4, 4}, rng), ctx, prev, req.flow);
    seq.append(prev);
  }
  REQUIRE(seq.values.size() == res.patches.values.size());
  for (std::size_t i = 0; i < seq.values.size(); ++i) CHECK(std::abs(seq.values[i] - res.patches.values[i]) < 1e-12);
  const Waveform w = tiny_codec().decode(unpatchify(seq));
  for (std::size_t i = 0; i < w.samples.size(); ++i) CHECK(std::abs(w.samples[i] - res.waveform.samples[i]) < 1e-12);
}

TEST_CASE("later patches never change earlier ones") {
  RobinModel model(tiny_model(), 4, 1);
  Rng jr(3);
  jitter(model, jr);
  const auto short_run = generate(request(2, 5), model, tiny_codec());
  const auto long_run = generate(request(5, 5), model, tiny_codec());
  const std::vector<double> head(long_run.patches.values.begin(),
                                 long_run.patches.values.begin() + static_cast<long>(short_run.patches.values.size()));
  CHECK(head == short_run.patches.values);
}

TEST_CASE("generation rejects bad requests") {
  RobinModel model(tiny_model(), 4, 1);
  CHECK_THROWS_AS(generate(request(0, 1), model, tiny_codec()), ConfigError);
  CHECK_THROWS_AS(generate(request(1, 1), model, LatentCodec(CodecSpec{8, 8, 0})), ShapeError);
}

TEST_CASE("non-finite weights surface as a generation error") {
  RobinModel model(tiny_model(), 4, 1);
  {
    NoGradGuard guard;
    for (auto p : model.params()) {
      if (p.name.find("refiner.out") != std::string::npos) {
        for (double& v : p.tensor.mutable_data()) v = std::nan("");
      }
    }
  }
  CHECK_THROWS_AS(generate(request(2, 1), model, tiny_codec()), GenerationError);
}

TEST_CASE("teacher forcing with an exact velocity oracle has zero loss") {
  const auto examples = synth_examples(tiny_task());
  RobinModel model(tiny_model(), 4, 1);
  Rng rng(4);
  for (const Example& ex : examples) {
    const PatchSequence patches = patchify(ex.latents, 4);
    OracleVelocity oracle(patches, model.bos());
    FlowConfig flow;
    const auto losses = teacher_forced_losses(ex, model.ar(), oracle, model.bos(), 4, flow, rng);
    REQUIRE(losses.size() == patches.count);
    for (const Tensor& l : losses) CHECK(l.item() < 1e-12);
  }
}

TEST_CASE("single planning pass equals one planning pass per patch") {
  const auto examples = synth_examples(tiny_task(TaskMode::TextVideo));
  RobinModel model(tiny_model(), 4, 1);
  model.enable_video(2);
  Rng jr(5);
  jitter(model, jr);
  const Example& ex = examples[1];
  FlowConfig flow;
  Rng a(17);
  Rng b(17);
  const auto fused = teacher_forced_losses(ex, model, flow, a);
  const PatchSequence patches = patchify(ex.latents, 4);
  for (std::size_t i = 0; i < patches.count; ++i) {
    const Tensor ctx = model.ar().plan(ex.text, ex.video, patches.prefix(i)).planning;
    const Tensor prev = i == 0 ? model.bos() : patches.patch(i - 1);
    CHECK(fused[i].item() == flow_loss(model.refiner(), patches.patch(i), ctx, prev, flow, b).item());
  }
}

TEST_CASE("end-to-end gradient through planner, quantizer and refiner matches central differences") {
  const auto examples = synth_examples(tiny_task(TaskMode::TextVideo));
  RobinModel model(tiny_model(), 4, 1);
  model.enable_video(2);
  Rng jr(6);
  jitter(model, jr, 0.2);
  auto tape = std::make_shared<FsqOffsetTape>();
  model.ar().fsq().set_offset_tape(tape);

  FlowConfig flow;
  const Example& ex = examples[2];
  const Rng frozen(23);
  auto loss = [&] {
    tape->cursor = 0;
    Rng r = frozen;
    return teacher_forced_loss(ex, model, flow, r);
  };
  {
    NoGradGuard guard;
    loss();
  }
  tape->mode = FsqOffsetTape::Mode::Replay;

  std::vector<Tensor> leaves;
  for (const auto& p : model.params()) leaves.push_back(p.tensor);
  Rng pick(7);
  const auto res = testing::check_gradients(loss, leaves, pick, 400);
  CHECK(res.points == 400);
  CHECK(res.max_error < testing::kFdTolerance);
}
