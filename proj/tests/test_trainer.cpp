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
#include <fstream>
#include <limits>
#include <sstream>

#include "robin/error.hpp"
#include "robin/trainer.hpp"
#include "support.hpp"

using namespace robin;

namespace {

Config tiny_config(std::size_t steps = 40) {
  Config cfg = Config::preset("desk");
  cfg.model.d = 16;
  cfg.model.n_sem = 1;
  cfg.model.n_dit = 1;
  cfg.model.d_q = 4;
  cfg.codec.frame_size = 4;
  cfg.codec.channels = 4;
  cfg.data.count = 4;
  cfg.data.n_patches = 3;
  cfg.train.steps = steps;
  cfg.train.batch_size = 2;
  cfg.train.seed = 3;
  return cfg;
}

std::vector<Example> examples_for(Config cfg, const std::string& mode) {
  cfg.data.mode = mode;
  return synth_examples(synth_spec(cfg));
}

}  // namespace

TEST_CASE("schedule: zero at start, peak after warmup, zero at the end") {
  TrainConfig t;
  t.steps = 1000;
  t.warmup_frac = 0.1;
  t.peak_lr = 2e-3;
  CHECK(lr_at(0, t) == 0.0);
  CHECK(lr_at(50, t) == doctest::Approx(1e-3));
  CHECK(lr_at(100, t) == doctest::Approx(2e-3));
  CHECK(lr_at(550, t) == doctest::Approx(1e-3));
  CHECK(std::abs(lr_at(1000, t)) < 1e-15);
  CHECK_THROWS_AS(lr_at(1001, t), ContractError);
}

TEST_CASE("schedule is continuous and never exceeds its peak") {
  TrainConfig t;
  t.steps = 997;
  t.warmup_frac = 0.13;
  t.peak_lr = 1.0;
  const double max_jump = 1.0 / (t.warmup_frac * t.steps);
  for (std::size_t s = 0; s < t.steps; ++s) {
    CHECK(lr_at(s, t) <= 1.0);
    CHECK(lr_at(s, t) >= 0.0);
    CHECK(std::abs(lr_at(s + 1, t) - lr_at(s, t)) <= max_jump + 1e-12);
  }
}

TEST_CASE("first AdamW update moves each weight by lr against the gradient sign") {
  std::vector<double> p{0.5, -1.0, 2.0};
  const std::vector<double> g{3.0, -0.25, 0.0};
  AdamMoments m;
  adamw_update(p, g, m, 1, 0.1, 0.0);
  CHECK(p[0] == doctest::Approx(0.4));
  CHECK(p[1] == doctest::Approx(-0.9));
  CHECK(p[2] == 2.0);
}

TEST_CASE("weight decay is decoupled from the gradient") {
  std::vector<double> p{1.0, -4.0};
  const std::vector<double> zero{0.0, 0.0};
  AdamMoments m;
  adamw_update(p, zero, m, 1, 0.5, 0.1);
  CHECK(p[0] == doctest::Approx(0.95));
  CHECK(p[1] == doctest::Approx(-3.8));
  std::vector<double> q{1.0};
  AdamMoments mq;
  adamw_update(q, std::vector<double>{0.0}, mq, 1, 0.5, 0.0);
  CHECK(q[0] == 1.0);
}

TEST_CASE("AdamW reaches the minimum of a quadratic") {
  Rng rng(1);
  Tensor x = testing::leaf_randn({5}, rng);
  const Tensor c = Tensor::randn({5}, rng);
  ParamList params{{"x", x}};
  AdamState state;
  for (int i = 0; i < 3000; ++i) {
    x.zero_grad();
    const Tensor d = sub(x, c);
    scale(sum(mul(d, d)), 0.5).backward();
    adamw_step(params, state, 1e-2 * (1.0 - i / 3000.0), 0.0);
  }
  const auto xv = x.values();
  const auto cv = c.values();
  for (std::size_t i = 0; i < xv.size(); ++i) CHECK(xv[i] == doctest::Approx(cv[i]).epsilon(1e-3).scale(1.0));
  CHECK(state.t == 3000);
}

TEST_CASE("missing gradients count as zero and non-finite ones are named") {
  Rng rng(2);
  Tensor a = testing::leaf_randn({3}, rng);
  Tensor b = testing::leaf_randn({3}, rng);
  const auto before = b.values();
  ParamList params{{"a", a}, {"b", b}};
  AdamState state;
  sum(a).backward();
  adamw_step(params, state, 0.1, 0.0);
  CHECK(b.values() == before);
  a.zero_grad();
  sum(scale(a, std::numeric_limits<double>::infinity())).backward();
  try {
    adamw_step(params, state, 0.1, 0.0);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("a") != std::string::npos);
  }
}

TEST_CASE("global norm covers every gradient") {
  Tensor a = Tensor::from({2}, {0.0, 0.0}, true);
  Tensor b = Tensor::from({1}, {0.0}, true);
  sum(add(scale(a, 3.0), Tensor::zeros({2}))).backward();
  sum(scale(b, 4.0)).backward();
  // grads: a = (3, 3), b = (4)
  CHECK(global_grad_norm({{"a", a}, {"b", b}}) == doctest::Approx(std::sqrt(34.0)));
}

TEST_CASE("windowed means drop a partial tail") {
  CHECK(windowed_means({1, 2, 3, 4, 5}, 2) == std::vector<double>{1.5, 3.5});
  CHECK(windowed_means({1, 2}, 3).empty());
}

TEST_CASE("checkpoint bytes round-trip exactly") {
  const Config cfg = tiny_config(4);
  Trainer trainer(cfg, examples_for(cfg, "text_only"));
  trainer.run(2);
  const Checkpoint ck = trainer.checkpoint();
  const std::string bytes = encode_checkpoint(ck);
  CHECK(bytes.substr(0, 4) == "RBCK");
  const Checkpoint back = decode_checkpoint(bytes, "mem");
  CHECK(back == ck);
  CHECK(encode_checkpoint(back) == bytes);

  const auto dir = testing::scratch_dir("ckpt");
  save_checkpoint(dir / "a.rbck", ck);
  CHECK(load_checkpoint(dir / "a.rbck") == ck);
  std::ifstream in(dir / "a.rbck", std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == bytes);
}

TEST_CASE("malformed checkpoint bytes are rejected") {
  const Config cfg = tiny_config(4);
  Trainer trainer(cfg, examples_for(cfg, "text_only"));
  const std::string bytes = encode_checkpoint(trainer.checkpoint());
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic, "mem"), Error);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3), "mem"), Error);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x", "mem"), Error);
  CHECK_THROWS_AS(load_checkpoint(testing::scratch_dir("nock") / "missing.rbck"), Error);
}

TEST_CASE("architecture mismatch is reported with both hashes") {
  Config cfg = tiny_config(4);
  Trainer trainer(cfg, examples_for(cfg, "text_only"));
  const Checkpoint ck = trainer.checkpoint();
  Config other = cfg;
  other.model.d = 24;
  try {
    model_from_checkpoint(other, ck);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(hex64(cfg.model_hash())) != std::string::npos);
    CHECK(msg.find(hex64(other.model_hash())) != std::string::npos);
  }
}

TEST_CASE("parameter loading is strict about names and shapes") {
  const Config cfg = tiny_config(4);
  Trainer trainer(cfg, examples_for(cfg, "text_only"));
  Checkpoint ck = trainer.checkpoint();
  RobinModel model(cfg.model, cfg.codec.channels, 1);
  load_parameters(model, ck);
  const ParamList want = trainer.model().params();
  const ParamList got = model.params();
  REQUIRE(want.size() == got.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i].tensor.values() == want[i].tensor.values());
  Checkpoint missing = ck;
  missing.records.erase("bos");
  CHECK_THROWS_AS(load_parameters(model, missing), ConfigError);
  Checkpoint extra = ck;
  extra.records["stray"] = ArrayRecord{{1}, {0.0}};
  CHECK_THROWS_AS(load_parameters(model, extra), ConfigError);
  Checkpoint reshaped = ck;
  reshaped.records["bos"].shape = {reshaped.records["bos"].values.size()};
  CHECK_THROWS_AS(load_parameters(model, reshaped), ConfigError);
}

TEST_CASE("resuming reproduces an uninterrupted run bit for bit") {
  const Config cfg = tiny_config(12);
  const auto ex = examples_for(cfg, "text_only");
  Trainer straight(cfg, ex);
  const auto full = straight.run();

  Trainer first(cfg, ex);
  first.run(5);
  const Checkpoint mid = decode_checkpoint(encode_checkpoint(first.checkpoint()), "mem");
  Trainer second = Trainer::resume(cfg, ex, mid);
  CHECK(second.completed() == 5);
  const auto tail = second.run();
  REQUIRE(tail.size() == 7);
  for (std::size_t i = 0; i < tail.size(); ++i) CHECK(tail[i].loss == full[5 + i].loss);
  CHECK(encode_checkpoint(second.checkpoint()) == encode_checkpoint(straight.checkpoint()));
}

TEST_CASE("stage 1 refuses video and stage 2 requires it") {
  const Config cfg = tiny_config(4);
  CHECK_THROWS_AS(Trainer(cfg, examples_for(cfg, "text_video")), DataError);
  Trainer s1(cfg, examples_for(cfg, "text_only"));
  s1.run(2);
  const Checkpoint init = s1.checkpoint();
  CHECK_THROWS_AS(Trainer::stage2(cfg, examples_for(cfg, "text_only"), init), DataError);
  Trainer s2 = Trainer::stage2(cfg, examples_for(cfg, "text_video"), init);
  CHECK(s2.model().has_video());
  CHECK(s2.completed() == 0);
  s2.run(2);
  const Checkpoint after = s2.checkpoint();
  CHECK(after.stage == 2);
  CHECK_THROWS_AS(Trainer::stage2(cfg, examples_for(cfg, "text_video"), after), ConfigError);
  Config stage2_cfg = cfg;
  stage2_cfg.train.stage = 2;
  Trainer resumed = Trainer::resume(stage2_cfg, examples_for(cfg, "text_video"), after);
  CHECK(resumed.model().has_video());
}

TEST_CASE("stage 2 keeps the stage-1 weights it starts from") {
  const Config cfg = tiny_config(4);
  Trainer s1(cfg, examples_for(cfg, "text_only"));
  s1.run(3);
  const Checkpoint init = s1.checkpoint();
  Trainer s2 = Trainer::stage2(cfg, examples_for(cfg, "text_video"), init);
  for (const auto& p : s2.model().params()) {
    const auto it = init.records.find(p.name);
    if (p.name.find("video_proj") != std::string::npos) {
      CHECK(it == init.records.end());
    } else {
      REQUIRE(it != init.records.end());
      CHECK(p.tensor.values() == it->second.values);
    }
  }
}

TEST_CASE("initial loss is close to the data energy plus one") {
  const Config cfg = tiny_config(4);
  const auto ex = examples_for(cfg, "text_only");
  Trainer trainer(cfg, ex);
  double expect = 0.0;
  for (const Example& e : ex) {
    double energy = 0.0;
    for (double v : e.latents.values) energy += v * v;
    expect += energy / static_cast<double>(e.latents.values.size()) + 1.0;
  }
  expect /= static_cast<double>(ex.size());
  CHECK(trainer.evaluate(9, 200) == doctest::Approx(expect).epsilon(0.1));
}

TEST_CASE("training lowers the loss") {
  const Config cfg = tiny_config(300);
  Trainer trainer(cfg, examples_for(cfg, "text_only"));
  const double before = trainer.evaluate(5, 8);
  const auto records = trainer.run();
  const double after = trainer.evaluate(5, 8);
  CHECK(after < 0.9 * before);
  std::vector<double> losses;
  for (const auto& r : records) losses.push_back(r.loss);
  const auto windows = windowed_means(losses, 100);
  REQUIRE(windows.size() == 3);
  CHECK(windows[2] < windows[0]);
}

TEST_CASE("step log lines are written when requested") {
  const Config cfg = tiny_config(3);
  const auto dir = testing::scratch_dir("trainlog");
  TrainOptions opts;
  opts.log_path = dir / "log.jsonl";
  Trainer trainer(cfg, examples_for(cfg, "text_only"), opts);
  trainer.run();
  std::ifstream in(opts.log_path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    CHECK(line.find("\"loss\"") != std::string::npos);
    ++n;
  }
  CHECK(n == 3);
  CHECK_THROWS_AS(trainer.step(), ContractError);
}
