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

#include "robin/config.hpp"
#include "robin/error.hpp"
#include "robin/rng.hpp"

using namespace robin;

TEST_CASE("parse overrides defaults and ignores comments") {
  const Config c = Config::parse(
      "# run\n[model]\nd = 48 ; width\nheads = 3\n\n[flow]\ncfg_scale = 1.5\n[train]\nseed = 9\n", "t.ini");
  CHECK(c.model.d == 48);
  CHECK(c.model.heads == 3);
  CHECK(c.flow.cfg_scale == 1.5);
  CHECK(c.train.seed == 9);
  CHECK(c.model.patch_size == 4);
}

TEST_CASE("unknown keys and sections are rejected with a location") {
  try {
    Config::parse("[model]\nd = 32\nwidth = 3\n", "cfg.ini");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("cfg.ini:3") != std::string::npos);
    CHECK(msg.find("width") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse("[nope]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[model]\nd = abc\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("d = 3\n"), ConfigError);
}

TEST_CASE("validation catches inconsistent values") {
  Config c;
  c.model.heads = 5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = Config{};
  c.train.warmup_frac = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = Config{};
  c.train.peak_lr = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = Config{};
  c.codec.channels = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(Config{}.validate());
}

TEST_CASE("canonical text round trips through parse") {
  Config c;
  c.model.d = 64;
  c.flow.cfg_scale = 2.5;
  c.paths.out = "runs/a";
  const std::string text = c.canonical();
  // canonical lines are section.key = value; rebuild INI from them.
  std::string ini;
  std::string section;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    const std::size_t dot = line.find('.');
    const std::string s = line.substr(0, dot);
    if (s != section) {
      ini += "[" + s + "]\n";
      section = s;
    }
    ini += line.substr(dot + 1) + "\n";
  }
  const Config back = Config::parse(ini);
  CHECK(back.canonical() == text);
  CHECK(back.hash() == c.hash());
}

TEST_CASE("hashes separate architecture from run settings") {
  Config a;
  Config b;
  b.train.steps = 17;
  CHECK(a.hash() != b.hash());
  CHECK(a.model_hash() == b.model_hash());
  b.model.patch_size = 8;
  CHECK(a.model_hash() != b.model_hash());
}

TEST_CASE("presets") {
  CHECK(Config::preset("desk").canonical() == Config{}.canonical());
  const Config p1 = Config::preset("paper-stage1");
  CHECK(p1.train.steps == 120000);
  CHECK(p1.train.peak_lr == 1e-3);
  CHECK(p1.train.batch_size == 8);
  const Config p2 = Config::preset("paper-stage2");
  CHECK(p2.train.peak_lr == 1e-4);
  CHECK(p2.train.stage == 2);
  CHECK(p2.flow.euler_steps == 20);
  CHECK(p2.flow.cfg_scale == 2.0);
  CHECK_THROWS_AS(Config::preset("huge"), ConfigError);
}

TEST_CASE("set applies a single override") {
  Config c;
  c.set("model", "d", "16");
  CHECK(c.model.d == 16);
  CHECK_THROWS_AS(c.set("model", "nope", "1"), ConfigError);
}
