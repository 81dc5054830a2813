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

#include <set>

#include "robin/container.hpp"
#include "robin/dataset.hpp"
#include "robin/error.hpp"
#include "support.hpp"

using namespace robin;

TEST_CASE("synthetic examples are deterministic and shaped by the spec") {
  SynthSpec spec;
  spec.seed = 7;
  const auto a = synth_examples(spec);
  const auto b = synth_examples(spec);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].text.ids == b[i].text.ids);
    CHECK(a[i].latents.values == b[i].latents.values);
    CHECK_FALSE(a[i].video.has_value());
    CHECK(a[i].latents.frames == spec.n_patches * spec.patch_size);
    CHECK(a[i].latents.channels == spec.channels);
    CHECK(a[i].text.ids.size() == spec.text_len);
  }
  spec.seed = 8;
  CHECK(synth_examples(spec)[0].latents.values != a[0].latents.values);
}

TEST_CASE("targets are a function of the conditioning") {
  SynthSpec spec;
  spec.mode = TaskMode::TextVideo;
  const auto ex = synth_examples(spec);
  for (const Example& e : ex) {
    REQUIRE(e.video.has_value());
    CHECK(synth_target(spec, e.text, e.video).values == e.latents.values);
  }
  // Shared prompts: text alone cannot determine the target.
  std::set<std::vector<int>> prompts;
  for (const Example& e : ex) prompts.insert(e.text.ids);
  CHECK(prompts.size() <= spec.text_pool);
  CHECK(ex[0].text.ids == ex[spec.text_pool].text.ids);
  CHECK(ex[0].latents.values != ex[spec.text_pool].latents.values);
}

TEST_CASE("manifest serialization round trips") {
  Manifest m;
  m.records.push_back({"a", {1, 2}, "", "latents/a.rbna"});
  m.records.push_back({"b", {3}, "video/b.rbna", "latents/b.rbna"});
  const Manifest back = parse_manifest(serialize_manifest(m), "mem");
  CHECK(back.records == m.records);
}

TEST_CASE("manifest errors name the line and field") {
  auto message = [](const std::string& text) {
    try {
      parse_manifest(text, "m.jsonl");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string ok = R"({"id":"a","text_ids":[1],"latent_path":"x"})";
  CHECK(message(ok + "\n{bad json\n").find("m.jsonl:2") != std::string::npos);
  CHECK(message(ok + "\n" + ok + "\n").find("duplicate id 'a' on line 1 and line 2") != std::string::npos);
  CHECK(message(R"({"id":"a","text_ids":[1],"latent_path":"x","extra":1})").find("extra") != std::string::npos);
  CHECK(message(R"({"id":"a","latent_path":"x"})").find("text_ids") != std::string::npos);
}

TEST_CASE("written datasets load back with missing files reported") {
  const auto dir = robin::testing::scratch_dir("dataset");
  SynthSpec spec;
  spec.mode = TaskMode::TextVideo;
  spec.count = 3;
  synth_task(spec, dir);
  const Manifest m = load_manifest(dir / "manifest.jsonl");
  CHECK(m.records.size() == 3);
  const auto examples = load_examples(m, spec.vocab_size);
  const auto direct = synth_examples(spec);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(examples[i].latents.values == direct[i].latents.values);
    REQUIRE(examples[i].video.has_value());
    CHECK(examples[i].video->values == direct[i].video->values);
  }
  std::filesystem::remove(dir / "latents" / "ex0001.rbna");
  try {
    load_manifest(dir / "manifest.jsonl");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("ex0001.rbna") != std::string::npos);
  }
}

TEST_CASE("token ids are validated against the vocabulary") {
  TextTokens t{{0, 5, 40}, 32};
  CHECK_THROWS_AS(t.validate(), DataError);
  TextTokens empty{{}, 32};
  CHECK_THROWS_AS(empty.validate(), DataError);
}

TEST_CASE("zeroed video keeps its shape") {
  VideoFeatures v{2, 3, {1, 2, 3, 4, 5, 6}};
  const VideoFeatures z = v.zeroed();
  CHECK(z.frames == 2);
  CHECK(z.dim == 3);
  CHECK(z.values == std::vector<double>(6, 0.0));
  CHECK(v.tensor().shape() == Shape{2, 3});
}
