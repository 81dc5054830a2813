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
#include <limits>
#include <set>

#include "robin/ar_head.hpp"
#include "robin/error.hpp"
#include "support.hpp"

using namespace robin;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.d = 16;
  cfg.heads = 2;
  cfg.n_sem = 1;
  cfg.n_rite = 1;
  cfg.n_ale = 1;
  cfg.d_q = 8;
  cfg.patch_size = 4;
  return cfg;
}

PatchSequence random_history(std::size_t n, std::size_t p, std::size_t k, Rng& rng) {
  PatchSequence h{0, p, k, {}, 0};
  for (std::size_t i = 0; i < n; ++i) h.append(Tensor::randn({p, k}, rng));
  return h;
}

// Nearest point of the grid step * {-L..L}; ties go away from zero.
double grid_oracle(double z, double step, std::size_t levels) {
  double best = 0.0;
  double best_dist = std::numeric_limits<double>::infinity();
  const int l = static_cast<int>(levels);
  for (int i = -l; i <= l; ++i) {
    const double g = step * i;
    const double dist = std::abs(z - g);
    if (dist < best_dist || (dist == best_dist && std::abs(g) > std::abs(best))) {
      best = g;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("quantizer output lies on the grid and matches a nearest-point oracle") {
  Rng rng(1);
  const double step = 0.25;
  const std::size_t levels = 4;
  const double bound = step * static_cast<double>(levels);
  for (int i = 0; i < 100000; ++i) {
    const double z = 3.0 * rng.normal();
    const double q = FsqLayer::quantize_value(z, step, levels);
    const double k = q / step;
    CHECK_UNARY(k == std::round(k) && std::abs(k) <= static_cast<double>(levels));
    if (std::abs(z) <= bound) CHECK_UNARY(std::abs(q - z) <= step / 2.0);
    CHECK_UNARY(q == grid_oracle(z, step, levels));
  }
}

TEST_CASE("quantizer clips after rounding") {
  CHECK(FsqLayer::quantize_value(100.0, 0.25, 4) == 1.0);
  CHECK(FsqLayer::quantize_value(-100.0, 0.25, 4) == -1.0);
  CHECK(FsqLayer::quantize_value(1.12, 0.25, 4) == 1.0);
  CHECK(FsqLayer::quantize_value(0.125, 0.25, 4) == 0.25);
  CHECK(FsqLayer::quantize_value(-0.125, 0.25, 4) == -0.25);
}

TEST_CASE("straight-through jacobian is the identity") {
  Rng rng(2);
  FsqLayer fsq(16, 8, 4, 0.25, rng);
  Tensor z = Tensor::randn({5, 8}, rng, 1.0, true);
  sum(fsq.quantize(z)).backward();
  for (double g : z.grad()) CHECK(g == 1.0);
}

TEST_CASE("offset tape replays the recorded quantization with an exact derivative") {
  Rng rng(3);
  FsqLayer fsq(16, 8, 4, 0.25, rng);
  auto tape = std::make_shared<FsqOffsetTape>();
  fsq.set_offset_tape(tape);
  Tensor z = Tensor::randn({3, 8}, rng);
  const auto recorded = fsq.quantize(z).values();
  tape->mode = FsqOffsetTape::Mode::Replay;
  tape->cursor = 0;
  CHECK(fsq.quantize(z).values() == recorded);
  CHECK_THROWS_AS(fsq.quantize(z), ContractError);
}

TEST_CASE("with the residual encoder zeroed the planning embedding equals the discrete embedding") {
  Rng rng(4);
  const ModelConfig cfg = small_config();
  ArHead head(cfg, 4, rng);
  head.rite().zero_output();
  const TextTokens text{{1, 5, 7}, cfg.vocab_size};
  const PlanOutput out = head.plan(text, std::nullopt, random_history(2, 4, 4, rng));
  CHECK(out.planning.values() == out.discrete.values());
}

TEST_CASE("plan shapes and segment accounting") {
  Rng rng(5);
  const ModelConfig cfg = small_config();
  ArHead head(cfg, 4, rng);
  const TextTokens text{{1, 2, 3}, cfg.vocab_size};
  const PlanOutput empty = head.plan(text, std::nullopt, PatchSequence{0, 4, 4, {}, 0});
  CHECK(empty.segments.history == 0);
  CHECK(empty.segments.text == 3);
  CHECK(empty.planning.shape() == Shape{3, cfg.d});
  const PlanOutput three = head.plan(text, std::nullopt, random_history(3, 4, 4, rng));
  CHECK(three.segments.total() == 6);
  CHECK(three.bottleneck.shape() == Shape{6, cfg.d_q});
  for (double q : three.quantized.data()) {
    CHECK(q == FsqLayer::quantize_value(q, cfg.fsq_step, cfg.fsq_levels));
  }
}

TEST_CASE("prefix-causal planning: a longer history leaves earlier rows bit-identical") {
  Rng rng(6);
  const ModelConfig cfg = small_config();
  ArHead head(cfg, 4, rng);
  head.enable_video(rng);
  const TextTokens text{{3, 9}, cfg.vocab_size};
  VideoFeatures video{2, cfg.video_dim, {}};
  for (std::size_t i = 0; i < 2 * cfg.video_dim; ++i) video.values.push_back(rng.normal());
  const PatchSequence full = random_history(4, 4, 4, rng);
  const PlanOutput whole = head.plan(text, video, full);
  const std::size_t prefix = whole.segments.prefix();
  CHECK(prefix == 4);
  for (std::size_t i = 0; i <= 4; ++i) {
    const PlanOutput part = head.plan(text, video, full.prefix(i));
    const auto expect = slice_rows(whole.planning, 0, prefix + i).values();
    CHECK(part.planning.values() == expect);
  }
}

TEST_CASE("history never influences prefix rows") {
  Rng rng(7);
  const ModelConfig cfg = small_config();
  ArHead head(cfg, 4, rng);
  const TextTokens text{{3, 9, 11}, cfg.vocab_size};
  const PlanOutput a = head.plan(text, std::nullopt, random_history(2, 4, 4, rng));
  const PlanOutput b = head.plan(text, std::nullopt, random_history(2, 4, 4, rng));
  CHECK(slice_rows(a.planning, 0, 3).values() == slice_rows(b.planning, 0, 3).values());
  CHECK(slice_rows(a.planning, 3, 5).values() != slice_rows(b.planning, 3, 5).values());
}

TEST_CASE("video pathway exists only after enabling it") {
  Rng rng(8);
  const ModelConfig cfg = small_config();
  ArHead head(cfg, 4, rng);
  ParamList before;
  head.collect(before);
  for (const auto& p : before) CHECK(p.name.find("video_proj") == std::string::npos);
  const TextTokens text{{1}, cfg.vocab_size};
  VideoFeatures video{2, cfg.video_dim, std::vector<double>(2 * cfg.video_dim, 0.5)};
  CHECK_THROWS_AS(head.plan(text, video, PatchSequence{0, 4, 4, {}, 0}), ShapeError);
  head.enable_video(rng);
  ParamList after;
  head.collect(after);
  CHECK(after.size() == before.size() + 2);
  const PlanOutput out = head.plan(text, video, PatchSequence{0, 4, 4, {}, 0});
  CHECK(out.segments.video == 2);
  VideoFeatures wrong{2, cfg.video_dim + 1, std::vector<double>(2 * (cfg.video_dim + 1), 0.5)};
  CHECK_THROWS_AS(head.plan(text, wrong, PatchSequence{0, 4, 4, {}, 0}), ShapeError);
}

TEST_CASE("history channel mismatch is a shape error") {
  Rng rng(9);
  const ModelConfig cfg = small_config();
  ArHead head(cfg, 4, rng);
  const TextTokens text{{1}, cfg.vocab_size};
  CHECK_THROWS_AS(head.plan(text, std::nullopt, random_history(1, 4, 3, rng)), ShapeError);
}

TEST_CASE("parameter names are unique") {
  Rng rng(10);
  ArHead head(small_config(), 4, rng);
  head.enable_video(rng);
  ParamList params;
  head.collect(params);
  std::set<std::string> names;
  for (const auto& p : params) CHECK(names.insert(p.name).second);
}
