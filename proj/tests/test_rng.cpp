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

#include "robin/rng.hpp"

using namespace robin;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
  }
  CHECK_FALSE(a == c);
}

TEST_CASE("state round trip resumes the stream exactly") {
  Rng a(7);
  for (int i = 0; i < 13; ++i) a.normal();
  const std::string saved = a.state();
  std::vector<double> expect;
  for (int i = 0; i < 20; ++i) expect.push_back(a.uniform());
  Rng b(0);
  b.set_state(saved);
  for (double e : expect) CHECK(b.uniform() == e);
}

TEST_CASE("distribution ranges and moments") {
  Rng rng(1);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK_UNARY(u >= 0.0 && u < 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
    CHECK(rng.index(7) < 7);
  }
  // 5-sigma bands on the sample mean and variance.
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sq / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("derived seeds depend on the tag") {
  CHECK(Rng::derive(1, "a") == Rng::derive(1, "a"));
  CHECK(Rng::derive(1, "a") != Rng::derive(1, "b"));
  CHECK(Rng::derive(1, "a") != Rng::derive(2, "a"));
}

TEST_CASE("fnv1a64 reference values") {
  // Published FNV-1a 64-bit test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}
