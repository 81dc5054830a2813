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

// Shared helpers for the test binaries: finite-difference gradient checks,
// scratch directories, small fixtures.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "robin/rng.hpp"
#include "robin/tensor.hpp"

namespace robin::testing {

/// Central-difference step used by every gradient check.
inline constexpr double kFdStep = 1e-5;
/// Relative error bound for gradient checks.
inline constexpr double kFdTolerance = 1e-4;
/// Gradients smaller than this are compared absolutely: central differences
/// carry ~1e-11 of cancellation noise, which is large relative to a
/// gradient that is zero by construction.
inline constexpr double kFdFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kFdFloor});
  return std::abs(analytic - numeric) / scale;
}

/// Fixed random weighting so every output element gets a distinct cotangent.
inline Tensor random_readout(const Tensor& out, Rng& rng) {
  std::vector<double> w(out.numel());
  for (double& x : w) x = rng.normal();
  return Tensor::from(out.shape(), std::move(w));
}

inline Tensor weighted_sum(const Tensor& out, const Tensor& weights) { return sum(mul(out, weights)); }

struct FdResult {
  double max_error = 0.0;
  std::size_t points = 0;
};

/// Compares backward() against central differences at `points` random
/// (leaf, element) coordinates. `loss` must be a pure function of the leaf
/// values.
inline FdResult check_gradients(const std::function<Tensor()>& loss, std::vector<Tensor> leaves, Rng& rng,
                                std::size_t points, double h = kFdStep) {
  for (Tensor& t : leaves) t.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (Tensor& t : leaves) {
    analytic.emplace_back(t.numel(), 0.0);
    if (t.has_grad()) std::ranges::copy(t.grad(), analytic.back().begin());
  }
  FdResult res;
  for (std::size_t p = 0; p < points; ++p) {
    const std::size_t li = rng.index(leaves.size());
    Tensor leaf = leaves[li];
    const std::size_t e = rng.index(leaf.numel());
    auto data = leaf.mutable_data();
    const double saved = data[e];
    double plus, minus;
    {
      NoGradGuard guard;
      data[e] = saved + h;
      plus = loss().item();
      data[e] = saved - h;
      minus = loss().item();
    }
    data[e] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    res.max_error = std::max(res.max_error, relative_error(analytic[li][e], numeric));
    ++res.points;
  }
  return res;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("robin-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Tensor leaf_randn(Shape shape, Rng& rng, double sd = 1.0) { return Tensor::randn(std::move(shape), rng, sd, true); }

}  // namespace robin::testing
