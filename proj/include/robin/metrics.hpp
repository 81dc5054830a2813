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

// Distribution metrics over embedding populations and class posteriors.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace robin {

/// [n, dim] row-major vectors.
struct EmbeddingSet {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> values;
  std::string label;

  const double* row(std::size_t i) const { return values.data() + i * dim; }
  void validate() const;
};

/// Class posterior for one sample.
struct ClassDistribution {
  std::vector<double> probs;

  void validate() const;
};

/// Frechet distance between Gaussians fitted to `a` and `b` (unbiased
/// covariances, 1e-10 ridge on each).
double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b);

inline constexpr double kKlFloor = 1e-10;

/// Mean over pairs of sum p log(p / max(q, 1e-10)). Terms with p = 0 are 0.
double kl_divergence(const std::vector<ClassDistribution>& p, const std::vector<ClassDistribution>& q);

struct InceptionScore {
  double mean = 0.0;
  double std = 0.0;
};

/// Samples are split into `splits` contiguous chunks (chunk j covers
/// [j*N/splits, (j+1)*N/splits)). Std is the population std over splits.
InceptionScore inception_score(const std::vector<ClassDistribution>& dists, std::size_t splits);

struct DensityCoverage {
  double density = 0.0;
  double coverage = 0.0;
};

/// k-NN manifold density and coverage; distances equal to a radius count as
/// inside.
DensityCoverage density_coverage(const EmbeddingSet& real, const EmbeddingSet& fake, std::size_t k = 3);

/// Mean cosine similarity of paired rows.
double cosine_alignment(const EmbeddingSet& a, const EmbeddingSet& b);

/// Maps raw vectors (e.g. flattened latents) to embeddings.
class EmbeddingExtractor {
 public:
  virtual ~EmbeddingExtractor() = default;
  virtual std::string id() const = 0;
  virtual EmbeddingSet extract(const EmbeddingSet& raw) const = 0;
};

/// Fixed random projection to `out_dim` followed by tanh. Deterministic in
/// (seed, in_dim, out_dim).
class RandomLinearFeaturizer : public EmbeddingExtractor {
 public:
  RandomLinearFeaturizer(std::uint64_t seed, std::size_t out_dim) : seed_(seed), out_dim_(out_dim) {}
  std::string id() const override;
  EmbeddingSet extract(const EmbeddingSet& raw) const override;

 private:
  std::uint64_t seed_;
  std::size_t out_dim_;
};

/// Row-wise softmax of `logits` into class distributions.
std::vector<ClassDistribution> softmax_rows(const EmbeddingSet& logits);

struct MetricReport {
  std::optional<double> fad;
  std::optional<double> fd;
  std::optional<double> kl;
  std::optional<double> is_mean;
  std::optional<double> is_std;
  std::optional<double> ib;
  std::optional<double> density;
  std::optional<double> coverage;
};

/// Flat JSON object with exactly the keys fad, fd, kl, is_mean, is_std, ib,
/// density, coverage (absent values are null).
std::string metric_report_json(const MetricReport& report);

}  // namespace robin
