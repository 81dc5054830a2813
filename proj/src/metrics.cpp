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

#include "robin/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "robin/error.hpp"
#include "robin/rng.hpp"

namespace robin {

void EmbeddingSet::validate() const {
  if (values.size() != n * dim) {
    throw ShapeError("embedding set '" + label + "': " + std::to_string(values.size()) + " values for [" +
                     std::to_string(n) + ", " + std::to_string(dim) + "]");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError("embedding set '" + label + "': non-finite value in row " + std::to_string(i / dim));
    }
  }
}

void ClassDistribution::validate() const {
  if (probs.empty()) throw DataError("class distribution is empty");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw DataError("class distribution has a negative or NaN entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DataError("class distribution sums to " + std::to_string(total));
}

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

void fit_gaussian(const EmbeddingSet& s, Vector& mu, Matrix& cov) {
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      s.values.data(), static_cast<Eigen::Index>(s.n), static_cast<Eigen::Index>(s.dim));
  mu = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - mu.transpose();
  cov = (centered.transpose() * centered) / static_cast<double>(s.n - 1);
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw NumericError("frechet: eigendecomposition failed");
  const Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const EmbeddingSet& a, const EmbeddingSet& b) {
  a.validate();
  b.validate();
  if (a.dim != b.dim) {
    throw ShapeError("frechet: dimension mismatch " + std::to_string(a.dim) + " vs " + std::to_string(b.dim));
  }
  if (a.n < 2 || b.n < 2) throw DataError("frechet: each set needs at least 2 vectors");
  Vector mu_a, mu_b;
  Matrix cov_a, cov_b;
  fit_gaussian(a, mu_a, cov_a);
  fit_gaussian(b, mu_b, cov_b);
  const Matrix ridge = 1e-10 * Matrix::Identity(static_cast<Eigen::Index>(a.dim), static_cast<Eigen::Index>(a.dim));
  cov_a += ridge;
  cov_b += ridge;

  // Tr((S_a S_b)^{1/2}) = Tr((S_a^{1/2} S_b S_a^{1/2})^{1/2}), the inner matrix is symmetric PSD.
  const Matrix root_a = psd_sqrt(cov_a);
  Matrix inner = root_a * cov_b * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(inner, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("frechet: eigendecomposition failed");
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double value = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

double kl_divergence(const std::vector<ClassDistribution>& p, const std::vector<ClassDistribution>& q) {
  if (p.size() != q.size()) {
    throw ShapeError("kl: unpaired lists (" + std::to_string(p.size()) + " vs " + std::to_string(q.size()) + ")");
  }
  if (p.empty()) throw DataError("kl: no pairs");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i].validate();
    q[i].validate();
    if (p[i].probs.size() != q[i].probs.size()) throw ShapeError("kl: pair " + std::to_string(i) + " class counts differ");
    double kl = 0.0;
    for (std::size_t c = 0; c < p[i].probs.size(); ++c) {
      const double pc = p[i].probs[c];
      if (pc > 0.0) kl += pc * std::log(pc / std::max(q[i].probs[c], kKlFloor));
    }
    total += kl;
  }
  return std::max(total / static_cast<double>(p.size()), 0.0);
}

InceptionScore inception_score(const std::vector<ClassDistribution>& dists, std::size_t splits) {
  if (splits < 1) throw ConfigError("inception score: splits must be >= 1");
  if (dists.size() < splits) throw DataError("inception score: fewer samples than splits");
  const std::size_t classes = dists.front().probs.size();
  for (const ClassDistribution& d : dists) {
    d.validate();
    if (d.probs.size() != classes) throw ShapeError("inception score: class counts differ");
  }
  const std::size_t n = dists.size();
  std::vector<double> scores;
  for (std::size_t j = 0; j < splits; ++j) {
    const std::size_t begin = j * n / splits;
    const std::size_t end = (j + 1) * n / splits;
    std::vector<double> marginal(classes, 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t c = 0; c < classes; ++c) marginal[c] += dists[i].probs[c];
    }
    for (double& m : marginal) m /= static_cast<double>(end - begin);
    double kl = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t c = 0; c < classes; ++c) {
        const double pc = dists[i].probs[c];
        if (pc > 0.0) kl += pc * std::log(pc / marginal[c]);
      }
    }
    scores.push_back(std::exp(kl / static_cast<double>(end - begin)));
  }
  InceptionScore out;
  for (double s : scores) out.mean += s;
  out.mean /= static_cast<double>(scores.size());
  for (double s : scores) out.std += (s - out.mean) * (s - out.mean);
  out.std = std::sqrt(out.std / static_cast<double>(scores.size()));
  return out;
}

namespace {

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

DensityCoverage density_coverage(const EmbeddingSet& real, const EmbeddingSet& fake, std::size_t k) {
  real.validate();
  fake.validate();
  if (real.dim != fake.dim) throw ShapeError("density/coverage: dimension mismatch");
  if (k == 0 || k >= real.n) {
    throw ConfigError("density/coverage: k = " + std::to_string(k) + " must be in [1, " + std::to_string(real.n) + ")");
  }
  if (fake.n == 0) throw DataError("density/coverage: fake set is empty");

  // Squared distances throughout: comparisons are monotone and exact ties stay ties.
  std::vector<double> radius(real.n);
  std::vector<double> others;
  for (std::size_t i = 0; i < real.n; ++i) {
    others.clear();
    for (std::size_t j = 0; j < real.n; ++j) {
      if (j != i) others.push_back(squared_distance(real.row(i), real.row(j), real.dim));
    }
    std::nth_element(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k - 1), others.end());
    radius[i] = others[k - 1];
  }

  std::size_t inside = 0;
  std::vector<bool> covered(real.n, false);
  for (std::size_t f = 0; f < fake.n; ++f) {
    for (std::size_t i = 0; i < real.n; ++i) {
      if (squared_distance(fake.row(f), real.row(i), real.dim) <= radius[i]) {
        ++inside;
        covered[i] = true;
      }
    }
  }
  DensityCoverage out;
  out.density = static_cast<double>(inside) / static_cast<double>(k * fake.n);
  out.coverage = static_cast<double>(std::ranges::count(covered, true)) / static_cast<double>(real.n);
  return out;
}

double cosine_alignment(const EmbeddingSet& a, const EmbeddingSet& b) {
  a.validate();
  b.validate();
  if (a.n != b.n || a.dim != b.dim) throw ShapeError("cosine alignment: sets are not paired");
  if (a.n == 0) throw DataError("cosine alignment: empty sets");
  double total = 0.0;
  for (std::size_t i = 0; i < a.n; ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < a.dim; ++c) {
      dot += a.row(i)[c] * b.row(i)[c];
      na += a.row(i)[c] * a.row(i)[c];
      nb += b.row(i)[c] * b.row(i)[c];
    }
    if (na == 0.0 || nb == 0.0) throw DataError("cosine alignment: zero-norm vector at index " + std::to_string(i));
    total += dot / (std::sqrt(na) * std::sqrt(nb));
  }
  return total / static_cast<double>(a.n);
}

std::string RandomLinearFeaturizer::id() const {
  return "random-linear-tanh/seed=" + std::to_string(seed_) + "/dim=" + std::to_string(out_dim_);
}

EmbeddingSet RandomLinearFeaturizer::extract(const EmbeddingSet& raw) const {
  raw.validate();
  Rng rng(Rng::derive(seed_, "featurizer/" + std::to_string(raw.dim) + "x" + std::to_string(out_dim_)));
  std::vector<double> w(raw.dim * out_dim_);
  const double sd = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(raw.dim, 1)));
  for (double& x : w) x = sd * rng.normal();
  EmbeddingSet out{raw.n, out_dim_, std::vector<double>(raw.n * out_dim_, 0.0), raw.label};
  for (std::size_t i = 0; i < raw.n; ++i) {
    for (std::size_t o = 0; o < out_dim_; ++o) {
      double s = 0.0;
      for (std::size_t c = 0; c < raw.dim; ++c) s += raw.row(i)[c] * w[c * out_dim_ + o];
      out.values[i * out_dim_ + o] = std::tanh(s);
    }
  }
  return out;
}

std::vector<ClassDistribution> softmax_rows(const EmbeddingSet& logits) {
  logits.validate();
  std::vector<ClassDistribution> out(logits.n);
  for (std::size_t i = 0; i < logits.n; ++i) {
    const double* r = logits.row(i);
    const double peak = *std::max_element(r, r + logits.dim);
    auto& p = out[i].probs;
    p.resize(logits.dim);
    double z = 0.0;
    for (std::size_t c = 0; c < logits.dim; ++c) z += (p[c] = std::exp(r[c] - peak));
    for (double& v : p) v /= z;
  }
  return out;
}

std::string metric_report_json(const MetricReport& r) {
  const std::pair<const char*, const std::optional<double>*> fields[] = {
      {"fad", &r.fad},       {"fd", &r.fd}, {"kl", &r.kl},           {"is_mean", &r.is_mean},
      {"is_std", &r.is_std}, {"ib", &r.ib}, {"density", &r.density}, {"coverage", &r.coverage}};
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, value] : fields) {
    if (value->has_value() && std::isfinite(**value)) {
      j[key] = **value;
    } else {
      j[key] = nullptr;
    }
  }
  return j.dump(2) + "\n";
}

}  // namespace robin
