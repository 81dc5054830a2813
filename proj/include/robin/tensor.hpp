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

// Small dense tensor with a reverse-mode gradient tape.
//
// A Tensor is a shared handle to a node holding row-major float64 data. Ops
// executed while gradients are enabled record their inputs and a backward
// closure on the output node; backward() on a scalar walks the recorded
// graph in reverse topological order. There is no general broadcasting: the
// binary elementwise ops accept a right operand whose shape is a trailing
// suffix of the left operand's shape (bias rows, per-channel scales).

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace robin {

class Rng;

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Arithmetic precision of op outputs. Storage is always float64; in F32
/// mode every op result is rounded to the nearest float32.
enum class Precision { F64, F32 };

void set_precision(Precision p);
Precision precision();

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  /// Direct write access. Only meaningful on leaves; writing into an
  /// intermediate does not invalidate recorded backward closures.
  std::span<double> mutable_data();
  std::vector<double> values() const;
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  /// Accumulates d(this)/d(leaf) into every reachable leaf that requires a
  /// gradient. Throws ContractError unless this tensor has one element.
  void backward() const;

  /// Same values, no history.
  Tensor detach() const;

  /// Identity of the underlying node (handles may alias).
  const void* id() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend struct TensorAccess;

  std::shared_ptr<detail::Node> node_;
};

/// While alive, ops do not record history on this thread.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Allow/deny matrix for attention, rows = queries, cols = keys.
class AttentionMask {
 public:
  static AttentionMask full(std::size_t n);
  static AttentionMask causal(std::size_t n);
  /// Bidirectional inside [0, prefix); positions >= prefix see the whole
  /// prefix and earlier-or-equal non-prefix positions. Prefix rows never see
  /// non-prefix positions.
  static AttentionMask prefix_causal(std::size_t n, std::size_t prefix);
  static AttentionMask from(std::size_t rows, std::size_t cols, std::vector<bool> allow);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool allowed(std::size_t r, std::size_t c) const { return allow_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<bool> allow_;
};

// ---- ops ----

/// [.., m, q] x [.., q, r]. Batch prefixes must be equal, or one operand
/// must be rank 2 (shared across the other's batch).
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

/// tanh approximation; within 1e-3 of the erf form everywhere.
Tensor gelu(const Tensor& x);
Tensor softmax(const Tensor& x, std::size_t axis);
/// Normalizes over the last axis. gain/bias may be undefined (no affine).
Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

/// Rows of `table` [V, d] gathered by id -> [ids.size(), d].
Tensor embedding(const Tensor& table, std::span<const int> ids);

Tensor reshape(const Tensor& x, Shape shape);
/// Swaps the last two axes.
Tensor transpose(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Rank-2 helpers.
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);

/// Forward value `replacement`, gradient passed to `x` unchanged.
Tensor straight_through(const Tensor& x, const Tensor& replacement);

/// Constant [count, dim] table of absolute sinusoidal encodings for
/// positions offset .. offset+count-1.
Tensor sinusoidal_positions(std::size_t count, std::size_t dim, std::size_t offset = 0);
/// Constant [1, dim] sinusoidal embedding of a continuous scalar.
Tensor sinusoidal_scalar(double value, std::size_t dim, double max_period = 10000.0);

/// softmax(q k^T / sqrt(d_h) + bias) v for rank-2 q, k, v. Denied pairs get
/// a -inf bias; a row with every key denied produces a zero output row.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionMask& mask);

}  // namespace robin
