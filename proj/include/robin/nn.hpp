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

// Layers shared by the planner and the refiner.

#pragma once

#include <string>
#include <vector>

#include "robin/tensor.hpp"

namespace robin {

class Rng;

struct NamedParam {
  std::string name;
  Tensor tensor;
};

/// Trainable leaves in a stable, module-defined order.
using ParamList = std::vector<NamedParam>;

/// Trainable leaf with N(0, stddev^2) entries.
Tensor param_randn(Shape shape, Rng& rng, double stddev);
Tensor param_zeros(Shape shape);
Tensor param_full(Shape shape, double value);

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  /// Weight ~ N(0, 1/in), zero bias.
  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  static Linear zeros(std::size_t in, std::size_t out);

  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;

  static LayerNormParams init(std::size_t width);
  Tensor operator()(const Tensor& x) const { return layernorm(x, gain, bias); }
  void collect(const std::string& prefix, ParamList& out) const;
};

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t width, std::size_t heads, Rng& rng);

  Tensor operator()(const Tensor& x, const AttentionMask& mask) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  std::size_t heads_ = 1;
  Linear qkv_;
  Linear out_;
};

/// width -> ratio*width -> width with GELU.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t width, std::size_t ratio, Rng& rng);

  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Linear up_;
  Linear down_;
};

/// Pre-norm encoder block: x + attn(ln(x)), then x + mlp(ln(x)).
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(std::size_t width, std::size_t heads, std::size_t mlp_ratio, Rng& rng);

  Tensor operator()(const Tensor& x, const AttentionMask& mask) const;
  void collect(const std::string& prefix, ParamList& out) const;

 private:
  LayerNormParams ln1_;
  MultiHeadAttention attn_;
  LayerNormParams ln2_;
  Mlp mlp_;
};

/// Stack of blocks followed by a final layer norm.
class TransformerStack {
 public:
  TransformerStack() = default;
  TransformerStack(std::size_t layers, std::size_t width, std::size_t heads, std::size_t mlp_ratio,
                   Rng& rng);

  Tensor operator()(const Tensor& x, const AttentionMask& mask) const;
  void collect(const std::string& prefix, ParamList& out) const;
  std::size_t layers() const { return blocks_.size(); }

 private:
  std::vector<TransformerBlock> blocks_;
  LayerNormParams final_ln_;
};

/// Reshapes columns [begin, end) of a [1, n] row into a [end - begin] vector
/// so it broadcasts over the rows of a [seq, width] tensor.
Tensor row_segment(const Tensor& row, std::size_t begin, std::size_t end);

}  // namespace robin
