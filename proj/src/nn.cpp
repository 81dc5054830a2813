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

#include "robin/nn.hpp"

#include <cmath>

#include "robin/error.hpp"
#include "robin/rng.hpp"

namespace robin {

Tensor param_randn(Shape shape, Rng& rng, double stddev) {
  return Tensor::randn(std::move(shape), rng, stddev, /*requires_grad=*/true);
}

Tensor param_zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }

Tensor param_full(Shape shape, double value) { return Tensor::full(std::move(shape), value, true); }

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  return {param_randn({in, out}, rng, 1.0 / std::sqrt(static_cast<double>(in))),
          param_zeros({out})};
}

Linear Linear::zeros(std::size_t in, std::size_t out) {
  return {param_zeros({in, out}), param_zeros({out})};
}

Tensor Linear::operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

LayerNormParams LayerNormParams::init(std::size_t width) {
  return {param_full({width}, 1.0), param_zeros({width})};
}

void LayerNormParams::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".gain", gain});
  out.push_back({prefix + ".bias", bias});
}

MultiHeadAttention::MultiHeadAttention(std::size_t width, std::size_t heads, Rng& rng)
    : heads_(heads), qkv_(Linear::init(width, 3 * width, rng)), out_(Linear::init(width, width, rng)) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("attention: width " + std::to_string(width) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

Tensor MultiHeadAttention::operator()(const Tensor& x, const AttentionMask& mask) const {
  const std::size_t width = x.dim(1);
  const std::size_t head_dim = width / heads_;
  const Tensor qkv = qkv_(x);
  std::vector<Tensor> outputs;
  outputs.reserve(heads_);
  for (std::size_t h = 0; h < heads_; ++h) {
    const std::size_t c = h * head_dim;
    outputs.push_back(attention(slice_cols(qkv, c, c + head_dim),
                                slice_cols(qkv, width + c, width + c + head_dim),
                                slice_cols(qkv, 2 * width + c, 2 * width + c + head_dim), mask));
  }
  return out_(heads_ == 1 ? outputs.front() : concat_cols(outputs));
}

void MultiHeadAttention::collect(const std::string& prefix, ParamList& out) const {
  qkv_.collect(prefix + ".qkv", out);
  out_.collect(prefix + ".out", out);
}

Mlp::Mlp(std::size_t width, std::size_t ratio, Rng& rng)
    : up_(Linear::init(width, ratio * width, rng)), down_(Linear::init(ratio * width, width, rng)) {}

Tensor Mlp::operator()(const Tensor& x) const { return down_(gelu(up_(x))); }

void Mlp::collect(const std::string& prefix, ParamList& out) const {
  up_.collect(prefix + ".up", out);
  down_.collect(prefix + ".down", out);
}

TransformerBlock::TransformerBlock(std::size_t width, std::size_t heads, std::size_t mlp_ratio,
                                   Rng& rng)
    : ln1_(LayerNormParams::init(width)),
      attn_(width, heads, rng),
      ln2_(LayerNormParams::init(width)),
      mlp_(width, mlp_ratio, rng) {}

Tensor TransformerBlock::operator()(const Tensor& x, const AttentionMask& mask) const {
  const Tensor h = add(x, attn_(ln1_(x), mask));
  return add(h, mlp_(ln2_(h)));
}

void TransformerBlock::collect(const std::string& prefix, ParamList& out) const {
  ln1_.collect(prefix + ".ln1", out);
  attn_.collect(prefix + ".attn", out);
  ln2_.collect(prefix + ".ln2", out);
  mlp_.collect(prefix + ".mlp", out);
}

TransformerStack::TransformerStack(std::size_t layers, std::size_t width, std::size_t heads,
                                   std::size_t mlp_ratio, Rng& rng)
    : final_ln_(LayerNormParams::init(width)) {
  blocks_.reserve(layers);
  for (std::size_t i = 0; i < layers; ++i) blocks_.emplace_back(width, heads, mlp_ratio, rng);
}

Tensor TransformerStack::operator()(const Tensor& x, const AttentionMask& mask) const {
  Tensor h = x;
  for (const auto& block : blocks_) h = block(h, mask);
  return final_ln_(h);
}

void TransformerStack::collect(const std::string& prefix, ParamList& out) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  }
  final_ln_.collect(prefix + ".final_ln", out);
}

Tensor row_segment(const Tensor& row, std::size_t begin, std::size_t end) {
  return reshape(slice_cols(row, begin, end), {end - begin});
}

}  // namespace robin
