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

#include "robin/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "robin/error.hpp"
#include "robin/rng.hpp"

namespace robin {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

struct TensorAccess {
  static const NodePtr& node(const Tensor& t) { return t.node_; }
  static Tensor wrap(NodePtr n) { return Tensor(std::move(n)); }
};

namespace {

thread_local bool g_grad_enabled = true;
Precision g_precision = Precision::F64;

const NodePtr& node_of(const Tensor& t) {
  if (!t.defined()) throw ContractError("tensor: use of undefined tensor");
  return TensorAccess::node(t);
}

void round_to_precision(std::vector<double>& v) {
  if (g_precision != Precision::F32) return;
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

NodePtr make_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not hold " +
                     std::to_string(data.size()) + " values");
  }
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeError("tensor: zero extent in shape " + shape_str(shape));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return n;
}

// Builds an op result. `backward` receives the output node and accumulates
// into parents that require gradients.
Tensor make_op(Shape shape, std::vector<double> data, std::vector<NodePtr> parents,
               std::function<void(Node&)> backward) {
  round_to_precision(data);
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->leaf = false;
  if (g_grad_enabled) {
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const NodePtr& p) { return p->requires_grad; });
    if (any) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backward = std::move(backward);
    }
  }
  return TensorAccess::wrap(std::move(n));
}

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape()));
  }
}

enum class Binary { Add, Sub, Mul };

Tensor binary(const Tensor& a, const Tensor& b, Binary kind, const char* name) {
  const NodePtr& na = node_of(a);
  const NodePtr& nb = node_of(b);
  if (!is_suffix(nb->shape, na->shape)) {
    throw ShapeError(std::string(name) + ": shape " + shape_str(nb->shape) +
                     " is not a trailing suffix of " + shape_str(na->shape));
  }
  const std::size_t total = na->data.size();
  const std::size_t inner = nb->data.size();
  std::vector<double> out(total);
  for (std::size_t i = 0; i < total; ++i) {
    const double x = na->data[i];
    const double y = nb->data[i % inner];
    switch (kind) {
      case Binary::Add: out[i] = x + y; break;
      case Binary::Sub: out[i] = x - y; break;
      case Binary::Mul: out[i] = x * y; break;
    }
  }
  return make_op(na->shape, std::move(out), {na, nb}, [kind, total, inner](Node& self) {
    const NodePtr& pa = self.parents[0];
    const NodePtr& pb = self.parents[1];
    if (pa->requires_grad) {
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < total; ++i) {
        ga[i] += kind == Binary::Mul ? self.grad[i] * pb->data[i % inner] : self.grad[i];
      }
    }
    if (pb->requires_grad) {
      auto& gb = pb->grad_buffer();
      for (std::size_t i = 0; i < total; ++i) {
        double g = self.grad[i];
        if (kind == Binary::Sub) g = -g;
        if (kind == Binary::Mul) g *= pa->data[i];
        gb[i % inner] += g;
      }
    }
  });
}

// c[m,r] (+)= a[m,q] * b[q,r], all row-major with explicit strides.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t q,
             std::size_t r) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * r;
    for (std::size_t kk = 0; kk < q; ++kk) {
      const double aik = a[i * q + kk];
      if (aik == 0.0) continue;
      const double* brow = b + kk * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
}

// c[m,q] += g[m,r] * b[q,r]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t q,
             std::size_t r) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < q; ++kk) {
      double acc = 0.0;
      const double* grow = g + i * r;
      const double* brow = b + kk * r;
      for (std::size_t j = 0; j < r; ++j) acc += grow[j] * brow[j];
      c[i * q + kk] += acc;
    }
  }
}

// c[q,r] += a[m,q]^T * g[m,r]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t q,
             std::size_t r) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t kk = 0; kk < q; ++kk) {
      const double aik = a[i * q + kk];
      if (aik == 0.0) continue;
      double* crow = c + kk * r;
      const double* grow = g + i * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += aik * grow[j];
    }
  }
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

void set_precision(Precision p) { g_precision = p; }
Precision precision() { return g_precision; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

// ---- Tensor ----

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = stddev * rng.normal();
  return from(std::move(shape), std::move(v), requires_grad);
}

const Shape& Tensor::shape() const { return node_of(*this)->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("tensor: axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return node_of(*this)->data.size(); }
std::span<const double> Tensor::data() const { return node_of(*this)->data; }
std::span<double> Tensor::mutable_data() { return node_of(*this)->data; }
std::vector<double> Tensor::values() const { return node_of(*this)->data; }

double Tensor::item() const {
  const NodePtr& n = node_of(*this);
  if (n->data.size() != 1) {
    throw ContractError("tensor: item() on tensor of shape " + shape_str(n->shape));
  }
  return n->data[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  require_rank2(*this, "at");
  const NodePtr& n = node_of(*this);
  if (row >= n->shape[0] || col >= n->shape[1]) throw ShapeError("tensor: index out of range");
  return n->data[row * n->shape[1] + col];
}

bool Tensor::requires_grad() const { return node_of(*this)->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  const NodePtr& n = node_of(*this);
  if (!n->leaf) throw ContractError("tensor: requires_grad can only be set on leaves");
  n->requires_grad = on;
}

bool Tensor::has_grad() const { return !node_of(*this)->grad.empty(); }

std::span<const double> Tensor::grad() const { return node_of(*this)->grad; }

void Tensor::zero_grad() { node_of(*this)->grad.clear(); }

void Tensor::backward() const {
  const NodePtr& root = node_of(*this);
  if (root->data.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_str(root->shape));
  }
  if (!root->requires_grad) return;

  // Post-order DFS; reversed it is a valid reverse-topological schedule.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (!n->leaf) n->grad.assign(n->data.size(), 0.0);
  }
  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->leaf && n->backward) n->backward(*n);
  }
}

Tensor Tensor::detach() const {
  const NodePtr& n = node_of(*this);
  return Tensor(make_leaf(n->shape, n->data, false));
}

// ---- AttentionMask ----

AttentionMask AttentionMask::full(std::size_t n) {
  return from(n, n, std::vector<bool>(n * n, true));
}

AttentionMask AttentionMask::causal(std::size_t n) { return prefix_causal(n, 0); }

AttentionMask AttentionMask::prefix_causal(std::size_t n, std::size_t prefix) {
  std::vector<bool> allow(n * n, false);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (r < prefix) {
        allow[r * n + c] = c < prefix;
      } else {
        allow[r * n + c] = c < prefix || c <= r;
      }
    }
  }
  return from(n, n, std::move(allow));
}

AttentionMask AttentionMask::from(std::size_t rows, std::size_t cols, std::vector<bool> allow) {
  if (allow.size() != rows * cols) throw ShapeError("mask: size does not match rows*cols");
  AttentionMask m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.allow_ = std::move(allow);
  return m;
}

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  const NodePtr& na = node_of(a);
  const NodePtr& nb = node_of(b);
  const Shape& sa = na->shape;
  const Shape& sb = nb->shape;
  auto mismatch = [&] {
    return ShapeError("matmul: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb));
  };
  if (sa.size() < 2 || sb.size() < 2) throw mismatch();
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t q = sa[sa.size() - 1];
  const std::size_t r = sb[sb.size() - 1];
  if (sb[sb.size() - 2] != q) throw mismatch();
  const Shape batch_a(sa.begin(), sa.end() - 2);
  const Shape batch_b(sb.begin(), sb.end() - 2);
  Shape batch;
  if (batch_a == batch_b || batch_b.empty()) {
    batch = batch_a;
  } else if (batch_a.empty()) {
    batch = batch_b;
  } else {
    throw mismatch();
  }
  const std::size_t nbatch = shape_numel(batch);
  const std::size_t stride_a = batch_a.empty() ? 0 : m * q;
  const std::size_t stride_b = batch_b.empty() ? 0 : q * r;

  std::vector<double> out(nbatch * m * r, 0.0);
  for (std::size_t bi = 0; bi < nbatch; ++bi) {
    gemm_nn(na->data.data() + bi * stride_a, nb->data.data() + bi * stride_b,
            out.data() + bi * m * r, m, q, r);
  }
  Shape shape = batch;
  shape.push_back(m);
  shape.push_back(r);
  return make_op(std::move(shape), std::move(out), {na, nb},
                 [=](Node& self) {
                   const NodePtr& pa = self.parents[0];
                   const NodePtr& pb = self.parents[1];
                   for (std::size_t bi = 0; bi < nbatch; ++bi) {
                     const double* g = self.grad.data() + bi * m * r;
                     if (pa->requires_grad) {
                       gemm_nt(g, pb->data.data() + bi * stride_b,
                               pa->grad_buffer().data() + bi * stride_a, m, q, r);
                     }
                     if (pb->requires_grad) {
                       gemm_tn(pa->data.data() + bi * stride_a, g,
                               pb->grad_buffer().data() + bi * stride_b, m, q, r);
                     }
                   }
                 });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::Mul, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  const NodePtr& na = node_of(a);
  std::vector<double> out(na->data);
  for (double& x : out) x *= factor;
  return make_op(na->shape, std::move(out), {na}, [factor](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double value) {
  const NodePtr& na = node_of(a);
  std::vector<double> out(na->data);
  for (double& x : out) x += value;
  return make_op(na->shape, std::move(out), {na}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Tensor gelu(const Tensor& x) {
  const NodePtr& nx = node_of(x);
  std::vector<double> out(nx->data.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = nx->data[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  }
  return make_op(nx->shape, std::move(out), {nx}, [](Node& self) {
    const NodePtr& p = self.parents[0];
    auto& g = p->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = p->data[i];
      const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const double d = 0.5 * (1.0 + th) +
                       0.5 * v * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      g[i] += d * self.grad[i];
    }
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const NodePtr& nx = node_of(x);
  const Shape& s = nx->shape;
  if (axis >= s.size()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(s));
  }
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];

  std::vector<double> out(nx->data.size(), 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, nx->data[base + j * inner]);
      if (mx == -std::numeric_limits<double>::infinity()) continue;  // fully masked: zeros
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(nx->data[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= total;
    }
  }
  return make_op(s, std::move(out), {nx}, [outer, inner, n](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          dot += self.data[base + j * inner] * self.grad[base + j * inner];
        }
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = base + j * inner;
          g[idx] += self.data[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const NodePtr& nx = node_of(x);
  if (!(eps > 0.0)) throw ContractError("layernorm: eps must be positive");
  const std::size_t width = nx->shape.back();
  const std::size_t rows = nx->data.size() / width;
  NodePtr ng = gain.defined() ? node_of(gain) : nullptr;
  NodePtr nb = bias.defined() ? node_of(bias) : nullptr;
  for (const NodePtr& p : {ng, nb}) {
    if (p && p->data.size() != width) {
      throw ShapeError("layernorm: affine shape " + shape_str(p->shape) +
                       " does not match last axis of " + shape_str(nx->shape));
    }
  }

  std::vector<double> out(nx->data.size());
  std::vector<double> xhat(nx->data.size());
  std::vector<double> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = nx->data.data() + r * width;
    double mu = 0.0;
    for (std::size_t j = 0; j < width; ++j) mu += row[j];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(width);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t idx = r * width + j;
      xhat[idx] = (row[j] - mu) * rstd[r];
      double y = xhat[idx];
      if (ng) y *= ng->data[j];
      if (nb) y += nb->data[j];
      out[idx] = y;
    }
  }

  std::vector<NodePtr> parents{nx};
  if (ng) parents.push_back(ng);
  if (nb) parents.push_back(nb);
  const bool has_gain = ng != nullptr;
  const bool has_bias = nb != nullptr;
  return make_op(nx->shape, std::move(out), std::move(parents),
                 [=, xhat = std::move(xhat), rstd = std::move(rstd)](Node& self) {
                   const NodePtr& px = self.parents[0];
                   const Node* pg = has_gain ? self.parents[1].get() : nullptr;
                   Node* pb = has_bias ? self.parents[has_gain ? 2 : 1].get() : nullptr;
                   std::vector<double> dxhat(width);
                   for (std::size_t r = 0; r < rows; ++r) {
                     double m1 = 0.0;
                     double m2 = 0.0;
                     for (std::size_t j = 0; j < width; ++j) {
                       const std::size_t idx = r * width + j;
                       dxhat[j] = self.grad[idx] * (pg ? pg->data[j] : 1.0);
                       m1 += dxhat[j];
                       m2 += dxhat[j] * xhat[idx];
                     }
                     m1 /= static_cast<double>(width);
                     m2 /= static_cast<double>(width);
                     if (px->requires_grad) {
                       auto& gx = px->grad_buffer();
                       for (std::size_t j = 0; j < width; ++j) {
                         const std::size_t idx = r * width + j;
                         gx[idx] += rstd[r] * (dxhat[j] - m1 - xhat[idx] * m2);
                       }
                     }
                   }
                   if (pg && pg->requires_grad) {
                     auto& gg = self.parents[1]->grad_buffer();
                     for (std::size_t i = 0; i < self.grad.size(); ++i) {
                       gg[i % width] += self.grad[i] * xhat[i];
                     }
                   }
                   if (pb && pb->requires_grad) {
                     auto& gb = pb->grad_buffer();
                     for (std::size_t i = 0; i < self.grad.size(); ++i) {
                       gb[i % width] += self.grad[i];
                     }
                   }
                 });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  require_rank2(table, "embedding");
  const NodePtr& nt = node_of(table);
  const std::size_t vocab = nt->shape[0];
  const std::size_t width = nt->shape[1];
  if (ids.empty()) throw ShapeError("embedding: empty id list");
  std::vector<std::size_t> rows(ids.size());
  std::vector<double> out(ids.size() * width);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw ShapeError("embedding: id " + std::to_string(ids[i]) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    rows[i] = static_cast<std::size_t>(ids[i]);
    std::copy_n(nt->data.begin() + static_cast<std::ptrdiff_t>(rows[i] * width), width,
                out.begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  return make_op({ids.size(), width}, std::move(out), {nt},
                 [rows = std::move(rows), width](Node& self) {
                   auto& g = self.parents[0]->grad_buffer();
                   for (std::size_t i = 0; i < rows.size(); ++i) {
                     for (std::size_t j = 0; j < width; ++j) {
                       g[rows[i] * width + j] += self.grad[i * width + j];
                     }
                   }
                 });
}

Tensor reshape(const Tensor& x, Shape shape) {
  const NodePtr& nx = node_of(x);
  if (shape_numel(shape) != nx->data.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(nx->shape) + " as " + shape_str(shape));
  }
  return make_op(std::move(shape), nx->data, {nx}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor transpose(const Tensor& x) {
  const NodePtr& nx = node_of(x);
  const Shape& s = nx->shape;
  if (s.size() < 2) throw ShapeError("transpose: rank < 2 for " + shape_str(s));
  const std::size_t m = s[s.size() - 2];
  const std::size_t n = s[s.size() - 1];
  const std::size_t batch = nx->data.size() / (m * n);
  std::vector<double> out(nx->data.size());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) out[b * m * n + j * m + i] = nx->data[b * m * n + i * n + j];
    }
  }
  Shape ts = s;
  std::swap(ts[ts.size() - 1], ts[ts.size() - 2]);
  return make_op(std::move(ts), std::move(out), {nx}, [=](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[b * m * n + i * n + j] += self.grad[b * m * n + j * m + i];
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  const NodePtr& nx = node_of(x);
  double total = 0.0;
  for (double v : nx->data) total += v;
  return make_op({1}, {total}, {nx}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  std::vector<NodePtr> parents;
  std::size_t width = 0;
  std::size_t rows = 0;
  for (const Tensor& t : parts) {
    require_rank2(t, "concat_rows");
    if (parents.empty()) width = t.dim(1);
    if (t.dim(1) != width) {
      throw ShapeError("concat_rows: width " + std::to_string(t.dim(1)) + " differs from " +
                       std::to_string(width));
    }
    rows += t.dim(0);
    parents.push_back(node_of(t));
  }
  std::vector<double> out;
  out.reserve(rows * width);
  for (const NodePtr& p : parents) out.insert(out.end(), p->data.begin(), p->data.end());
  return make_op({rows, width}, std::move(out), std::move(parents), [](Node& self) {
    std::size_t offset = 0;
    for (const NodePtr& p : self.parents) {
      if (p->requires_grad) {
        auto& g = p->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offset + i];
      }
      offset += p->data.size();
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  std::vector<NodePtr> parents;
  std::vector<std::size_t> widths;
  std::size_t rows = 0;
  std::size_t width = 0;
  for (const Tensor& t : parts) {
    require_rank2(t, "concat_cols");
    if (parents.empty()) rows = t.dim(0);
    if (t.dim(0) != rows) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(t.dim(1));
    width += t.dim(1);
    parents.push_back(node_of(t));
  }
  std::vector<double> out(rows * width);
  std::size_t col = 0;
  for (std::size_t p = 0; p < parents.size(); ++p) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < widths[p]; ++j) {
        out[r * width + col + j] = parents[p]->data[r * widths[p] + j];
      }
    }
    col += widths[p];
  }
  return make_op({rows, width}, std::move(out), std::move(parents),
                 [widths = std::move(widths), rows, width](Node& self) {
                   std::size_t c = 0;
                   for (std::size_t p = 0; p < self.parents.size(); ++p) {
                     const NodePtr& parent = self.parents[p];
                     if (parent->requires_grad) {
                       auto& g = parent->grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t j = 0; j < widths[p]; ++j) {
                           g[r * widths[p] + j] += self.grad[r * width + c + j];
                         }
                       }
                     }
                     c += widths[p];
                   }
                 });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_rows");
  const NodePtr& nx = node_of(x);
  const std::size_t width = nx->shape[1];
  if (begin >= end || end > nx->shape[0]) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for " + shape_str(nx->shape));
  }
  std::vector<double> out(nx->data.begin() + static_cast<std::ptrdiff_t>(begin * width),
                          nx->data.begin() + static_cast<std::ptrdiff_t>(end * width));
  return make_op({end - begin, width}, std::move(out), {nx}, [begin, width](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * width + i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_cols");
  const NodePtr& nx = node_of(x);
  const std::size_t rows = nx->shape[0];
  const std::size_t width = nx->shape[1];
  if (begin >= end || end > width) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for " + shape_str(nx->shape));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < w; ++j) out[r * w + j] = nx->data[r * width + begin + j];
  }
  return make_op({rows, w}, std::move(out), {nx}, [=](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < w; ++j) g[r * width + begin + j] += self.grad[r * w + j];
    }
  });
}

Tensor straight_through(const Tensor& x, const Tensor& replacement) {
  const NodePtr& nx = node_of(x);
  const NodePtr& nr = node_of(replacement);
  if (nx->shape != nr->shape) {
    throw ShapeError("straight_through: shapes " + shape_str(nx->shape) + " and " +
                     shape_str(nr->shape) + " differ");
  }
  return make_op(nx->shape, nr->data, {nx}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor sinusoidal_positions(std::size_t count, std::size_t dim, std::size_t offset) {
  std::vector<double> out(count * dim);
  for (std::size_t p = 0; p < count; ++p) {
    const double pos = static_cast<double>(p + offset);
    for (std::size_t j = 0; j < dim; ++j) {
      const double pair = static_cast<double>(j / 2 * 2);
      const double angle = pos / std::pow(10000.0, pair / static_cast<double>(dim));
      out[p * dim + j] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor::from({count, dim}, std::move(out));
}

Tensor sinusoidal_scalar(double value, std::size_t dim, double max_period) {
  const std::size_t half = dim / 2;
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq =
        std::exp(-std::log(max_period) * static_cast<double>(i) / static_cast<double>(half));
    out[i] = std::cos(value * freq);
    out[half + i] = std::sin(value * freq);
  }
  return Tensor::from({1, dim}, std::move(out));
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionMask& mask) {
  require_rank2(q, "attention");
  require_rank2(k, "attention");
  require_rank2(v, "attention");
  if (q.dim(1) != k.dim(1) || k.dim(0) != v.dim(0)) {
    throw ShapeError("attention: q " + shape_str(q.shape()) + ", k " + shape_str(k.shape()) +
                     ", v " + shape_str(v.shape()) + " are inconsistent");
  }
  if (mask.rows() != q.dim(0) || mask.cols() != k.dim(0)) {
    throw ShapeError("attention: mask " + std::to_string(mask.rows()) + "x" +
                     std::to_string(mask.cols()) + " does not match scores");
  }
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(q.dim(1))));
  bool any_denied = false;
  std::vector<double> bias(mask.rows() * mask.cols(), 0.0);
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    for (std::size_t c = 0; c < mask.cols(); ++c) {
      if (!mask.allowed(r, c)) {
        bias[r * mask.cols() + c] = -std::numeric_limits<double>::infinity();
        any_denied = true;
      }
    }
  }
  if (any_denied) scores = add(scores, Tensor::from({mask.rows(), mask.cols()}, std::move(bias)));
  return matmul(softmax(scores, 1), v);
}

}  // namespace robin
