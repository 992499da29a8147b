// Copyright 2026 The hippo-apa Authors
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

#include "hippo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace hippo {

namespace {

thread_local bool g_rms_gain_fault = false;

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw std::invalid_argument(std::string(op) + ": expected rank-2 tensor, got " +
                                shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

bool needs_grad(const detail::Node* n) { return n->requires_grad; }

// rows/cols view of a rank-1 or rank-2 tensor.
std::pair<std::size_t, std::size_t> as_matrix(const Shape& s) {
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw std::invalid_argument("expected rank-1 or rank-2 tensor, got " + shape_str(s));
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  for (auto e : shape) require(e > 0, "tensor extents must be positive");
  auto n = std::make_shared<detail::Node>();
  n->value.assign(numel(shape), v);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  for (auto e : shape) require(e > 0, "tensor extents must be positive");
  if (numel(shape) != data.size())
    throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::invalid_argument("rows(): tensor is not rank-2");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::invalid_argument("cols(): tensor is not rank-2");
  return node_->shape[1];
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item(): tensor has more than one element");
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(node_->value.size(), 0.0);
  return node_->grad;
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> const& inputs,
                   std::function<void(detail::Node&)> backward) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (any) {
    n->requires_grad = true;
    n->inputs.reserve(inputs.size());
    for (const auto& in : inputs) n->inputs.push_back(in.node_ptr());
    n->backward = std::move(backward);
  }
  return Tensor(std::move(n));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  detail::Node* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative DFS post-order; grey nodes on the stack detect cycles.
  enum class Mark : unsigned char { Grey, Black };
  std::unordered_map<detail::Node*, Mark> mark;
  std::vector<detail::Node*> order;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  mark[root] = Mark::Grey;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (!child->requires_grad) continue;
      auto it = mark.find(child);
      if (it == mark.end()) {
        mark.emplace(child, Mark::Grey);
        stack.emplace_back(child, 0);
      } else if (it->second == Mark::Grey) {
        throw std::logic_error("backward: compute graph contains a cycle");
      }
    } else {
      mark[node] = Mark::Black;
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->accumulate(0, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
  // Interior gradients are no longer needed; leaves keep theirs.
  for (detail::Node* n : order)
    if (n->backward) n->grad.clear();
}

// ---------------------------------------------------------------------------
// elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  auto na = a.node_ptr(), nb = b.node_ptr();
  return make_result(a.shape(), std::move(out), {a, b}, [na, nb](detail::Node& self) {
    for (auto* in : {na.get(), nb.get()}) {
      if (!needs_grad(in)) continue;
      auto& g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  auto na = a.node_ptr(), nb = b.node_ptr();
  return make_result(a.shape(), std::move(out), {a, b}, [na, nb](detail::Node& self) {
    if (needs_grad(na.get())) {
      auto& g = na->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (needs_grad(nb.get())) {
      auto& g = nb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  auto na = a.node_ptr(), nb = b.node_ptr();
  return make_result(a.shape(), std::move(out), {a, b}, [na, nb](detail::Node& self) {
    if (needs_grad(na.get())) {
      auto& g = na->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb->value[i];
    }
    if (needs_grad(nb.get())) {
      auto& g = nb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * na->value[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= c;
  auto na = a.node_ptr();
  return make_result(a.shape(), std::move(out), {a}, [na, c](detail::Node& self) {
    auto& g = na->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v += c;
  auto na = a.node_ptr();
  return make_result(a.shape(), std::move(out), {a}, [na](detail::Node& self) {
    auto& g = na->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
  require(s.size() == 1, "mul_scalar: second operand must hold one element");
  const double k = s.data()[0];
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= k;
  auto na = a.node_ptr(), ns = s.node_ptr();
  return make_result(a.shape(), std::move(out), {a, s}, [na, ns](detail::Node& self) {
    const double k = ns->value[0];
    if (needs_grad(na.get())) {
      auto& g = na->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * self.grad[i];
    }
    if (needs_grad(ns.get())) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * na->value[i];
      ns->accumulate(0, acc);
    }
  });
}

Tensor silu(const Tensor& a) {
  std::vector<double> out(a.size());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / (1.0 + std::exp(-x[i]));
  auto na = a.node_ptr();
  return make_result(a.shape(), std::move(out), {a}, [na](detail::Node& self) {
    auto& g = na->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = na->value[i];
      const double s = 1.0 / (1.0 + std::exp(-x));
      g[i] += self.grad[i] * s * (1.0 + x * (1.0 - s));
    }
  });
}

Tensor square(const Tensor& a) { return mul(a, a); }

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size())
    throw std::invalid_argument("reshape: " + shape_str(a.shape()) + " to " + shape_str(shape));
  std::vector<double> out(a.data().begin(), a.data().end());
  auto na = a.node_ptr();
  return make_result(std::move(shape), std::move(out), {a}, [na](detail::Node& self) {
    auto& g = na->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// linear algebra

namespace {

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m x k] += g[m x n] * b[k x n]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
      ci[p] += acc;
    }
  }
}

// c[k x n] += a[m x k]^T * g[m x n]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * gi[j];
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw std::invalid_argument("matmul: inner dimensions differ " + shape_str(a.shape()) +
                                " * " + shape_str(b.shape()));
  std::vector<double> out(m * n, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  auto na = a.node_ptr(), nb = b.node_ptr();
  return make_result({m, n}, std::move(out), {a, b}, [na, nb, m, k, n](detail::Node& self) {
    if (needs_grad(na.get()))
      gemm_nt(self.grad.data(), nb->value.data(), na->grad_buffer().data(), m, n, k);
    if (needs_grad(nb.get()))
      gemm_tn(na->value.data(), self.grad.data(), nb->grad_buffer().data(), m, k, n);
  });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  auto na = a.node_ptr();
  return make_result({c, r}, std::move(out), {a}, [na, r, c](detail::Node& self) {
    auto& g = na->grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

Tensor add_col_bias(const Tensor& x, const Tensor& bias) {
  require_rank2(x, "add_col_bias");
  const std::size_t r = x.rows(), c = x.cols();
  if (bias.size() != r) throw std::invalid_argument("add_col_bias: bias length mismatch");
  std::vector<double> out(x.data().begin(), x.data().end());
  auto b = bias.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += b[i];
  auto nx = x.node_ptr(), nb = bias.node_ptr();
  return make_result(x.shape(), std::move(out), {x, bias}, [nx, nb, r, c](detail::Node& self) {
    if (needs_grad(nx.get())) {
      auto& g = nx->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (needs_grad(nb.get())) {
      auto& g = nb->grad_buffer();
      for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += self.grad[i * c + j];
        g[i] += acc;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// reductions

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  auto na = a.node_ptr();
  return make_result({1}, {acc}, {a}, [na](detail::Node& self) {
    auto& g = na->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor element(const Tensor& a, std::size_t i) {
  if (i >= a.size()) throw std::out_of_range("element: index out of range");
  auto na = a.node_ptr();
  return make_result({1}, {a.data()[i]}, {a},
                     [na, i](detail::Node& self) { na->accumulate(i, self.grad[0]); });
}

Tensor norm2(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  const double r = std::sqrt(acc);
  auto na = a.node_ptr();
  return make_result({1}, {r}, {a}, [na, r](detail::Node& self) {
    if (r == 0.0) return;
    auto& g = na->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * na->value[i] / r;
  });
}

// ---------------------------------------------------------------------------
// softmax / normalization

Tensor softmax(const Tensor& x, int axis) {
  auto [rows, cols] = as_matrix(x.shape());
  if (axis < 0) axis = static_cast<int>(x.rank()) - 1;
  if (x.rank() == 1) axis = 1;
  if (axis != 0 && axis != 1) throw std::invalid_argument("softmax: axis must be 0 or 1");
  // Express both axes as (outer, inner, stride) walks.
  const std::size_t outer = axis == 1 ? rows : cols;
  const std::size_t inner = axis == 1 ? cols : rows;
  const std::size_t step = axis == 1 ? 1 : cols;
  const std::size_t base_step = axis == 1 ? cols : 1;
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * base_step;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < inner; ++t) mx = std::max(mx, in[base + t * step]);
    double z = 0.0;
    for (std::size_t t = 0; t < inner; ++t) {
      const double e = std::exp(in[base + t * step] - mx);
      out[base + t * step] = e;
      z += e;
    }
    for (std::size_t t = 0; t < inner; ++t) out[base + t * step] /= z;
  }
  auto nx = x.node_ptr();
  std::vector<double> y = out;
  return make_result(x.shape(), std::move(out), {x},
                     [nx, y = std::move(y), outer, inner, step, base_step](detail::Node& self) {
                       auto& g = nx->grad_buffer();
                       for (std::size_t o = 0; o < outer; ++o) {
                         const std::size_t base = o * base_step;
                         double dot = 0.0;
                         for (std::size_t t = 0; t < inner; ++t) {
                           const std::size_t i = base + t * step;
                           dot += self.grad[i] * y[i];
                         }
                         for (std::size_t t = 0; t < inner; ++t) {
                           const std::size_t i = base + t * step;
                           g[i] += y[i] * (self.grad[i] - dot);
                         }
                       }
                     });
}

Tensor masked_softmax_rows(const Tensor& scores,
                           std::shared_ptr<const std::vector<unsigned char>> allowed) {
  require_rank2(scores, "masked_softmax_rows");
  const std::size_t rows = scores.rows(), cols = scores.cols();
  if (!allowed || allowed->size() != rows * cols)
    throw std::invalid_argument("masked_softmax_rows: mask size mismatch");
  const auto& mask = *allowed;
  std::vector<double> out(rows * cols, 0.0);
  auto in = scores.data();
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t base = i * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j)
      if (mask[base + j]) mx = std::max(mx, in[base + j]);
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (!mask[base + j]) continue;
      const double e = std::exp(in[base + j] - mx);
      out[base + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < cols; ++j) out[base + j] /= z;
  }
  auto ns = scores.node_ptr();
  std::vector<double> y = out;
  return make_result(scores.shape(), std::move(out), {scores},
                     [ns, y = std::move(y), rows, cols](detail::Node& self) {
                       auto& g = ns->grad_buffer();
                       for (std::size_t i = 0; i < rows; ++i) {
                         const std::size_t base = i * cols;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < cols; ++j)
                           dot += self.grad[base + j] * y[base + j];
                         for (std::size_t j = 0; j < cols; ++j)
                           g[base + j] += y[base + j] * (self.grad[base + j] - dot);
                       }
                     });
}

Tensor rms_norm(const Tensor& x, const Tensor& gain, int axis) {
  auto [rows, cols] = as_matrix(x.shape());
  if (axis < 0) axis = static_cast<int>(x.rank()) - 1;
  if (x.rank() == 1) axis = 1;
  if (axis != 0 && axis != 1) throw std::invalid_argument("rms_norm: axis must be 0 or 1");
  const std::size_t outer = axis == 1 ? rows : cols;
  const std::size_t inner = axis == 1 ? cols : rows;
  if (inner == 0) throw std::invalid_argument("rms_norm: zero-length axis");
  if (gain.size() != inner) throw std::invalid_argument("rms_norm: gain length mismatch");
  const std::size_t step = axis == 1 ? 1 : cols;
  const std::size_t base_step = axis == 1 ? cols : 1;

  std::vector<double> out(x.size());
  std::vector<double> inv_rms(outer);
  auto in = x.data();
  auto gv = gain.data();
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * base_step;
    double ms = 0.0;
    for (std::size_t t = 0; t < inner; ++t) {
      const double v = in[base + t * step];
      ms += v * v;
    }
    ms /= static_cast<double>(inner);
    const double r = 1.0 / std::sqrt(ms + kRmsEpsilon);
    inv_rms[o] = r;
    for (std::size_t t = 0; t < inner; ++t) {
      const std::size_t i = base + t * step;
      out[i] = in[i] * r * gv[t];
    }
  }
  auto nx = x.node_ptr(), ng = gain.node_ptr();
  const bool fault = g_rms_gain_fault;
  return make_result(
      x.shape(), std::move(out), {x, gain},
      [nx, ng, inv_rms = std::move(inv_rms), outer, inner, step, base_step,
       fault](detail::Node& self) {
        const auto& xv = nx->value;
        const auto& gv = ng->value;
        const double n = static_cast<double>(inner);
        for (std::size_t o = 0; o < outer; ++o) {
          const std::size_t base = o * base_step;
          const double r = inv_rms[o];
          if (needs_grad(ng.get())) {
            auto& gg = ng->grad_buffer();
            for (std::size_t t = 0; t < inner; ++t) {
              const std::size_t i = base + t * step;
              const double term = self.grad[i] * xv[i] * r;
              gg[t] += fault ? 1.5 * term : term;
            }
          }
          if (needs_grad(nx.get())) {
            // y_t = g_t x_t r, dr/dx_s = -r^3 x_s / n
            double dot = 0.0;
            for (std::size_t t = 0; t < inner; ++t) {
              const std::size_t i = base + t * step;
              dot += self.grad[i] * gv[t] * xv[i];
            }
            auto& gx = nx->grad_buffer();
            const double c = r * r * r * dot / n;
            for (std::size_t t = 0; t < inner; ++t) {
              const std::size_t i = base + t * step;
              gx[i] += self.grad[i] * gv[t] * r - xv[i] * c;
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// sequence ops

Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernels) {
  require_rank2(x, "depthwise_conv1d");
  require_rank2(kernels, "depthwise_conv1d");
  const std::size_t ch = x.rows(), len = x.cols(), k = kernels.cols();
  if (kernels.rows() != ch) throw std::invalid_argument("depthwise_conv1d: channel mismatch");
  if (k % 2 == 0) throw std::invalid_argument("depthwise_conv1d: kernel width must be odd");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
  const auto L = static_cast<std::ptrdiff_t>(len);
  std::vector<double> out(ch * len, 0.0);
  auto xv = x.data();
  auto kv = kernels.data();
  for (std::size_t c = 0; c < ch; ++c) {
    const double* xr = xv.data() + c * len;
    const double* kr = kv.data() + c * k;
    double* orow = out.data() + c * len;
    for (std::ptrdiff_t j = 0; j < L; ++j) {
      double acc = 0.0;
      for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(k); ++t) {
        const std::ptrdiff_t src = j + t - half;
        if (src >= 0 && src < L) acc += kr[t] * xr[src];
      }
      orow[j] = acc;
    }
  }
  auto nx = x.node_ptr(), nk = kernels.node_ptr();
  return make_result({ch, len}, std::move(out), {x, kernels},
                     [nx, nk, ch, len, k, half, L](detail::Node& self) {
                       const bool gx_on = needs_grad(nx.get());
                       const bool gk_on = needs_grad(nk.get());
                       double* gx = gx_on ? nx->grad_buffer().data() : nullptr;
                       double* gk = gk_on ? nk->grad_buffer().data() : nullptr;
                       for (std::size_t c = 0; c < ch; ++c) {
                         const double* xr = nx->value.data() + c * len;
                         const double* kr = nk->value.data() + c * k;
                         const double* gr = self.grad.data() + c * len;
                         for (std::ptrdiff_t j = 0; j < L; ++j) {
                           const double go = gr[j];
                           if (go == 0.0) continue;
                           for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(k); ++t) {
                             const std::ptrdiff_t src = j + t - half;
                             if (src < 0 || src >= L) continue;
                             if (gx_on) gx[c * len + src] += go * kr[t];
                             if (gk_on) gk[c * k + t] += go * xr[src];
                           }
                         }
                       }
                     });
}

Tensor rope(const Tensor& x, std::size_t first_position) {
  require_rank2(x, "rope");
  const std::size_t d = x.rows(), len = x.cols();
  if (d % 2 != 0) throw std::invalid_argument("rope: channel count must be even");
  std::vector<double> cosv((d / 2) * len), sinv((d / 2) * len);
  for (std::size_t i = 0; i < d / 2; ++i) {
    const double theta =
        std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d));
    for (std::size_t j = 0; j < len; ++j) {
      const double angle = static_cast<double>(first_position + j) * theta;
      cosv[i * len + j] = std::cos(angle);
      sinv[i * len + j] = std::sin(angle);
    }
  }
  std::vector<double> out(d * len);
  auto xv = x.data();
  for (std::size_t i = 0; i < d / 2; ++i) {
    for (std::size_t j = 0; j < len; ++j) {
      const double a = xv[(2 * i) * len + j], b = xv[(2 * i + 1) * len + j];
      const double c = cosv[i * len + j], s = sinv[i * len + j];
      out[(2 * i) * len + j] = a * c - b * s;
      out[(2 * i + 1) * len + j] = a * s + b * c;
    }
  }
  auto nx = x.node_ptr();
  return make_result(
      x.shape(), std::move(out), {x},
      [nx, cosv = std::move(cosv), sinv = std::move(sinv), d, len](detail::Node& self) {
        auto& g = nx->grad_buffer();
        for (std::size_t i = 0; i < d / 2; ++i) {
          for (std::size_t j = 0; j < len; ++j) {
            const double ga = self.grad[(2 * i) * len + j], gb = self.grad[(2 * i + 1) * len + j];
            const double c = cosv[i * len + j], s = sinv[i * len + j];
            g[(2 * i) * len + j] += ga * c + gb * s;
            g[(2 * i + 1) * len + j] += -ga * s + gb * c;
          }
        }
      });
}

Tensor mask_cols(const Tensor& x, std::size_t valid) {
  require_rank2(x, "mask_cols");
  const std::size_t r = x.rows(), c = x.cols();
  if (valid >= c) return x;
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = valid; j < c; ++j) out[i * c + j] = 0.0;
  auto nx = x.node_ptr();
  return make_result(x.shape(), std::move(out), {x}, [nx, r, c, valid](detail::Node& self) {
    auto& g = nx->grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < valid; ++j) g[i * c + j] += self.grad[i * c + j];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_cols");
  const std::size_t r = x.rows(), c = x.cols();
  if (begin >= end || end > c) throw std::out_of_range("slice_cols: bad range");
  const std::size_t w = end - begin;
  std::vector<double> out(r * w);
  auto xv = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = xv[i * c + begin + j];
  auto nx = x.node_ptr();
  return make_result({r, w}, std::move(out), {x}, [nx, r, c, w, begin](detail::Node& self) {
    auto& g = nx->grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * c + begin + j] += self.grad[i * w + j];
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank2(x, "slice_rows");
  const std::size_t c = x.cols();
  if (begin >= end || end > x.rows()) throw std::out_of_range("slice_rows: bad range");
  std::vector<double> out(x.data().begin() + begin * c, x.data().begin() + end * c);
  auto nx = x.node_ptr();
  return make_result({end - begin, c}, std::move(out), {x}, [nx, begin, c](detail::Node& self) {
    auto& g = nx->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * c + i] += self.grad[i];
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t c = parts.front().cols();
  std::size_t r = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_rows");
    if (p.cols() != c) throw std::invalid_argument("concat_rows: column count mismatch");
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  std::vector<std::shared_ptr<detail::Node>> nodes;
  for (const auto& p : parts) {
    out.insert(out.end(), p.data().begin(), p.data().end());
    nodes.push_back(p.node_ptr());
  }
  return make_result({r, c}, std::move(out), parts, [nodes](detail::Node& self) {
    std::size_t off = 0;
    for (const auto& n : nodes) {
      const std::size_t len = n->value.size();
      if (needs_grad(n.get())) {
        auto& g = n->grad_buffer();
        for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[off + i];
      }
      off += len;
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t r = parts.front().rows();
  std::size_t c = 0;
  for (const auto& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != r) throw std::invalid_argument("concat_cols: row count mismatch");
    c += p.cols();
  }
  std::vector<double> out(r * c);
  std::vector<std::shared_ptr<detail::Node>> nodes;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    auto pv = p.data();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * c + off + j] = pv[i * w + j];
    off += w;
    nodes.push_back(p.node_ptr());
  }
  return make_result({r, c}, std::move(out), parts, [nodes, r, c](detail::Node& self) {
    std::size_t off = 0;
    for (const auto& n : nodes) {
      const std::size_t w = n->shape[1];
      if (needs_grad(n.get())) {
        auto& g = n->grad_buffer();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * c + off + j];
      }
      off += w;
    }
  });
}

Tensor gather_cols(const Tensor& x, std::vector<std::size_t> index) {
  require_rank2(x, "gather_cols");
  const std::size_t r = x.rows(), c = x.cols(), n = index.size();
  if (n == 0) throw std::invalid_argument("gather_cols: empty index");
  for (auto j : index)
    if (j >= c) throw std::out_of_range("gather_cols: index " + std::to_string(j) +
                                        " out of range for " + std::to_string(c) + " columns");
  std::vector<double> out(r * n);
  auto xv = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * c + index[j]];
  auto nx = x.node_ptr();
  return make_result({r, n}, std::move(out), {x},
                     [nx, index = std::move(index), r, c, n](detail::Node& self) {
                       auto& g = nx->grad_buffer();
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < n; ++j)
                           g[i * c + index[j]] += self.grad[i * n + j];
                     });
}

Tensor mean_cols(const Tensor& x, std::size_t valid) {
  require_rank2(x, "mean_cols");
  const std::size_t r = x.rows(), c = x.cols();
  if (valid == 0 || valid > c) throw std::invalid_argument("mean_cols: bad valid length");
  std::vector<double> out(r, 0.0);
  auto xv = x.data();
  for (std::size_t i = 0; i < r; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < valid; ++j) acc += xv[i * c + j];
    out[i] = acc / static_cast<double>(valid);
  }
  auto nx = x.node_ptr();
  return make_result({r, 1}, std::move(out), {x}, [nx, r, c, valid](detail::Node& self) {
    auto& g = nx->grad_buffer();
    const double inv = 1.0 / static_cast<double>(valid);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < valid; ++j) g[i * c + j] += self.grad[i] * inv;
  });
}

Tensor segment_mean(const Tensor& x, std::span<const std::size_t> segment, std::size_t valid,
                    std::size_t num_segments) {
  require_rank2(x, "segment_mean");
  const std::size_t r = x.rows(), c = x.cols();
  if (valid > c || segment.size() < valid)
    throw std::invalid_argument("segment_mean: bad valid length");
  if (num_segments == 0) throw std::invalid_argument("segment_mean: no segments");
  std::vector<std::size_t> seg(segment.begin(), segment.begin() + valid);
  std::vector<double> count(num_segments, 0.0);
  for (auto s : seg) {
    if (s >= num_segments) throw std::out_of_range("segment_mean: segment id out of range");
    count[s] += 1.0;
  }
  for (std::size_t s = 0; s < num_segments; ++s)
    if (count[s] == 0.0)
      throw std::invalid_argument("segment_mean: empty segment " + std::to_string(s));
  std::vector<double> out(r * num_segments, 0.0);
  auto xv = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < valid; ++j) out[i * num_segments + seg[j]] += xv[i * c + j];
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t s = 0; s < num_segments; ++s) out[i * num_segments + s] /= count[s];
  auto nx = x.node_ptr();
  return make_result({r, num_segments}, std::move(out), {x},
                     [nx, seg = std::move(seg), count = std::move(count), r, c,
                      num_segments](detail::Node& self) {
                       auto& g = nx->grad_buffer();
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < seg.size(); ++j)
                           g[i * c + j] += self.grad[i * num_segments + seg[j]] / count[seg[j]];
                     });
}

namespace testing {
void set_rms_gain_gradient_fault(bool enabled) { g_rms_gain_fault = enabled; }
bool rms_gain_gradient_fault() { return g_rms_gain_fault; }
}  // namespace testing

}  // namespace hippo
