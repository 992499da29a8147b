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

// Dense double-precision tensors with reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a graph node. Every op records its inputs
// and a local gradient rule; backward() walks the nodes reachable from a
// scalar loss in reverse topological order. Sequences are laid out
// channels x length (one column per position).

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hippo {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // lazily sized on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;  // reads this->grad, accumulates into inputs

  void accumulate(std::size_t i, double g) {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    grad[i] += g;
  }
  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;  // rank-2 only

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  double item() const;
  double at(std::size_t r, std::size_t c) const {
    return node_->value[r * cols() + c];
  }

  bool requires_grad() const { return node_->requires_grad; }
  // Zero-filled when no gradient has reached this tensor yet.
  std::vector<double> grad() const;
  void zero_grad() { node_->grad.clear(); }

  // Detached copy: same values, no history, requires_grad false.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_result(Shape, std::vector<double>,
                            std::vector<Tensor> const&,
                            std::function<void(detail::Node&)>);
};

// Builds an op output; the backward rule is dropped when no input needs it.
Tensor make_result(Shape shape, std::vector<double> value,
                   std::vector<Tensor> const& inputs,
                   std::function<void(detail::Node&)> backward);

// Accumulates d(loss)/d(leaf) into every requires_grad tensor reachable
// from `loss`. Throws std::invalid_argument for a non-scalar loss and
// std::logic_error if the recorded graph contains a cycle.
void backward(const Tensor& loss);

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
// a * s where s holds a single element.
Tensor mul_scalar(const Tensor& a, const Tensor& s);
Tensor silu(const Tensor& a);
Tensor square(const Tensor& a);

// Same values, new shape of equal element count.
Tensor reshape(const Tensor& a, Shape shape);

// ---- linear algebra, rank-2 ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// x: rows x cols, bias: rows elements, added to every column.
Tensor add_col_bias(const Tensor& x, const Tensor& bias);

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor element(const Tensor& a, std::size_t i);
// Euclidean norm; the gradient at the origin is taken as zero.
Tensor norm2(const Tensor& a);

// ---- normalization ----
// Stabilized softmax along `axis` (0 or 1) of a rank-2 tensor; rank-1
// tensors are treated as a single row.
Tensor softmax(const Tensor& x, int axis = -1);
// Row-wise softmax of a rank-2 score matrix where entry (i, j) takes part
// only if allowed[i * cols + j] is nonzero. Fully disallowed rows yield
// zeros.
Tensor masked_softmax_rows(const Tensor& scores,
                           std::shared_ptr<const std::vector<unsigned char>> allowed);
inline constexpr double kRmsEpsilon = 1e-6;
// Each slice along `axis` is divided by sqrt(mean(x^2) + eps), then scaled
// element-wise by gain. axis -1 means the last axis.
Tensor rms_norm(const Tensor& x, const Tensor& gain, int axis = -1);

// ---- sequence ops on channels x length ----
// Zero-padded, length-preserving; kernels is channels x k with k odd.
Tensor depthwise_conv1d(const Tensor& x, const Tensor& kernels);
// Rotates channel pairs (2i, 2i+1) of column j by (first_position + j) *
// 10000^(-2i/d).
Tensor rope(const Tensor& x, std::size_t first_position = 0);
// Zeroes columns at index >= valid.
Tensor mask_cols(const Tensor& x, std::size_t valid);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
// Output column j is input column index[j]. Used for embedding lookup and
// word-to-phone expansion.
Tensor gather_cols(const Tensor& x, std::vector<std::size_t> index);
// Mean of the first `valid` columns, rows x 1.
Tensor mean_cols(const Tensor& x, std::size_t valid);
// Output column s is the mean of columns j < valid with segment[j] == s.
// Every segment in [0, num_segments) must be non-empty.
Tensor segment_mean(const Tensor& x, std::span<const std::size_t> segment,
                    std::size_t valid, std::size_t num_segments);

namespace testing {
// Fault injection for negative-control tests of the gradient checker:
// while enabled, rms_norm propagates a wrong gradient into its gain.
void set_rms_gain_gradient_fault(bool enabled);
bool rms_gain_gradient_fault();
}  // namespace testing

}  // namespace hippo
