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

#include "hippo/conv_llama.hpp"

#include <cmath>
#include <stdexcept>

namespace hippo::conv_llama {

namespace {

void check_valid(const Tensor& x, std::size_t valid, std::size_t dim) {
  if (x.rank() != 2 || x.rows() != dim)
    throw std::invalid_argument("conv_llama: expected " + std::to_string(dim) +
                                " x L input, got " + shape_str(x.shape()));
  if (valid == 0) throw std::invalid_argument("conv_llama: mask excludes every position");
  if (valid > x.cols()) throw std::invalid_argument("conv_llama: valid length exceeds sequence");
}

}  // namespace

ConvLlamaParams ConvLlamaParams::create(ParamStore& ps, const std::string& prefix,
                                        std::size_t d) {
  if (d % 2 != 0) throw std::invalid_argument("conv_llama: hidden size must be even for RoPE");
  const std::size_t h = kFfnMultiplier * d;
  ConvLlamaParams p;
  p.dim = d;
  p.attn_norm = ps.constant(prefix + ".attn_norm", {d}, 1.0);
  p.wq = ps.uniform(prefix + ".attn.wq", {d, d}, d);
  p.wk = ps.uniform(prefix + ".attn.wk", {d, d}, d);
  p.wv = ps.uniform(prefix + ".attn.wv", {d, d}, d);
  p.wo = ps.uniform(prefix + ".attn.wo", {d, d}, d);
  p.ffn_norm = ps.constant(prefix + ".ffn_norm", {d}, 1.0);
  p.w_gate = ps.uniform(prefix + ".ffn.w_gate", {h, d}, d);
  p.w_up = ps.uniform(prefix + ".ffn.w_up", {h, d}, d);
  p.w_down = ps.uniform(prefix + ".ffn.w_down", {d, h}, h);
  p.pointwise = layers::Linear::create(ps, prefix + ".cnn.pointwise", d, d);
  p.depthwise = layers::DepthwiseConv::create(ps, prefix + ".cnn.depthwise", d, kKernelWidth);
  p.merge_logits = ps.constant(prefix + ".merge_logits", {2}, 0.0);
  return p;
}

Tensor rope_rotate(const Tensor& x, std::size_t position) {
  return reshape(rope(reshape(x, {x.size(), 1}), position), x.shape());
}

std::shared_ptr<const std::vector<unsigned char>> key_padding_mask(std::size_t length,
                                                                   std::size_t valid) {
  auto m = std::make_shared<std::vector<unsigned char>>(length * length, 0);
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t j = 0; j < valid && j < length; ++j) (*m)[i * length + j] = 1;
  return m;
}

Tensor attention_branch(const Tensor& x, const ConvLlamaParams& p, std::size_t valid) {
  check_valid(x, valid, p.dim);
  const std::size_t L = x.cols();
  auto n1 = rms_norm(x, p.attn_norm, 0);
  auto q = rope(matmul(p.wq, n1));
  auto k = rope(matmul(p.wk, n1));
  auto v = matmul(p.wv, n1);
  auto scores = scale(matmul(transpose(q), k), 1.0 / std::sqrt(static_cast<double>(p.dim)));
  auto attn = masked_softmax_rows(scores, key_padding_mask(L, valid));
  auto h = add(x, matmul(p.wo, matmul(v, transpose(attn))));

  auto n2 = rms_norm(h, p.ffn_norm, 0);
  auto gated = mul(silu(matmul(p.w_gate, n2)), matmul(p.w_up, n2));
  return add(h, matmul(p.w_down, gated));
}

Tensor cnn_branch(const Tensor& x, const ConvLlamaParams& p, std::size_t valid) {
  check_valid(x, valid, p.dim);
  auto u = silu(p.pointwise(mask_cols(x, valid)));
  auto c = mask_cols(p.depthwise(u, valid), valid);
  return add(x, c);
}

Tensor block(const Tensor& x, const ConvLlamaParams& p, std::size_t valid) {
  auto w = softmax(p.merge_logits);
  return add(mul_scalar(attention_branch(x, p, valid), element(w, 0)),
             mul_scalar(cnn_branch(x, p, valid), element(w, 1)));
}

}  // namespace hippo::conv_llama
