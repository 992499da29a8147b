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

// Conv-LLaMA block: a LLaMA-style attention branch (RMS pre-norm, rotary
// single-head self-attention, SwiGLU feed-forward) running in parallel with
// a convolution branch (point-wise projection, SiLU, depth-wise conv), the
// two combined by a learned softmax-weighted average.
//
// Inputs are d x L with the first `valid` columns holding real positions;
// the rest is padding that never influences valid outputs.

#pragma once

#include <string>

#include "hippo/layers.hpp"
#include "hippo/params.hpp"
#include "hippo/tensor.hpp"

namespace hippo::conv_llama {

inline constexpr std::size_t kKernelWidth = 3;
inline constexpr std::size_t kFfnMultiplier = 2;

struct ConvLlamaParams {
  std::size_t dim = 0;
  // attention branch
  Tensor attn_norm;  // d
  Tensor wq, wk, wv, wo;  // d x d
  Tensor ffn_norm;  // d
  Tensor w_gate, w_up;  // 2d x d
  Tensor w_down;  // d x 2d
  // convolution branch
  layers::Linear pointwise;  // d -> d
  layers::DepthwiseConv depthwise;  // d x k
  // two logits, softmax gives (attention, convolution) weights
  Tensor merge_logits;

  static ConvLlamaParams create(ParamStore& ps, const std::string& prefix, std::size_t d);
};

// Rotates channel pairs of a single d-vector (rank-1 or d x 1) by
// position * 10000^(-2i/d). Throws for odd d.
Tensor rope_rotate(const Tensor& x, std::size_t position);

Tensor attention_branch(const Tensor& x, const ConvLlamaParams& p, std::size_t valid);
Tensor cnn_branch(const Tensor& x, const ConvLlamaParams& p, std::size_t valid);
Tensor block(const Tensor& x, const ConvLlamaParams& p, std::size_t valid);

// L x L mask letting every query attend to keys j < valid only.
std::shared_ptr<const std::vector<unsigned char>> key_padding_mask(std::size_t length,
                                                                   std::size_t valid);

}  // namespace hippo::conv_llama
