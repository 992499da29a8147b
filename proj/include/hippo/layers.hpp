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

// Small learnable layers over channels x length sequences.

#pragma once

#include <string>

#include "hippo/params.hpp"
#include "hippo/tensor.hpp"

namespace hippo::layers {

// y = W x + b applied to every column.
struct Linear {
  Tensor weight;  // out x in
  Tensor bias;    // out

  static Linear create(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out);
  Tensor operator()(const Tensor& x) const { return add_col_bias(matmul(weight, x), bias); }
};

// Per-channel 1-D convolution with bias; columns at index >= valid are
// zeroed on the way in so padding cannot leak into valid positions.
struct DepthwiseConv {
  Tensor kernel;  // channels x width
  Tensor bias;    // channels

  static DepthwiseConv create(ParamStore& ps, const std::string& name, std::size_t channels,
                              std::size_t width);
  Tensor operator()(const Tensor& x, std::size_t valid) const {
    return add_col_bias(depthwise_conv1d(mask_cols(x, valid), kernel), bias);
  }
};

// Two linear maps with SiLU between; one scalar per column (1 x L).
struct Regressor {
  Linear hidden;
  Linear out;

  static Regressor create(ParamStore& ps, const std::string& name, std::size_t d);
  Tensor operator()(const Tensor& x) const { return out(silu(hidden(x))); }
};

}  // namespace hippo::layers
