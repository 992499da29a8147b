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

#include "hippo/layers.hpp"

namespace hippo::layers {

Linear Linear::create(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out) {
  return {ps.uniform(name + ".weight", {out, in}, in), ps.constant(name + ".bias", {out}, 0.0)};
}

DepthwiseConv DepthwiseConv::create(ParamStore& ps, const std::string& name, std::size_t channels,
                                    std::size_t width) {
  return {ps.uniform(name + ".kernel", {channels, width}, width),
          ps.constant(name + ".bias", {channels}, 0.0)};
}

Regressor Regressor::create(ParamStore& ps, const std::string& name, std::size_t d) {
  return {Linear::create(ps, name + ".hidden", d, d), Linear::create(ps, name + ".out", d, 1)};
}

}  // namespace hippo::layers
