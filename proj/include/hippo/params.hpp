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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hippo/tensor.hpp"

namespace hippo {

// Named trainable tensors in registration order. Every learnable tensor of a
// model lives here; the model structs hold handles into it.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  explicit ParamStore(std::uint64_t seed = 0) : rng_(seed) {}

  // U(-1/sqrt(fan_in), 1/sqrt(fan_in))
  Tensor uniform(const std::string& name, Shape shape, std::size_t fan_in);
  Tensor normal(const std::string& name, Shape shape, double stddev);
  Tensor constant(const std::string& name, Shape shape, double value);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  const Tensor& get(const std::string& name) const;
  std::size_t total_size() const;
  void zero_grad();

 private:
  Tensor add(const std::string& name, Tensor t);
  std::vector<Entry> entries_;
  std::mt19937_64 rng_;
};

}  // namespace hippo
