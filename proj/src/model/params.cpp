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

#include "hippo/params.hpp"

#include <cmath>
#include <stdexcept>

namespace hippo {

Tensor ParamStore::add(const std::string& name, Tensor t) {
  for (const auto& e : entries_)
    if (e.name == name) throw std::logic_error("duplicate parameter name " + name);
  entries_.push_back({name, t});
  return t;
}

Tensor ParamStore::uniform(const std::string& name, Shape shape, std::size_t fan_in) {
  const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = u(rng_);
  return add(name, Tensor::from(std::move(shape), std::move(v), true));
}

Tensor ParamStore::normal(const std::string& name, Shape shape, double stddev) {
  std::normal_distribution<double> n(0.0, stddev);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = n(rng_);
  return add(name, Tensor::from(std::move(shape), std::move(v), true));
}

Tensor ParamStore::constant(const std::string& name, Shape shape, double value) {
  return add(name, Tensor::full(std::move(shape), value, true));
}

const Tensor& ParamStore::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw std::out_of_range("unknown parameter " + name);
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

}  // namespace hippo
