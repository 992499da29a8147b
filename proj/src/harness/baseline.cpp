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

#include <Eigen/Dense>
#include <stdexcept>

#include "hippo/harness.hpp"

namespace hippo::harness {

double Ridge::predict(std::span<const double> x) const {
  if (x.size() != weights.size()) throw std::invalid_argument("ridge: feature size mismatch");
  double s = intercept;
  for (std::size_t i = 0; i < x.size(); ++i) s += weights[i] * x[i];
  return s;
}

Ridge ridge_fit(const Matrix& x, std::span<const double> y, double penalty) {
  if (x.rows == 0 || x.rows != y.size())
    throw std::invalid_argument("ridge: need one target per nonempty row");
  if (penalty < 0.0) throw std::invalid_argument("ridge: negative penalty");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> X(x.data.data(), x.rows, x.cols);
  Eigen::Map<const Eigen::VectorXd> Y(y.data(), y.size());
  const Eigen::RowVectorXd mx = X.colwise().mean();
  const double my = Y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - mx;
  const Eigen::VectorXd Yc = (Y.array() - my).matrix();
  Eigen::VectorXd w;
  if (x.rows >= x.cols) {
    Eigen::MatrixXd gram = Xc.transpose() * Xc;
    gram.diagonal().array() += penalty;
    w = gram.ldlt().solve(Xc.transpose() * Yc);
  } else {
    // Dual form, cheaper with more features than samples.
    Eigen::MatrixXd kernel = Xc * Xc.transpose();
    kernel.diagonal().array() += penalty;
    w = Xc.transpose() * kernel.ldlt().solve(Yc);
  }
  Ridge r;
  r.weights.assign(w.data(), w.data() + w.size());
  r.intercept = my - mx.dot(w);
  return r;
}

Matrix mean_gop_features(std::span<const curriculum::Sample> samples) {
  if (samples.empty()) return {};
  const std::size_t f = samples.front().inputs.gop.cols;
  Matrix out(samples.size(), f);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& in = samples[s].inputs;
    if (in.gop.cols != f) throw std::invalid_argument("mean_gop_features: ragged feature width");
    for (std::size_t i = 0; i < in.num_phones; ++i)
      for (std::size_t c = 0; c < f; ++c) out(s, c) += in.gop(i, c) / in.num_phones;
  }
  return out;
}

}  // namespace hippo::harness
