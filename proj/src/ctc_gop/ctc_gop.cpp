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

#include "hippo/ctc_gop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hippo::ctc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

void validate(const LogPosteriorGrid& grid, double tol) {
  if (grid.logp.cols < 2) throw std::invalid_argument("posterior grid needs at least one phone and a blank");
  if (grid.frames() == 0) throw std::invalid_argument("posterior grid has no frames");
  for (std::size_t t = 0; t < grid.frames(); ++t) {
    double s = 0.0;
    for (double v : grid.logp.row(t)) s += std::exp(v);
    if (std::abs(s - 1.0) > tol)
      throw std::invalid_argument("posterior row " + std::to_string(t) + " sums to " +
                                  std::to_string(s));
  }
}

double log_likelihood(const LogPosteriorGrid& grid, std::span<const int> labels) {
  const std::size_t T = grid.frames();
  const std::size_t P = grid.num_phones();
  if (T == 0) throw std::invalid_argument("log_likelihood: empty posterior grid");
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= P)
      throw std::invalid_argument("log_likelihood: unknown symbol " + std::to_string(l));

  const std::size_t U = labels.size();
  const std::size_t S = 2 * U + 1;
  const auto blank = static_cast<int>(grid.blank());
  auto sym = [&](std::size_t s) { return s % 2 == 0 ? blank : labels[(s - 1) / 2]; };

  std::vector<double> prev(S, kNegInf), cur(S, kNegInf);
  prev[0] = grid.logp(0, grid.blank());
  if (U > 0) prev[1] = grid.logp(0, static_cast<std::size_t>(labels[0]));
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = prev[s];
      if (s >= 1) a = log_add(a, prev[s - 1]);
      if (s >= 2 && sym(s) != blank && sym(s) != sym(s - 2)) a = log_add(a, prev[s - 2]);
      cur[s] = a == kNegInf ? kNegInf : a + grid.logp(t, static_cast<std::size_t>(sym(s)));
    }
    std::swap(prev, cur);
  }
  return U == 0 ? prev[0] : log_add(prev[S - 1], prev[S - 2]);
}

Matrix gop_features(const LogPosteriorGrid& grid, std::span<const int> canonical) {
  if (canonical.empty()) throw std::invalid_argument("gop_features: empty canonical sequence");
  const std::size_t P = grid.num_phones();
  const std::size_t N = canonical.size();
  const double base = log_likelihood(grid, canonical);
  if (base == kNegInf)
    throw std::invalid_argument("gop_features: canonical sequence of length " +
                                std::to_string(N) + " cannot be emitted in " +
                                std::to_string(grid.frames()) + " frames");

  auto ratio = [&](double deviated) { return std::min(base - deviated, kMaxLogRatio); };

  Matrix out(N, feature_dim(P));
  std::vector<int> work(canonical.begin(), canonical.end());
  std::vector<int> shorter;
  shorter.reserve(N);
  for (std::size_t n = 0; n < N; ++n) {
    const int orig = canonical[n];
    double gop = kMaxLogRatio;
    for (std::size_t q = 0; q < P; ++q) {
      if (static_cast<int>(q) == orig) {
        out(n, q) = 0.0;
        continue;
      }
      work[n] = static_cast<int>(q);
      const double r = ratio(log_likelihood(grid, work));
      out(n, q) = r;
      gop = std::min(gop, r);
    }
    work[n] = orig;

    shorter.assign(canonical.begin(), canonical.end());
    shorter.erase(shorter.begin() + static_cast<std::ptrdiff_t>(n));
    const double r = ratio(log_likelihood(grid, shorter));
    out(n, deletion_column(P)) = r;
    gop = std::min(gop, r);
    out(n, gop_column(P)) = gop;
  }
  return out;
}

}  // namespace hippo::ctc
