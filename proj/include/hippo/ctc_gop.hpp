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

// Alignment-free goodness of pronunciation from CTC posteriors.
//
// A phone is scored by how much more likely the canonical transcript is
// (summed over every CTC alignment) than transcripts in which that phone is
// substituted or deleted. No segmentation or timestamps are involved.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hippo/matrix.hpp"

namespace hippo::ctc {

// frames x (P + 1) log-probabilities; column P is the CTC blank.
struct LogPosteriorGrid {
  Matrix logp;

  std::size_t frames() const { return logp.rows; }
  std::size_t num_phones() const { return logp.cols - 1; }
  std::size_t blank() const { return logp.cols - 1; }
};

// Row sums of exp(logp) must be 1 within `tol`; throws otherwise.
void validate(const LogPosteriorGrid& grid, double tol = 1e-9);

// log sum over every blank-augmented path that collapses to `labels`.
// -inf when the sequence cannot be emitted in grid.frames() frames.
// Throws std::invalid_argument for labels outside [0, P).
double log_likelihood(const LogPosteriorGrid& grid, std::span<const int> labels);

// Column layout of a GOP feature row for inventory size P:
//   [0, P)  L(canonical) - L(canonical with this phone replaced by q)
//   P       L(canonical) - L(canonical with this phone removed)
//   P + 1   L(canonical) - max over all non-identity deviations
inline std::size_t deletion_column(std::size_t num_phones) { return num_phones; }
inline std::size_t gop_column(std::size_t num_phones) { return num_phones + 1; }
inline std::size_t feature_dim(std::size_t num_phones) { return num_phones + 2; }

// Deviations too unlikely to matter (or impossible within the frame budget)
// are capped at this log-ratio so every feature stays finite.
inline constexpr double kMaxLogRatio = 1000.0;

// N x (P + 2) matrix, one row per canonical phone.
// Throws for an empty canonical sequence or one the grid cannot emit.
Matrix gop_features(const LogPosteriorGrid& grid, std::span<const int> canonical);

}  // namespace hippo::ctc
