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

// Training objectives: masked multi-granularity MSE plus the contrastive
// ordinal regularizer over time-averaged phone encodings.

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "hippo/model.hpp"
#include "hippo/tensor.hpp"

namespace hippo::objectives {

inline constexpr std::size_t kGranularities = 3;  // phone, word, utterance
inline constexpr std::size_t kAspects = 1 + model::kWordAspects + model::kUttAspects;

// Aspect names in report order: phone.accuracy, word.*, utt.*.
const std::array<std::string, kAspects>& aspect_names();

struct LossWeights {
  std::array<double, kGranularities> granularity{1.0, 1.0, 1.0};
  double diversity = 1.0;
  double tightness = 1.0;
  double cono = 0.1;
  // RMS-normalize each z before the CONO terms. Without it the diversity
  // term is unbounded below under scaling of z.
  bool normalize_embeddings = false;

  // Throws std::invalid_argument for negative or non-finite weights.
  void validate() const;
};

// Targets for the valid positions of one utterance (already normalized).
struct AspectTargets {
  std::vector<double> phone;                                // num_phones
  std::array<std::vector<double>, model::kWordAspects> word;  // num_words each
  std::array<double, model::kUttAspects> utterance{};
};

struct ApaLoss {
  Tensor loss;
  std::array<double, kAspects> aspect_mse{};
  std::array<std::size_t, kAspects> aspect_count{};
  // Aspects with no valid position in the batch; they contribute 0.
  std::vector<std::string> empty_aspects;
};

// Sum over granularities of lambda_g times the mean, over the granularity's
// aspects, of each aspect's MSE pooled over all valid positions of the batch.
ApaLoss apa_loss(std::span<const model::AspectPredictions> pred,
                 std::span<const AspectTargets> target, const LossWeights& weights);

struct EmbeddingBatch {
  std::vector<Tensor> z;  // L vectors, all the same shape
  std::vector<double> y;  // L discrete labels
};

// Per-label centroids, in ascending label order.
struct Centroids {
  std::vector<double> labels;
  std::vector<Tensor> centers;
  std::vector<std::size_t> member_of;  // index into labels for each sample
};
Centroids score_centroids(const EmbeddingBatch& batch);

// -(1 / (K (K - 1))) sum over ordered centroid pairs of |y_i - y_j| times the
// centroid distance; 0 when fewer than two labels are present.
Tensor cono_diversity(const EmbeddingBatch& batch);
// Mean distance from each sample to its label centroid.
Tensor cono_tightness(const EmbeddingBatch& batch);

struct LossTerms {
  Tensor total;
  ApaLoss apa;
  double diversity = 0.0;
  double tightness = 0.0;
};

// apa_loss + lambda_cono * (lambda_d * diversity + lambda_t * tightness).
// The CONO embedding batch pairs each prediction's z (RMS-normalized when
// weights.normalize_embeddings is set) with its utterance accuracy target.
// With lambda_cono == 0 the result is exactly apa_loss.
LossTerms total_loss(std::span<const model::AspectPredictions> pred,
                     std::span<const AspectTargets> target, const LossWeights& weights);

}  // namespace hippo::objectives
