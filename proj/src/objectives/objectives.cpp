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

#include "hippo/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace hippo::objectives {

namespace {

constexpr std::array<std::size_t, kGranularities> kAspectsPer{1, model::kWordAspects,
                                                              model::kUttAspects};

// Sum of squared errors between the first targets.size() entries of a
// 1 x L prediction row and the targets.
Tensor squared_error(const Tensor& pred, const std::vector<double>& targets) {
  const std::size_t n = targets.size();
  auto head = pred.cols() == n ? pred : slice_cols(pred, 0, n);
  return sum(square(sub(head, Tensor::from({1, n}, targets))));
}

}  // namespace

const std::array<std::string, kAspects>& aspect_names() {
  static const auto names = [] {
    std::array<std::string, kAspects> n;
    n[0] = "phone.accuracy";
    for (std::size_t a = 0; a < model::kWordAspects; ++a)
      n[1 + a] = std::string("word.") + model::kWordAspectNames[a];
    for (std::size_t a = 0; a < model::kUttAspects; ++a)
      n[1 + model::kWordAspects + a] = std::string("utt.") + model::kUttAspectNames[a];
    return n;
  }();
  return names;
}

void LossWeights::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  for (double g : granularity)
    if (!ok(g)) throw std::invalid_argument("loss weights: lambda_g must be nonnegative");
  if (!ok(diversity) || !ok(tightness) || !ok(cono))
    throw std::invalid_argument("loss weights: CONO weights must be nonnegative");
}

ApaLoss apa_loss(std::span<const model::AspectPredictions> pred,
                 std::span<const AspectTargets> target, const LossWeights& weights) {
  weights.validate();
  if (pred.size() != target.size() || pred.empty())
    throw std::invalid_argument("apa_loss: predictions and targets must pair up, nonempty");

  std::array<Tensor, kAspects> sse;
  ApaLoss out;
  auto accumulate = [&](std::size_t a, const Tensor& pred_row, const std::vector<double>& t) {
    if (t.empty()) return;
    auto e = squared_error(pred_row, t);
    sse[a] = sse[a].defined() ? add(sse[a], e) : e;
    out.aspect_count[a] += t.size();
  };
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& p = pred[i];
    const auto& t = target[i];
    if (t.phone.size() != p.num_phones)
      throw std::invalid_argument("apa_loss: phone target length differs from valid phones");
    accumulate(0, p.phone, t.phone);
    for (std::size_t a = 0; a < model::kWordAspects; ++a) {
      if (t.word[a].size() != p.num_words)
        throw std::invalid_argument("apa_loss: word target length differs from valid words");
      accumulate(1 + a, p.word[a], t.word[a]);
    }
    for (std::size_t a = 0; a < model::kUttAspects; ++a)
      accumulate(1 + model::kWordAspects + a, p.utterance[a], {t.utterance[a]});
  }

  Tensor loss;
  std::size_t a = 0;
  for (std::size_t g = 0; g < kGranularities; ++g) {
    Tensor gsum;
    for (std::size_t k = 0; k < kAspectsPer[g]; ++k, ++a) {
      if (out.aspect_count[a] == 0) {
        out.empty_aspects.push_back(aspect_names()[a]);
        continue;
      }
      auto m = scale(sse[a], 1.0 / static_cast<double>(out.aspect_count[a]));
      out.aspect_mse[a] = m.item();
      gsum = gsum.defined() ? add(gsum, m) : m;
    }
    if (!gsum.defined()) continue;
    auto term = scale(gsum, weights.granularity[g] / static_cast<double>(kAspectsPer[g]));
    loss = loss.defined() ? add(loss, term) : term;
  }
  out.loss = loss.defined() ? loss : Tensor::scalar(0.0);
  return out;
}

Centroids score_centroids(const EmbeddingBatch& batch) {
  if (batch.z.empty() || batch.z.size() != batch.y.size())
    throw std::invalid_argument("CONO: embedding batch needs L >= 1 pairs");
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < batch.y.size(); ++i) {
    if (!std::isfinite(batch.y[i])) throw std::invalid_argument("CONO: non-finite label");
    if (batch.z[i].shape() != batch.z[0].shape())
      throw std::invalid_argument("CONO: embeddings differ in shape");
    groups[batch.y[i]].push_back(i);
  }
  Centroids c;
  c.member_of.assign(batch.y.size(), 0);
  for (const auto& [label, members] : groups) {
    Tensor s = batch.z[members[0]];
    for (std::size_t k = 1; k < members.size(); ++k) s = add(s, batch.z[members[k]]);
    for (auto i : members) c.member_of[i] = c.labels.size();
    c.labels.push_back(label);
    c.centers.push_back(members.size() == 1 ? s : scale(s, 1.0 / static_cast<double>(members.size())));
  }
  return c;
}

Tensor cono_diversity(const EmbeddingBatch& batch) {
  auto c = score_centroids(batch);
  const std::size_t k = c.labels.size();
  if (k < 2) return Tensor::scalar(0.0);
  Tensor acc;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      auto t = scale(norm2(sub(c.centers[i], c.centers[j])), std::abs(c.labels[i] - c.labels[j]));
      acc = acc.defined() ? add(acc, t) : t;
    }
  // Unordered pairs counted once, so the ordered-pair sum is twice acc.
  return scale(acc, -2.0 / static_cast<double>(k * (k - 1)));
}

Tensor cono_tightness(const EmbeddingBatch& batch) {
  auto c = score_centroids(batch);
  Tensor acc;
  for (std::size_t i = 0; i < batch.z.size(); ++i) {
    auto t = norm2(sub(batch.z[i], c.centers[c.member_of[i]]));
    acc = acc.defined() ? add(acc, t) : t;
  }
  return scale(acc, 1.0 / static_cast<double>(batch.z.size()));
}

LossTerms total_loss(std::span<const model::AspectPredictions> pred,
                     std::span<const AspectTargets> target, const LossWeights& weights) {
  LossTerms out;
  out.apa = apa_loss(pred, target, weights);
  out.total = out.apa.loss;
  if (weights.cono == 0.0) return out;

  EmbeddingBatch batch;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& z = pred[i].z;
    batch.z.push_back(weights.normalize_embeddings
                          ? rms_norm(z, Tensor::full({z.rows()}, 1.0), 0)
                          : z);
    batch.y.push_back(target[i].utterance[0]);
  }
  auto div = cono_diversity(batch);
  auto tight = cono_tightness(batch);
  out.diversity = div.item();
  out.tightness = tight.item();
  auto reg = add(scale(div, weights.diversity), scale(tight, weights.tightness));
  out.total = add(out.total, scale(reg, weights.cono));
  return out;
}

}  // namespace hippo::objectives
