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

// Three-stage hierarchical assessment model. Phone-level GOP features are
// encoded by stacked Conv-LLaMA blocks, pooled into words, encoded again,
// and fused with SSL utterance vectors to score nine aspects: phone
// accuracy; word accuracy, stress and total; utterance accuracy, fluency,
// completeness, prosody and total.
//
// Padded inputs are supported: only the first num_phones phones and the
// first num_words words are real. Padded positions never influence the
// predictions at valid positions.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hippo/conv_llama.hpp"
#include "hippo/layers.hpp"
#include "hippo/matrix.hpp"
#include "hippo/params.hpp"
#include "hippo/tensor.hpp"

namespace hippo::model {

inline constexpr std::size_t kSslViews = 3;
inline constexpr std::size_t kSslDim = 1024;
inline constexpr std::size_t kWordAspects = 3;
inline constexpr std::size_t kUttAspects = 5;
inline constexpr std::array<const char*, kWordAspects> kWordAspectNames{"accuracy", "stress",
                                                                        "total"};
inline constexpr std::array<const char*, kUttAspects> kUttAspectNames{
    "accuracy", "fluency", "completeness", "prosody", "total"};

struct ModelConfig {
  std::size_t num_phones = 0;  // phone inventory P (GOP features are P + 2 wide)
  std::size_t vocab_size = 0;
  std::size_t dim = 24;
  std::size_t pool_heads = 3;
  std::size_t phone_blocks = 3;
  std::size_t word_blocks = 2;
  std::size_t utt_blocks = 1;
  std::size_t ssl_dim = kSslDim;

  // Throws std::invalid_argument when sizes are inconsistent.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ModelInputs {
  Matrix gop;                         // N x (P + 2), rows past num_phones are padding
  std::vector<int> phone_ids;         // N
  std::vector<int> word_ids;          // M
  std::vector<std::size_t> phone_to_word;  // N, non-decreasing on the valid prefix
  std::array<std::vector<double>, kSslViews> ssl;
  std::size_t num_phones = 0;
  std::size_t num_words = 0;

  // Unpadded inputs: every phone and word is valid.
  static ModelInputs unpadded(Matrix gop, std::vector<int> phone_ids, std::vector<int> word_ids,
                              std::vector<std::size_t> phone_to_word,
                              std::array<std::vector<double>, kSslViews> ssl);
  std::size_t padded_phones() const { return phone_ids.size(); }
  std::size_t padded_words() const { return word_ids.size(); }
};

// Validates shapes, ids and the phone-to-word invariants against config.
void validate(const ModelInputs& in, const ModelConfig& config);

struct AspectPredictions {
  Tensor phone;                             // 1 x N
  std::array<Tensor, kWordAspects> word;    // 1 x M each
  std::array<Tensor, kUttAspects> utterance;  // 1 x 1 each
  Tensor z;                                 // d x 1, time-mean of the phone encoder output
  std::size_t num_phones = 0;
  std::size_t num_words = 0;
};

// Multi-head self-attention restricted to positions of the same segment,
// preceded by a depth-wise convolution and followed by a per-segment mean.
struct AttentionPoolParams {
  layers::DepthwiseConv conv;
  layers::Linear wq, wk, wv, wo;
  std::size_t heads = 1;

  static AttentionPoolParams create(ParamStore& ps, const std::string& prefix, std::size_t d,
                                    std::size_t heads);
};

struct HippoParams {
  layers::Linear lin_p;    // (P + 2) -> d
  layers::Linear lin_ssl;  // 3 * ssl_dim -> d
  Tensor phone_embedding;  // d x P
  Tensor word_embedding;   // d x V
  std::vector<conv_llama::ConvLlamaParams> phone_encoder;
  std::array<AttentionPoolParams, 2> word_pools;  // over X^P and H^P
  layers::Linear lin_w;  // 2d -> d
  std::vector<conv_llama::ConvLlamaParams> word_encoder;
  std::array<layers::DepthwiseConv, kWordAspects> word_aspect_convs;
  Tensor word_merge_logits;  // kWordAspects
  std::array<layers::DepthwiseConv, 3> fusion_convs;
  layers::Linear lin_u;  // 3d -> d
  std::vector<conv_llama::ConvLlamaParams> utt_encoder;
  std::array<AttentionPoolParams, kUttAspects> utt_pools;
  layers::Regressor phone_regressor;
  std::array<layers::Regressor, kWordAspects> word_regressors;
  std::array<layers::Regressor, kUttAspects> utt_regressors;

  static HippoParams create(ParamStore& ps, const ModelConfig& config);
};

struct Projected {
  Tensor xp;    // d x N
  Tensor xssl;  // d x 1
};
Projected project_inputs(const ModelInputs& in, const HippoParams& p);

struct PhoneStageOut {
  Tensor hp;      // d x N
  Tensor scores;  // 1 x N
};
PhoneStageOut phone_stage(const Tensor& xp, const std::vector<int>& phone_ids,
                          std::size_t num_phones, const HippoParams& p);

// x: d x N; returns d x num_segments. segment[j] for j < valid names the
// segment of column j; every segment must own at least one valid column.
Tensor attention_pool(const Tensor& x, std::span<const std::size_t> segment, std::size_t valid,
                      std::size_t num_segments, const AttentionPoolParams& p);

struct WordStageOut {
  Tensor hw;                                 // d x M
  std::array<Tensor, kWordAspects> aspect;   // d x M each
  std::array<Tensor, kWordAspects> scores;   // 1 x M each
};
WordStageOut word_stage(const Tensor& xp, const Tensor& hp, const ModelInputs& in,
                        const HippoParams& p);

// Softmax-weighted average of the word-aspect representations.
Tensor merge_word_aspects(const std::array<Tensor, kWordAspects>& aspect, const Tensor& logits);

std::array<Tensor, kUttAspects> utterance_stage(const Tensor& xp, const Tensor& hp,
                                                const std::array<Tensor, kWordAspects>& word_aspect,
                                                const Tensor& xssl, const ModelInputs& in,
                                                const HippoParams& p);

AspectPredictions forward(const ModelInputs& in, const HippoParams& p);

class HippoModel {
 public:
  HippoModel(const ModelConfig& config, std::uint64_t seed);
  HippoModel(HippoModel&&) = default;
  HippoModel& operator=(HippoModel&&) = default;
  HippoModel(const HippoModel&) = delete;
  HippoModel& operator=(const HippoModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const HippoParams& layers() const { return params_; }

  AspectPredictions forward(const ModelInputs& in) const;

 private:
  ModelConfig config_;
  ParamStore store_;
  HippoParams params_;
};

// JSON checkpoint: {"format_version": 1, "config": {...}, "params": {name:
// {"shape": [...], "data": [...]}}, "meta": {...}}. Doubles round-trip
// exactly.
void save_checkpoint(const HippoModel& model, const std::string& path,
                     const std::string& meta_json = "{}");
HippoModel load_checkpoint(const std::string& path);

std::string config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const std::string& json);

}  // namespace hippo::model
