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

#include "hippo/model.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "hippo/ctc_gop.hpp"

namespace hippo::model {

namespace {

using nlohmann::json;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

// Column indices for a lookup: valid positions use `ids`, padding maps to 0.
std::vector<std::size_t> lookup_index(const std::vector<int>& ids, std::size_t valid) {
  std::vector<std::size_t> idx(ids.size(), 0);
  for (std::size_t j = 0; j < valid; ++j) idx[j] = static_cast<std::size_t>(ids[j]);
  return idx;
}

Tensor pad_cols(const Tensor& x, std::size_t length) {
  if (x.cols() == length) return x;
  return concat_cols({x, Tensor::zeros({x.rows(), length - x.cols()})});
}

}  // namespace

void ModelConfig::validate() const {
  require(num_phones >= 2, "model: phone inventory must hold at least 2 phones");
  require(vocab_size >= 1, "model: vocabulary must be nonempty");
  require(dim >= 2 && dim % 2 == 0, "model: hidden size must be even and positive");
  require(pool_heads >= 1 && dim % pool_heads == 0,
          "model: hidden size must be divisible by the attention-pool head count");
  require(phone_blocks >= 1 && word_blocks >= 1 && utt_blocks >= 1,
          "model: every encoder needs at least one block");
  require(ssl_dim >= 1, "model: SSL dimension must be positive");
}

ModelInputs ModelInputs::unpadded(Matrix gop, std::vector<int> phone_ids,
                                  std::vector<int> word_ids,
                                  std::vector<std::size_t> phone_to_word,
                                  std::array<std::vector<double>, kSslViews> ssl) {
  ModelInputs in;
  in.num_phones = phone_ids.size();
  in.num_words = word_ids.size();
  in.gop = std::move(gop);
  in.phone_ids = std::move(phone_ids);
  in.word_ids = std::move(word_ids);
  in.phone_to_word = std::move(phone_to_word);
  in.ssl = std::move(ssl);
  return in;
}

void validate(const ModelInputs& in, const ModelConfig& config) {
  const std::size_t n = in.padded_phones(), m = in.padded_words();
  require(in.num_phones >= 1 && in.num_phones <= n, "model: need 1 <= valid phones <= length");
  require(in.num_words >= 1 && in.num_words <= m, "model: need 1 <= valid words <= length");
  require(in.num_words <= in.num_phones, "model: more words than phones");
  require(in.gop.rows == n && in.gop.cols == ctc::feature_dim(config.num_phones),
          "model: GOP matrix must be N x (P + 2)");
  require(in.phone_to_word.size() == n, "model: phone_to_word length differs from phone count");
  for (double v : in.gop.data) require(std::isfinite(v), "model: non-finite GOP feature");
  for (std::size_t j = 0; j < in.num_phones; ++j) {
    const int id = in.phone_ids[j];
    require(id >= 0 && static_cast<std::size_t>(id) < config.num_phones,
            "model: unknown phone id " + std::to_string(id));
  }
  for (std::size_t j = 0; j < in.num_words; ++j) {
    const int id = in.word_ids[j];
    require(id >= 0 && static_cast<std::size_t>(id) < config.vocab_size,
            "model: unknown word id " + std::to_string(id));
  }
  require(in.phone_to_word[0] == 0, "model: first phone must belong to word 0");
  for (std::size_t j = 1; j < in.num_phones; ++j) {
    const auto a = in.phone_to_word[j - 1], b = in.phone_to_word[j];
    require(b == a || b == a + 1, "model: phone_to_word must be non-decreasing without gaps");
  }
  require(in.phone_to_word[in.num_phones - 1] + 1 == in.num_words,
          "model: every word must own at least one phone");
  for (const auto& v : in.ssl) {
    require(v.size() == config.ssl_dim, "model: SSL vector has wrong length");
    for (double x : v) require(std::isfinite(x), "model: non-finite SSL feature");
  }
}

AttentionPoolParams AttentionPoolParams::create(ParamStore& ps, const std::string& prefix,
                                                std::size_t d, std::size_t heads) {
  AttentionPoolParams p;
  p.conv = layers::DepthwiseConv::create(ps, prefix + ".conv", d, conv_llama::kKernelWidth);
  p.wq = layers::Linear::create(ps, prefix + ".wq", d, d);
  p.wk = layers::Linear::create(ps, prefix + ".wk", d, d);
  p.wv = layers::Linear::create(ps, prefix + ".wv", d, d);
  p.wo = layers::Linear::create(ps, prefix + ".wo", d, d);
  p.heads = heads;
  return p;
}

HippoParams HippoParams::create(ParamStore& ps, const ModelConfig& c) {
  c.validate();
  const std::size_t d = c.dim;
  HippoParams p;
  p.lin_p = layers::Linear::create(ps, "lin_p", ctc::feature_dim(c.num_phones), d);
  p.lin_ssl = layers::Linear::create(ps, "lin_ssl", kSslViews * c.ssl_dim, d);
  p.phone_embedding = ps.normal("phone_embedding", {d, c.num_phones}, 0.02);
  p.word_embedding = ps.normal("word_embedding", {d, c.vocab_size}, 0.02);
  for (std::size_t b = 0; b < c.phone_blocks; ++b)
    p.phone_encoder.push_back(
        conv_llama::ConvLlamaParams::create(ps, "phone_encoder." + std::to_string(b), d));
  for (std::size_t i = 0; i < 2; ++i)
    p.word_pools[i] =
        AttentionPoolParams::create(ps, "word_pool." + std::to_string(i), d, c.pool_heads);
  p.lin_w = layers::Linear::create(ps, "lin_w", 2 * d, d);
  for (std::size_t b = 0; b < c.word_blocks; ++b)
    p.word_encoder.push_back(
        conv_llama::ConvLlamaParams::create(ps, "word_encoder." + std::to_string(b), d));
  for (std::size_t a = 0; a < kWordAspects; ++a)
    p.word_aspect_convs[a] = layers::DepthwiseConv::create(
        ps, std::string("word_aspect_conv.") + kWordAspectNames[a], d, conv_llama::kKernelWidth);
  p.word_merge_logits = ps.constant("word_merge_logits", {kWordAspects}, 0.0);
  for (std::size_t i = 0; i < 3; ++i)
    p.fusion_convs[i] = layers::DepthwiseConv::create(ps, "fusion_conv." + std::to_string(i), d,
                                                      conv_llama::kKernelWidth);
  p.lin_u = layers::Linear::create(ps, "lin_u", 3 * d, d);
  for (std::size_t b = 0; b < c.utt_blocks; ++b)
    p.utt_encoder.push_back(
        conv_llama::ConvLlamaParams::create(ps, "utt_encoder." + std::to_string(b), d));
  for (std::size_t a = 0; a < kUttAspects; ++a)
    p.utt_pools[a] = AttentionPoolParams::create(
        ps, std::string("utt_pool.") + kUttAspectNames[a], d, c.pool_heads);
  p.phone_regressor = layers::Regressor::create(ps, "regressor.phone.accuracy", d);
  for (std::size_t a = 0; a < kWordAspects; ++a)
    p.word_regressors[a] =
        layers::Regressor::create(ps, std::string("regressor.word.") + kWordAspectNames[a], d);
  for (std::size_t a = 0; a < kUttAspects; ++a)
    p.utt_regressors[a] =
        layers::Regressor::create(ps, std::string("regressor.utt.") + kUttAspectNames[a], d);
  return p;
}

Projected project_inputs(const ModelInputs& in, const HippoParams& p) {
  const std::size_t n = in.gop.rows, f = in.gop.cols;
  require(p.lin_p.weight.cols() == f, "project_inputs: GOP feature width mismatch");
  std::vector<double> gt(f * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < f; ++k) gt[k * n + i] = in.gop(i, k);
  auto xp = p.lin_p(Tensor::from({f, n}, std::move(gt)));

  std::vector<double> s;
  for (const auto& v : in.ssl) s.insert(s.end(), v.begin(), v.end());
  require(p.lin_ssl.weight.cols() == s.size(), "project_inputs: SSL width mismatch");
  const std::size_t len = s.size();
  auto xssl = p.lin_ssl(Tensor::from({len, 1}, std::move(s)));
  return {xp, xssl};
}

PhoneStageOut phone_stage(const Tensor& xp, const std::vector<int>& phone_ids,
                          std::size_t num_phones, const HippoParams& p) {
  require(phone_ids.size() == xp.cols(), "phone_stage: phone id count differs from length");
  const std::size_t vocab = p.phone_embedding.cols();
  for (std::size_t j = 0; j < num_phones; ++j)
    require(phone_ids[j] >= 0 && static_cast<std::size_t>(phone_ids[j]) < vocab,
            "phone_stage: unknown phone id " + std::to_string(phone_ids[j]));
  auto h = add(xp, gather_cols(p.phone_embedding, lookup_index(phone_ids, num_phones)));
  for (const auto& b : p.phone_encoder) h = conv_llama::block(h, b, num_phones);
  return {h, p.phone_regressor(h)};
}

Tensor attention_pool(const Tensor& x, std::span<const std::size_t> segment, std::size_t valid,
                      std::size_t num_segments, const AttentionPoolParams& p) {
  const std::size_t d = x.rows(), L = x.cols();
  require(valid >= 1 && valid <= L && segment.size() >= valid,
          "attention_pool: bad valid length");
  require(d % p.heads == 0, "attention_pool: hidden size not divisible by head count");
  auto allowed = std::make_shared<std::vector<unsigned char>>(L * L, 0);
  for (std::size_t i = 0; i < valid; ++i)
    for (std::size_t j = 0; j < valid; ++j) (*allowed)[i * L + j] = segment[i] == segment[j];

  auto c = p.conv(x, valid);
  auto q = p.wq(c), k = p.wk(c), v = p.wv(c);
  const std::size_t hd = d / p.heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(hd));
  std::vector<Tensor> heads;
  for (std::size_t h = 0; h < p.heads; ++h) {
    auto qh = p.heads == 1 ? q : slice_rows(q, h * hd, (h + 1) * hd);
    auto kh = p.heads == 1 ? k : slice_rows(k, h * hd, (h + 1) * hd);
    auto vh = p.heads == 1 ? v : slice_rows(v, h * hd, (h + 1) * hd);
    auto a = masked_softmax_rows(scale(matmul(transpose(qh), kh), inv), allowed);
    heads.push_back(matmul(vh, transpose(a)));
  }
  auto o = p.wo(p.heads == 1 ? heads[0] : concat_rows(heads));
  return segment_mean(o, segment, valid, num_segments);
}

WordStageOut word_stage(const Tensor& xp, const Tensor& hp, const ModelInputs& in,
                        const HippoParams& p) {
  const std::size_t m = in.padded_words(), mv = in.num_words, nv = in.num_phones;
  require(mv >= 1, "word_stage: no words");
  const std::size_t vocab = p.word_embedding.cols();
  for (std::size_t j = 0; j < mv; ++j)
    require(in.word_ids[j] >= 0 && static_cast<std::size_t>(in.word_ids[j]) < vocab,
            "word_stage: unknown word id " + std::to_string(in.word_ids[j]));
  auto a1 = attention_pool(xp, in.phone_to_word, nv, mv, p.word_pools[0]);
  auto a2 = attention_pool(hp, in.phone_to_word, nv, mv, p.word_pools[1]);
  auto xw = pad_cols(p.lin_w(concat_rows({a1, a2})), m);

  WordStageOut out;
  out.hw = add(xw, gather_cols(p.word_embedding, lookup_index(in.word_ids, mv)));
  for (const auto& b : p.word_encoder) out.hw = conv_llama::block(out.hw, b, mv);
  for (std::size_t a = 0; a < kWordAspects; ++a) {
    out.aspect[a] = p.word_aspect_convs[a](out.hw, mv);
    out.scores[a] = p.word_regressors[a](out.aspect[a]);
  }
  return out;
}

Tensor merge_word_aspects(const std::array<Tensor, kWordAspects>& aspect, const Tensor& logits) {
  auto w = softmax(logits);
  Tensor acc = mul_scalar(aspect[0], element(w, 0));
  for (std::size_t a = 1; a < kWordAspects; ++a)
    acc = add(acc, mul_scalar(aspect[a], element(w, a)));
  return acc;
}

std::array<Tensor, kUttAspects> utterance_stage(const Tensor& xp, const Tensor& hp,
                                                const std::array<Tensor, kWordAspects>& word_aspect,
                                                const Tensor& xssl, const ModelInputs& in,
                                                const HippoParams& p) {
  const std::size_t n = xp.cols(), nv = in.num_phones;
  auto merged = merge_word_aspects(word_aspect, p.word_merge_logits);
  std::vector<std::size_t> to_word(n, 0);
  for (std::size_t j = 0; j < nv; ++j) to_word[j] = in.phone_to_word[j];
  auto expanded = gather_cols(merged, std::move(to_word));

  auto h = p.lin_u(concat_rows({p.fusion_convs[0](xp, nv), p.fusion_convs[1](hp, nv),
                                p.fusion_convs[2](expanded, nv)}));
  for (const auto& b : p.utt_encoder) h = conv_llama::block(h, b, nv);

  const std::vector<std::size_t> whole(n, 0);
  std::array<Tensor, kUttAspects> out;
  for (std::size_t a = 0; a < kUttAspects; ++a) {
    auto pooled = attention_pool(h, whole, nv, 1, p.utt_pools[a]);
    out[a] = p.utt_regressors[a](add(pooled, xssl));
  }
  return out;
}

AspectPredictions forward(const ModelInputs& in, const HippoParams& p) {
  auto proj = project_inputs(in, p);
  auto phone = phone_stage(proj.xp, in.phone_ids, in.num_phones, p);
  auto word = word_stage(proj.xp, phone.hp, in, p);
  AspectPredictions out;
  out.phone = phone.scores;
  out.word = word.scores;
  out.utterance = utterance_stage(proj.xp, phone.hp, word.aspect, proj.xssl, in, p);
  out.z = mean_cols(phone.hp, in.num_phones);
  out.num_phones = in.num_phones;
  out.num_words = in.num_words;
  return out;
}

HippoModel::HippoModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), store_(seed), params_(HippoParams::create(store_, config)) {}

AspectPredictions HippoModel::forward(const ModelInputs& in) const {
  validate(in, config_);
  return model::forward(in, params_);
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

json config_json(const ModelConfig& c) {
  return json{{"num_phones", c.num_phones},     {"vocab_size", c.vocab_size},
              {"dim", c.dim},                   {"pool_heads", c.pool_heads},
              {"phone_blocks", c.phone_blocks}, {"word_blocks", c.word_blocks},
              {"utt_blocks", c.utt_blocks},     {"ssl_dim", c.ssl_dim}};
}

ModelConfig config_of(const json& j) {
  ModelConfig c;
  c.num_phones = j.at("num_phones").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.dim = j.value("dim", c.dim);
  c.pool_heads = j.value("pool_heads", c.pool_heads);
  c.phone_blocks = j.value("phone_blocks", c.phone_blocks);
  c.word_blocks = j.value("word_blocks", c.word_blocks);
  c.utt_blocks = j.value("utt_blocks", c.utt_blocks);
  c.ssl_dim = j.value("ssl_dim", c.ssl_dim);
  c.validate();
  return c;
}

}  // namespace

std::string config_to_json(const ModelConfig& c) { return config_json(c).dump(); }

ModelConfig config_from_json(const std::string& text) {
  try {
    return config_of(json::parse(text));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model config: ") + e.what());
  }
}

void save_checkpoint(const HippoModel& model, const std::string& path,
                     const std::string& meta_json) {
  json params = json::object();
  for (const auto& e : model.params().entries()) {
    const auto v = e.tensor.data();
    params[e.name] = {{"shape", e.tensor.shape()},
                      {"data", std::vector<double>(v.begin(), v.end())}};
  }
  json doc{{"format_version", 1},
           {"config", config_json(model.config())},
           {"params", std::move(params)},
           {"meta", json::parse(meta_json)}};
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  os << doc.dump() << '\n';
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

HippoModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw std::invalid_argument("checkpoint " + path + ": " + e.what());
  }
  if (doc.value("format_version", 0) != 1)
    throw std::invalid_argument("checkpoint " + path + ": unsupported format_version");
  HippoModel model(config_of(doc.at("config")), 0);
  const auto& params = doc.at("params");
  if (params.size() != model.params().entries().size())
    throw std::invalid_argument("checkpoint " + path + ": parameter count mismatch");
  for (auto& e : model.params().entries()) {
    if (!params.contains(e.name))
      throw std::invalid_argument("checkpoint " + path + ": missing parameter " + e.name);
    const auto& p = params.at(e.name);
    if (p.at("shape").get<Shape>() != e.tensor.shape())
      throw std::invalid_argument("checkpoint " + path + ": shape mismatch for " + e.name);
    const auto data = p.at("data").get<std::vector<double>>();
    if (data.size() != e.tensor.size())
      throw std::invalid_argument("checkpoint " + path + ": length mismatch for " + e.name);
    std::copy(data.begin(), data.end(), e.tensor.mutable_data().begin());
  }
  return model;
}

}  // namespace hippo::model
