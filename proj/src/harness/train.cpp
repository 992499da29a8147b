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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "hippo/harness.hpp"

namespace hippo::harness {

namespace {

using nlohmann::json;
using curriculum::Sample;
using curriculum::TaskView;

// Salts for the trainer's random streams.
enum Stream : std::uint64_t { kInitStream = 11, kShuffleStream = 12, kCurriculumStream = 13 };

objectives::LossTerms loss_of(const model::HippoModel& m, const std::vector<const Sample*>& batch,
                              const objectives::LossWeights& weights) {
  std::vector<model::AspectPredictions> preds;
  std::vector<objectives::AspectTargets> targets;
  preds.reserve(batch.size());
  targets.reserve(batch.size());
  for (const auto* s : batch) {
    preds.push_back(m.forward(s->inputs));
    targets.push_back(s->targets);
  }
  return objectives::total_loss(preds, targets, weights);
}

std::vector<std::vector<double>> snapshot(const ParamStore& ps) {
  std::vector<std::vector<double>> out;
  for (const auto& e : ps.entries()) out.emplace_back(e.tensor.data().begin(), e.tensor.data().end());
  return out;
}

void restore(ParamStore& ps, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < values.size(); ++i)
    std::copy(values[i].begin(), values[i].end(), ps.entries()[i].tensor.mutable_data().begin());
}

}  // namespace

bool is_heldout(std::size_t utt_id) { return utt_id % 5 == 4; }

std::vector<Sample> PreparedCorpus::split(TaskView v, bool heldout_part) const {
  std::vector<Sample> out;
  const auto& all = view(v);
  for (std::size_t i = 0; i < all.size(); ++i)
    if (heldout[i] == heldout_part) out.push_back(all[i]);
  return out;
}

PreparedCorpus prepare(const syncorpus::Corpus& corpus) {
  PreparedCorpus p;
  p.num_phones = corpus.num_phones;
  p.lexicon_size = corpus.lexicon_size;
  for (const auto& r : corpus.records) {
    const auto n = normalize_scores(r);
    p.easy.push_back(curriculum::select_view(n, TaskView::Easy));
    p.hard.push_back(curriculum::select_view(n, TaskView::Hard));
    p.heldout.push_back(is_heldout(r.utt_id));
  }
  return p;
}

Adam::Adam(ParamStore& params, double lr, double beta1, double beta2, double eps)
    : params_(&params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.tensor.size(), 0.0);
    v_.emplace_back(e.tensor.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& entries = params_->entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& t = entries[k].tensor;
    const auto& g = t.node()->grad;
    auto w = t.mutable_data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
    t.zero_grad();
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size == 0 || epochs == 0 || trials == 0)
    throw std::invalid_argument("train config: learning rate, batch size, epochs and trials must be positive");
  weights.validate();
}

objectives::LossTerms batch_loss(const model::HippoModel& m, std::span<const Sample> batch,
                                 const objectives::LossWeights& weights) {
  std::vector<const Sample*> ptrs;
  for (const auto& s : batch) ptrs.push_back(&s);
  return loss_of(m, ptrs, weights);
}

TrainResult train(const TrainConfig& config_in, const PreparedCorpus& data) {
  auto config = config_in;
  config.model.num_phones = data.num_phones;
  config.model.vocab_size = data.lexicon_size;
  config.validate();
  config.model.validate();
  auto weights = config.weights;
  if (!config.cono) weights.cono = 0.0;

  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < data.heldout.size(); ++i)
    if (!data.heldout[i]) train_idx.push_back(i);
  if (train_idx.empty()) throw std::invalid_argument("train: no training utterances");
  const auto heldout = data.split(config.selection_view, true);
  if (heldout.empty()) throw std::invalid_argument("train: no held-out utterances");

  const std::size_t n = train_idx.size(), b = config.batch_size;
  const std::size_t pool_size = config.curriculum ? n : 2 * n;
  const std::size_t steps_per_epoch = (pool_size + b - 1) / b;

  model::HippoModel model(config.model, syncorpus::derive_seed(config.seed, kInitStream));
  Adam opt(model.params(), config.learning_rate);
  std::mt19937_64 shuffle_rng(syncorpus::derive_seed(config.seed, kShuffleStream));
  curriculum::CurriculumState schedule(config.epochs * steps_per_epoch,
                                       syncorpus::derive_seed(config.seed, kCurriculumStream));

  std::ofstream log;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    log.open(config.out_dir + "/metrics.jsonl");
    if (!log) throw std::runtime_error("cannot write " + config.out_dir + "/metrics.jsonl");
  }

  TrainResult result{model::HippoModel(config.model, 0), 0, {}};
  std::vector<std::vector<double>> best;
  double best_mse = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    // (record index, view) pairs in visiting order.
    std::vector<std::pair<std::size_t, TaskView>> pool;
    for (auto i : train_idx) pool.emplace_back(i, TaskView::Easy);
    if (!config.curriculum)
      for (auto i : train_idx) pool.emplace_back(i, TaskView::Hard);
    std::shuffle(pool.begin(), pool.end(), shuffle_rng);

    EpochLog e;
    e.epoch = epoch;
    std::size_t hard_batches = 0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const std::size_t lo = s * b, hi = std::min(pool.size(), lo + b);
      std::optional<TaskView> shared;
      if (config.curriculum) {
        shared = schedule.sample_task();
        hard_batches += *shared == TaskView::Hard;
      }
      std::vector<const Sample*> batch;
      for (std::size_t k = lo; k < hi; ++k) {
        const auto [idx, v] = pool[k];
        batch.push_back(&data.view(shared.value_or(v))[idx]);
        // Without a curriculum this counts hard samples rather than batches.
        if (!config.curriculum) hard_batches += v == TaskView::Hard;
      }
      auto terms = loss_of(model, batch, weights);
      const double loss = terms.total.item();
      if (!std::isfinite(loss)) {
        std::string ids;
        for (const auto* p : batch) ids += (ids.empty() ? "" : ",") + std::to_string(p->utt_id);
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(s) + " (utterances " + ids + ")");
      }
      backward(terms.total);
      opt.step();
      e.train_loss += loss;
      e.apa += terms.apa.loss.item();
      e.diversity += terms.diversity;
      e.tightness += terms.tightness;
      if (log.is_open() && config.log_steps)
        log << json{{"type", "step"}, {"epoch", epoch}, {"step", opt.steps()}, {"loss", loss},
                    {"apa", terms.apa.loss.item()}, {"diversity", terms.diversity},
                    {"tightness", terms.tightness}}
                   .dump()
            << '\n';
    }
    const double steps = static_cast<double>(steps_per_epoch);
    e.train_loss /= steps;
    e.apa /= steps;
    e.diversity /= steps;
    e.tightness /= steps;
    e.hard_fraction = config.curriculum
                          ? static_cast<double>(hard_batches) / steps
                          : static_cast<double>(hard_batches) / static_cast<double>(pool.size());
    e.heldout = evaluate(model, heldout, std::string(curriculum::to_string(config.selection_view)));
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double phone_mse = e.heldout.aspects[0].mse;
    const bool improved = phone_mse < best_mse;
    if (improved) {
      best_mse = phone_mse;
      best = snapshot(model.params());
      result.best_epoch = epoch;
    }
    if (!config.out_dir.empty()) {
      const std::string meta = json{{"epoch", epoch}, {"seed", config.seed}}.dump();
      model::save_checkpoint(model, config.out_dir + "/checkpoint_last.json", meta);
      if (improved) model::save_checkpoint(model, config.out_dir + "/checkpoint_best.json", meta);
      log << json{{"type", "epoch"},
                  {"epoch", epoch},
                  {"train_loss", e.train_loss},
                  {"apa", e.apa},
                  {"diversity", e.diversity},
                  {"tightness", e.tightness},
                  {"hard_fraction", e.hard_fraction},
                  {"heldout", json::parse(to_json(e.heldout))},
                  {"best_epoch", result.best_epoch}}
                 .dump()
          << '\n';
      log.flush();
    }
    result.history.push_back(std::move(e));
  }
  restore(model.params(), best);
  result.model = std::move(model);
  return result;
}

}  // namespace hippo::harness
