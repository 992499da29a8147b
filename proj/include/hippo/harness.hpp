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

// Training and evaluation machinery: score normalization, PCC/MSE, Adam,
// the curriculum-driven training loop, metric reports, gradient checking
// and experiment configuration.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hippo/curriculum.hpp"
#include "hippo/model.hpp"
#include "hippo/objectives.hpp"
#include "hippo/syncorpus.hpp"

namespace hippo::harness {

// Raised when training diverges; the message names the offending batch.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- metrics ----

// Sample Pearson correlation; nullopt when either series has zero variance.
// Throws std::invalid_argument for unequal lengths or fewer than 2 points.
std::optional<double> pcc(std::span<const double> x, std::span<const double> y);
// Throws std::invalid_argument for unequal or zero lengths.
double mse(std::span<const double> x, std::span<const double> y);

// ---- normalization ----

// Word and utterance scores live on 0..10, phone scores on 0..2; training
// targets share the phone scale.
inline constexpr double kScoreScale = 5.0;
// Divides word and utterance scores of both views by kScoreScale. Throws
// std::invalid_argument for scores outside their raw ranges.
syncorpus::UtteranceRecord normalize_scores(const syncorpus::UtteranceRecord& record);
// Inverse for reporting; phone scores are unchanged.
double denormalize(double value, bool phone_level);

// ---- prepared data ----

// Every fifth utterance (utt_id % 5 == 4) is held out for epoch selection.
bool is_heldout(std::size_t utt_id);

struct PreparedCorpus {
  std::size_t num_phones = 0;
  std::size_t lexicon_size = 0;
  std::vector<curriculum::Sample> easy;  // normalized, one per record
  std::vector<curriculum::Sample> hard;
  std::vector<bool> heldout;

  const std::vector<curriculum::Sample>& view(curriculum::TaskView v) const {
    return v == curriculum::TaskView::Easy ? easy : hard;
  }
  std::vector<curriculum::Sample> split(curriculum::TaskView v, bool heldout_part) const;
};

// Normalizes every record and computes GOP features for both views.
PreparedCorpus prepare(const syncorpus::Corpus& corpus);

// ---- evaluation ----

struct PlainPredictions {
  std::vector<double> phone;
  std::array<std::vector<double>, model::kWordAspects> word;
  std::array<double, model::kUttAspects> utterance{};
  std::vector<double> z;
};
PlainPredictions predict(const model::HippoModel& m, const model::ModelInputs& in);

struct AspectMetric {
  std::string name;
  std::optional<double> pcc;
  double mse = 0.0;
  std::size_t count = 0;
};

struct MetricReport {
  std::string view;
  std::size_t utterances = 0;
  std::array<AspectMetric, objectives::kAspects> aspects;

  const AspectMetric& at(const std::string& name) const;
};

// Pools each aspect over every scored position of every sample (normalized
// scale) and computes PCC and MSE.
MetricReport score_predictions(std::span<const curriculum::Sample> samples,
                               std::span<const PlainPredictions> preds, const std::string& view);
MetricReport evaluate(const model::HippoModel& m, std::span<const curriculum::Sample> samples,
                      const std::string& view);

struct AggregateMetric {
  std::string name;
  std::optional<double> pcc_mean, pcc_std;  // over trials with a defined PCC
  double mse_mean = 0.0, mse_std = 0.0;
  std::size_t trials = 0;
};
using AggregateReport = std::array<AggregateMetric, objectives::kAspects>;

// Mean and sample standard deviation (0 for a single trial) per aspect.
AggregateReport aggregate(std::span<const MetricReport> trials);

std::string to_json(const MetricReport& r);
std::string to_json(const AggregateReport& r);
// Aligned plain-text table.
std::string to_text(const MetricReport& r);
std::string to_text(const AggregateReport& r);

// CSV with header utt_id,y,z0..z{d-1}; y is the utterance accuracy on the
// raw 0..10 scale, z the time-averaged phone encoding.
void write_embeddings_csv(const model::HippoModel& m, std::span<const curriculum::Sample> samples,
                          const std::string& path);

// ---- baselines ----

// Linear model y = w.x + b.
struct Ridge {
  std::vector<double> weights;
  double intercept = 0.0;
  double predict(std::span<const double> x) const;
};

// L2-penalized least squares on centered data (the intercept is not
// penalized). x holds one sample per row. Throws std::invalid_argument for
// mismatched sizes, no rows, or a negative penalty.
Ridge ridge_fit(const Matrix& x, std::span<const double> y, double penalty);

// One row per sample: GOP features averaged over the sample's phones.
Matrix mean_gop_features(std::span<const curriculum::Sample> samples);

// ---- optimization ----

class Adam {
 public:
  explicit Adam(ParamStore& params, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  // Applies one update from the accumulated gradients, then clears them.
  void step();
  std::size_t steps() const { return t_; }

 private:
  ParamStore* params_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Loss weights used for training: the objective defaults with CONO
// embeddings RMS-normalized.
inline objectives::LossWeights default_train_weights() {
  objectives::LossWeights w;
  w.normalize_embeddings = true;
  return w;
}

struct TrainConfig {
  model::ModelConfig model;  // num_phones and vocab_size come from the corpus
  double learning_rate = 1e-3;
  std::size_t batch_size = 25;
  std::size_t epochs = 100;
  std::size_t trials = 5;
  std::uint64_t seed = 0;
  objectives::LossWeights weights = default_train_weights();
  bool curriculum = true;
  bool cono = true;
  curriculum::TaskView selection_view = curriculum::TaskView::Hard;
  std::string out_dir;  // empty: no files written
  bool log_steps = false;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double apa = 0.0;
  double diversity = 0.0;
  double tightness = 0.0;
  double hard_fraction = 0.0;
  MetricReport heldout;
  double seconds = 0.0;
};

struct TrainResult {
  model::HippoModel model;  // parameters of the best epoch
  std::size_t best_epoch = 0;
  std::vector<EpochLog> history;
};

// One trial with config.seed. With out_dir set, writes checkpoint_last.json
// every epoch, checkpoint_best.json on improvement, and metrics.jsonl.
TrainResult train(const TrainConfig& config, const PreparedCorpus& data);

// Average loss of a batch (no parameter update); used by tests.
objectives::LossTerms batch_loss(const model::HippoModel& m,
                                 std::span<const curriculum::Sample> batch,
                                 const objectives::LossWeights& weights);

// ---- gradient check ----

struct GradcheckConfig {
  std::size_t dim = 8;
  std::size_t pool_heads = 2;
  std::size_t samples_per_group = 16;
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor: entries smaller than this are compared in absolute
  // terms (tolerance * floor), above the roundoff of central differences.
  double floor = 1e-5;
  std::uint64_t seed = 0;
  objectives::LossWeights weights = default_train_weights();
};

struct GroupCheck {
  std::string name;
  std::size_t size = 0;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GroupCheck> groups;
  double max_rel_error = 0.0;
  std::string worst_group;
  bool passed = false;
  double seconds = 0.0;
};

// Full model of width config.dim on a 2-utterance synthetic batch; compares
// analytic gradients of total_loss with central differences for every
// parameter group (all entries of small groups, a deterministic sample
// including the largest-gradient entry of large ones).
GradcheckReport gradcheck(const GradcheckConfig& config);
std::string to_json(const GradcheckReport& r);

// ---- configuration ----

struct ExperimentConfig {
  syncorpus::CorpusConfig corpus;
  TrainConfig train;
  GradcheckConfig gradcheck;
};

// JSON object with optional sections "corpus", "model", "train", "loss",
// "gradcheck". Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);

}  // namespace hippo::harness
