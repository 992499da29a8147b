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

#include "hippo/curriculum.hpp"

#include <stdexcept>
#include <string>

namespace hippo::curriculum {

std::string_view to_string(TaskView v) { return v == TaskView::Easy ? "easy" : "hard"; }

double schedule_prob(std::size_t tau, std::size_t total) {
  if (total == 0) throw std::invalid_argument("curriculum: total iterations must be positive");
  if (tau > total) throw std::invalid_argument("curriculum: iteration beyond horizon");
  return static_cast<double>(tau) / static_cast<double>(total);
}

CurriculumState::CurriculumState(std::size_t total_iterations, std::uint64_t seed)
    : total_(total_iterations), rng_(seed) {
  if (total_ == 0) throw std::invalid_argument("curriculum: total iterations must be positive");
}

TaskView CurriculumState::sample_task() {
  const double p = hard_probability();
  // 53-bit uniform in [0, 1); fixed across standard libraries.
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const TaskView v = u < p ? TaskView::Hard : TaskView::Easy;
  if (tau_ < total_) ++tau_;
  return v;
}

Sample select_view(const syncorpus::UtteranceRecord& record, TaskView task) {
  const auto& view = task == TaskView::Easy ? record.ref : record.hyp;
  if (view.words.empty() || view.phones.empty())
    throw std::invalid_argument("select_view: utterance " + std::to_string(record.utt_id) +
                                " has no " + std::string(to_string(task)) + " view");
  Sample s;
  s.utt_id = record.utt_id;
  s.inputs = model::ModelInputs::unpadded(ctc::gop_features(record.posteriors, view.phones),
                                          view.phones, view.words, view.phone_to_word, record.ssl);
  s.targets.phone = view.scores.phone;
  s.targets.word = view.scores.word;
  s.targets.utterance = view.scores.utterance;
  return s;
}

}  // namespace hippo::curriculum
