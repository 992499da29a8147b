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

// Easy-to-hard task scheduling: each optimizer step trains on the
// read-aloud view with probability 1 - tau/T and on the free-speaking view
// otherwise.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

#include "hippo/model.hpp"
#include "hippo/objectives.hpp"
#include "hippo/syncorpus.hpp"

namespace hippo::curriculum {

enum class TaskView { Easy, Hard };

std::string_view to_string(TaskView v);

// tau / total. Throws std::invalid_argument when total is 0 or tau > total.
double schedule_prob(std::size_t tau, std::size_t total);

class CurriculumState {
 public:
  CurriculumState(std::size_t total_iterations, std::uint64_t seed);

  // Hard with probability tau/T, then tau advances (saturating at T).
  // Consumes exactly one draw.
  TaskView sample_task();

  std::size_t tau() const { return tau_; }
  std::size_t horizon() const { return total_; }
  double hard_probability() const { return schedule_prob(tau_, total_); }

 private:
  std::size_t tau_ = 0;
  std::size_t total_;
  std::mt19937_64 rng_;
};

// Model inputs and targets of one utterance under a task view. Easy uses
// the reference text (GOP against the reference phones, human scores); Hard
// uses the transcription (GOP against the transcribed phones, transferred
// scores). Targets are copied from the record as-is.
struct Sample {
  std::size_t utt_id = 0;
  model::ModelInputs inputs;
  objectives::AspectTargets targets;
};

// Throws std::invalid_argument when the record lacks the requested view.
Sample select_view(const syncorpus::UtteranceRecord& record, TaskView task);

}  // namespace hippo::curriculum
