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

// Deterministic synthetic learner corpus. A latent proficiency per
// utterance drives integer aspect scores, CTC posterior grids (good phones
// put more mass on their canonical label), SSL stand-in vectors, and an
// ASR-style transcription with injected word errors whose scores are
// transferred from the reference by edit-distance alignment.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hippo/alignment.hpp"
#include "hippo/ctc_gop.hpp"
#include "hippo/model.hpp"

namespace hippo::syncorpus {

inline constexpr int kSchemaVersion = 1;

struct Range {
  std::size_t lo = 0;
  std::size_t hi = 0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct CorpusConfig {
  std::size_t num_phones = 12;
  std::size_t lexicon_size = 60;
  std::size_t utterances = 2000;
  Range words_per_utt{3, 8};
  Range phones_per_word{2, 4};
  Range frames_per_phone{2, 5};  // the last frame of each phone is blank-dominated
  double target_wer = 0.2;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument for empty ranges, P < 2, V < 2, or a WER
  // outside [0, 1].
  void validate() const;
  friend bool operator==(const CorpusConfig&, const CorpusConfig&) = default;
};

struct Lexicon {
  std::size_t num_phones = 0;
  std::vector<std::vector<int>> pronunciations;  // word id -> phone ids

  std::size_t size() const { return pronunciations.size(); }
  // Concatenated phones and the phone -> word map of a word sequence.
  std::pair<std::vector<int>, std::vector<std::size_t>> expand(const std::vector<int>& words) const;
};

// Distinct pronunciations drawn from the inventory, deterministic in seed.
Lexicon make_lexicon(const CorpusConfig& config);

// Raw-scale scores: phone in {0, 1, 2}, word and utterance in {0..10}.
struct AspectScores {
  std::vector<double> phone;
  std::array<std::vector<double>, model::kWordAspects> word;
  std::array<double, model::kUttAspects> utterance{};
  friend bool operator==(const AspectScores&, const AspectScores&) = default;
};

// One textual view of an utterance.
struct View {
  std::vector<int> words;
  std::vector<int> phones;
  std::vector<std::size_t> phone_to_word;
  AspectScores scores;
  friend bool operator==(const View&, const View&) = default;
};

struct UtteranceRecord {
  std::size_t utt_id = 0;
  std::uint64_t seed = 0;
  double proficiency = 0.0;
  View ref;  // read-aloud: reference text, human scores
  View hyp;  // free-speaking: transcribed text, transferred scores
  ctc::LogPosteriorGrid posteriors;
  std::array<std::vector<double>, model::kSslViews> ssl;

  // Throws std::invalid_argument when score ranges, lengths or maps are
  // inconsistent.
  void validate(std::size_t num_phones, std::size_t lexicon_size) const;
};

struct Corpus {
  std::size_t num_phones = 0;
  std::size_t lexicon_size = 0;
  std::vector<UtteranceRecord> records;
};

Corpus generate_corpus(const CorpusConfig& config);

// Single utterance, reproducible from (config.seed, utt_id) alone.
UtteranceRecord generate_utterance(const CorpusConfig& config, const Lexicon& lexicon,
                                   std::size_t utt_id);

// One grid per utterance: each phone spends `frames[i]` frames, the last of
// them blank-dominated. Canonical mass grows with the phone score.
ctc::LogPosteriorGrid simulate_posteriors(const std::vector<int>& phones,
                                          const std::vector<double>& phone_scores,
                                          const std::vector<std::size_t>& frames,
                                          std::size_t num_phones, std::mt19937_64& rng);

// Word substitutions (similarity-weighted), deletions and insertions at a
// combined rate of target_wer per reference word. Never returns an empty
// transcription for a nonempty reference.
std::vector<int> inject_asr_errors(const std::vector<int>& words, double target_wer,
                                   const Lexicon& lexicon, std::mt19937_64& rng);

// Three kSslDim vectors: fixed random projections (shared by the whole
// corpus, derived from corpus_seed) of the utterance scores, length and
// nuisance factors.
std::array<std::vector<double>, model::kSslViews> simulate_ssl_vectors(
    const AspectScores& scores, std::size_t num_phones_in_utt, std::uint64_t corpus_seed,
    std::mt19937_64& rng);

// Transcribed view: hyp words expanded through the lexicon; word and phone
// scores transferred by independent word- and phone-level alignments.
View transcribed_view(const View& ref, const std::vector<int>& hyp_words, const Lexicon& lexicon);

// JSONL, one record per line, "schema": 1.
void save_jsonl(const Corpus& corpus, const std::string& path);
Corpus load_jsonl(const std::string& path);
std::string record_to_json(const UtteranceRecord& r, std::size_t num_phones,
                           std::size_t lexicon_size);
// {"phone": [...], "word": {"acc", "stress", "total"}, "utt": {...}}
std::string scores_to_json(const AspectScores& s);

// Stable 64-bit mixing for per-utterance seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace hippo::syncorpus
