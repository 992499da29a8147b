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

#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "hippo/curriculum.hpp"

using namespace hippo::curriculum;

TEST_CASE("schedule_prob") {
  CHECK(schedule_prob(0, 100) == 0.0);
  CHECK(schedule_prob(100, 100) == 1.0);
  CHECK(schedule_prob(50, 100) == 0.5);
  CHECK_THROWS_AS(schedule_prob(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(CurriculumState(0, 1), std::invalid_argument);
}

TEST_CASE("sample_task: endpoints are certain") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CurriculumState s(10, seed);
    CHECK(s.sample_task() == TaskView::Easy);  // tau = 0
  }
  CurriculumState s(5, 3);
  for (int i = 0; i < 5; ++i) s.sample_task();
  REQUIRE(s.tau() == 5);
  for (int i = 0; i < 100; ++i) CHECK(s.sample_task() == TaskView::Hard);
  CHECK(s.tau() == 5);
}

TEST_CASE("sample_task: replay is identical") {
  CurriculumState a(1000, 77), b(1000, 77);
  for (int i = 0; i < 1000; ++i) CHECK(a.sample_task() == b.sample_task());
}

TEST_CASE("sample_task: windowed hard fraction rises with progress") {
  const std::size_t T = 10000;
  CurriculumState s(T, 2024);
  std::vector<int> hard(T);
  for (std::size_t i = 0; i < T; ++i) hard[i] = s.sample_task() == TaskView::Hard;
  double prev = -1.0;
  for (std::size_t w = 0; w < T / 500; ++w) {
    double f = 0.0;
    for (std::size_t i = w * 500; i < (w + 1) * 500; ++i) f += hard[i];
    f /= 500.0;
    CHECK(f >= prev - 0.05);
    prev = f;
  }
}

namespace {

hippo::syncorpus::Corpus tiny_corpus(double wer) {
  hippo::syncorpus::CorpusConfig c;
  c.utterances = 20;
  c.target_wer = wer;
  c.seed = 21;
  return hippo::syncorpus::generate_corpus(c);
}

}  // namespace

TEST_CASE("select_view: zero WER gives identical views") {
  for (const auto& r : tiny_corpus(0.0).records) {
    const auto e = select_view(r, TaskView::Easy);
    const auto h = select_view(r, TaskView::Hard);
    CHECK(e.utt_id == r.utt_id);
    CHECK(e.inputs.gop == h.inputs.gop);
    CHECK(e.inputs.phone_ids == h.inputs.phone_ids);
    CHECK(e.targets.phone == h.targets.phone);
    CHECK(e.targets.word == h.targets.word);
    CHECK(e.targets.utterance == h.targets.utterance);
  }
}

TEST_CASE("select_view: insertions and deletions change the hard view's length") {
  using namespace hippo::syncorpus;
  CorpusConfig cfg;
  cfg.seed = 21;
  const auto lex = make_lexicon(cfg);
  auto r = tiny_corpus(0.0).records[3];
  const std::size_t m = r.ref.words.size();

  auto ins = r;
  auto words = r.ref.words;
  words.insert(words.begin() + 1, (words[0] + 1) % 60);
  ins.hyp = transcribed_view(r.ref, words, lex);
  const auto hi = select_view(ins, TaskView::Hard);
  CHECK(hi.inputs.num_words == m + 1);
  CHECK(hi.targets.word[0].size() == m + 1);
  for (std::size_t a = 0; a < hippo::model::kWordAspects; ++a) CHECK(hi.targets.word[a][1] == 0.0);
  CHECK(hi.inputs.gop.rows == ins.hyp.phones.size());

  auto del = r;
  words = r.ref.words;
  words.erase(words.begin());
  del.hyp = transcribed_view(r.ref, words, lex);
  const auto hd = select_view(del, TaskView::Hard);
  CHECK(hd.inputs.num_words == m - 1);
  CHECK(hd.targets.word[2].size() == m - 1);
  CHECK(hd.targets.word[2][0] == r.ref.scores.word[2][1]);

  auto broken = r;
  broken.hyp = View{};
  CHECK_THROWS_AS(select_view(broken, TaskView::Hard), std::invalid_argument);
  CHECK_NOTHROW(select_view(broken, TaskView::Easy));
}
