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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "hippo/alignment.hpp"
#include "hippo/ctc_gop.hpp"
#include "hippo/harness.hpp"
#include "hippo/syncorpus.hpp"

using namespace hippo;
using namespace hippo::syncorpus;

namespace {

CorpusConfig small(std::size_t n, std::uint64_t seed = 1) {
  CorpusConfig c;
  c.utterances = n;
  c.seed = seed;
  return c;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double mean_gop(const ctc::LogPosteriorGrid& g, const std::vector<int>& phones) {
  const auto f = ctc::gop_features(g, phones);
  double s = 0.0;
  for (std::size_t i = 0; i < f.rows; ++i) s += f(i, ctc::gop_column(g.num_phones()));
  return s / static_cast<double>(f.rows);
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(CorpusConfig{}.validate());
  auto c = small(10);
  c.num_phones = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small(10);
  c.lexicon_size = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small(10);
  c.words_per_utt = {5, 4};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small(10);
  c.target_wer = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(generate_corpus(c), std::invalid_argument);
}

TEST_CASE("generate_corpus is deterministic and ordered by utt_id") {
  const auto a = generate_corpus(small(40, 9));
  const auto b = generate_corpus(small(40, 9));
  REQUIRE(a.records.size() == 40);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].utt_id == i);
    CHECK(record_to_json(a.records[i], a.num_phones, a.lexicon_size) ==
          record_to_json(b.records[i], b.num_phones, b.lexicon_size));
  }
  // a single utterance regenerates from (seed, utt_id) alone
  const auto lex = make_lexicon(small(40, 9));
  const auto r17 = generate_utterance(small(40, 9), lex, 17);
  CHECK(record_to_json(r17, 12, 60) == record_to_json(a.records[17], 12, 60));
  const auto other = generate_corpus(small(40, 10));
  CHECK(record_to_json(other.records[0], 12, 60) != record_to_json(a.records[0], 12, 60));
}

TEST_CASE("proficiency drives utterance accuracy; every record validates") {
  const auto c = generate_corpus(small(2000));
  std::vector<double> rho, acc;
  for (const auto& r : c.records) {
    CHECK_NOTHROW(r.validate(c.num_phones, c.lexicon_size));
    CHECK(r.proficiency >= 0.0);
    CHECK(r.proficiency <= 1.0);
    rho.push_back(r.proficiency);
    acc.push_back(r.ref.scores.utterance[0]);
  }
  const double spearman = *harness::pcc(ranks(rho), ranks(acc));
  MESSAGE("spearman(rho, utt accuracy) = " << spearman);
  CHECK(spearman >= 0.9);
}

TEST_CASE("record validation rejects out-of-range scores and broken maps") {
  const auto c = generate_corpus(small(3));
  auto r = c.records[0];
  r.ref.scores.phone[0] = 3.0;
  CHECK_THROWS_AS(r.validate(c.num_phones, c.lexicon_size), std::invalid_argument);
  r = c.records[0];
  r.ref.scores.utterance[2] = 11.0;
  CHECK_THROWS_AS(r.validate(c.num_phones, c.lexicon_size), std::invalid_argument);
  r = c.records[0];
  r.ref.phone_to_word.pop_back();
  CHECK_THROWS_AS(r.validate(c.num_phones, c.lexicon_size), std::invalid_argument);
  r = c.records[0];
  r.ssl[1].pop_back();
  CHECK_THROWS_AS(r.validate(c.num_phones, c.lexicon_size), std::invalid_argument);
}

TEST_CASE("simulate_posteriors: normalization, frame count, score monotonicity") {
  std::mt19937_64 pick(5);
  std::uniform_int_distribution<int> ph(0, 11);
  std::uniform_int_distribution<std::size_t> fr(2, 5);
  int greater = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> phones(6);
    std::vector<std::size_t> frames(6);
    for (auto& p : phones) p = ph(pick);
    for (auto& f : frames) f = fr(pick);
    std::mt19937_64 r1(trial), r2(trial);
    const auto good = simulate_posteriors(phones, std::vector<double>(6, 2.0), frames, 12, r1);
    const auto bad = simulate_posteriors(phones, std::vector<double>(6, 0.0), frames, 12, r2);
    CHECK(good.frames() == std::accumulate(frames.begin(), frames.end(), std::size_t{0}));
    CHECK(good.num_phones() == 12);
    for (std::size_t t = 0; t < good.frames(); ++t) {
      double s = 0.0;
      for (double lp : good.logp.row(t)) s += std::exp(lp);
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    greater += mean_gop(good, phones) > mean_gop(bad, phones);
  }
  CHECK(greater == 50);
}

TEST_CASE("inject_asr_errors: identity at zero, calibrated WER, all error types") {
  const auto cfg = small(1);
  const auto lex = make_lexicon(cfg);
  std::mt19937_64 src(3);
  std::uniform_int_distribution<int> w(0, 59);
  std::vector<int> words(10000);
  for (auto& x : words) x = w(src);

  std::mt19937_64 r0(1);
  CHECK(inject_asr_errors(words, 0.0, lex, r0) == words);

  // utterance-sized chunks, as the generator uses it
  align::EditCounts total;
  std::size_t ref_len = 0;
  std::mt19937_64 rng(11);
  for (std::size_t i = 0; i < words.size(); i += 6) {
    std::vector<int> ref(words.begin() + i, words.begin() + std::min(i + 6, words.size()));
    const auto hyp = inject_asr_errors(ref, 0.2, lex, rng);
    CHECK_FALSE(hyp.empty());
    const auto e = align::count_edits(align::align<int>(hyp, ref));
    total.substitutions += e.substitutions;
    total.deletions += e.deletions;
    total.insertions += e.insertions;
    ref_len += ref.size();
  }
  const double wer = static_cast<double>(total.cost()) / static_cast<double>(ref_len);
  MESSAGE("measured WER at target 0.2: " << wer);
  CHECK(std::abs(wer - 0.2) <= 0.02);
  CHECK(total.substitutions > 0);
  CHECK(total.deletions > 0);
  CHECK(total.insertions > 0);

  std::mt19937_64 a(7), b(7);
  CHECK(inject_asr_errors(words, 0.2, lex, a) == inject_asr_errors(words, 0.2, lex, b));
}

TEST_CASE("transcribed view scores come from assign_scores") {
  const auto c = generate_corpus(small(300));
  std::size_t changed = 0;
  for (const auto& r : c.records) {
    changed += r.hyp.words != r.ref.words;
    const auto wops = align::align<int>(r.hyp.words, r.ref.words);
    for (std::size_t a = 0; a < model::kWordAspects; ++a)
      CHECK(r.hyp.scores.word[a] ==
            align::assign_scores(wops, r.ref.scores.word[a], r.hyp.words.size()).scores);
    const auto pops = align::align<int>(r.hyp.phones, r.ref.phones);
    CHECK(r.hyp.scores.phone ==
          align::assign_scores(pops, r.ref.scores.phone, r.hyp.phones.size()).scores);
    CHECK(r.hyp.scores.utterance == r.ref.scores.utterance);
  }
  CHECK(changed > 0);
}

TEST_CASE("SSL vectors: shape, determinism, linear recoverability") {
  const auto c = generate_corpus(small(1000, 4));
  for (const auto& v : c.records[0].ssl) CHECK(v.size() == model::kSslDim);
  std::mt19937_64 a(2), b(2);
  const auto& s = c.records[0].ref.scores;
  CHECK(simulate_ssl_vectors(s, 10, 4, a) == simulate_ssl_vectors(s, 10, 4, b));

  const std::size_t dim = model::kSslViews * model::kSslDim;
  Matrix train(800, dim), test(200, dim);
  std::vector<double> ytrain, ytest;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto& r = c.records[i];
    auto& m = i < 800 ? train : test;
    const std::size_t row = i < 800 ? i : i - 800;
    for (std::size_t v = 0; v < model::kSslViews; ++v)
      std::copy(r.ssl[v].begin(), r.ssl[v].end(), m.row(row).begin() + v * model::kSslDim);
    (i < 800 ? ytrain : ytest).push_back(r.ref.scores.utterance[4]);
  }
  const auto fit = harness::ridge_fit(train, ytrain, 100.0);
  std::vector<double> pred;
  for (std::size_t i = 0; i < 200; ++i) pred.push_back(fit.predict(test.row(i)));
  const double r = *harness::pcc(pred, ytest);
  MESSAGE("ridge SSL -> utterance total, held-out PCC = " << r);
  CHECK(r >= 0.5);
}

TEST_CASE("JSONL round trip") {
  const auto c = generate_corpus(small(12, 3));
  const auto path = (std::filesystem::temp_directory_path() / "hippo_roundtrip.jsonl").string();
  save_jsonl(c, path);
  const auto back = load_jsonl(path);
  REQUIRE(back.records.size() == c.records.size());
  CHECK(back.num_phones == c.num_phones);
  CHECK(back.lexicon_size == c.lexicon_size);
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    CHECK(back.records[i].ref == c.records[i].ref);
    CHECK(back.records[i].hyp == c.records[i].hyp);
    CHECK(record_to_json(back.records[i], 12, 60) == record_to_json(c.records[i], 12, 60));
  }
  std::filesystem::remove(path);
  CHECK_THROWS(load_jsonl(path));
}

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t b = 0; b < 20; ++b)
    for (std::uint64_t s = 0; s < 20; ++s) seen.insert(derive_seed(b, s));
  CHECK(seen.size() == 400);
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}
