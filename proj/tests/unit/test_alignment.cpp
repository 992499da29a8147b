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

#include <random>
#include <string>

#include "hippo/alignment.hpp"
#include "support/ctc_oracle.hpp"
#include "support/edit_oracle.hpp"

using namespace hippo;
using align::EditKind;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> w) {
  return {w.begin(), w.end()};
}

align::AlignmentOps align_words(const std::vector<std::string>& hyp,
                                const std::vector<std::string>& ref) {
  return align::align<std::string>(hyp, ref);
}

}  // namespace

TEST_CASE("align: identical sequences are all matches") {
  auto ref = words({"the", "cat", "sat"});
  auto ops = align_words(ref, ref);
  REQUIRE(ops.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(ops[i] == align::EditOp{EditKind::Match, i, i});
}

TEST_CASE("align: single deletion") {
  auto ops = align_words(words({"A", "C"}), words({"A", "B", "C"}));
  REQUIRE(ops.size() == 3);
  CHECK(ops[0] == align::EditOp{EditKind::Match, 0, 0});
  CHECK(ops[1] == align::EditOp{EditKind::Delete, 1, align::kNone});
  CHECK(ops[2] == align::EditOp{EditKind::Match, 2, 1});
}

TEST_CASE("align: empty sequences") {
  std::vector<int> none, some{1, 2};
  CHECK(align::align<int>(none, none).empty());
  auto ins = align::align<int>(some, none);
  CHECK(align::count_edits(ins).insertions == 2);
  auto del = align::align<int>(none, some);
  CHECK(align::count_edits(del).deletions == 2);
}

TEST_CASE("align: cost equals memoized oracle, exhaustive to length 6") {
  std::vector<std::vector<int>> all;
  for (std::size_t len = 0; len <= 6; ++len)
    test::for_each_sequence(3, len, [&](const std::vector<int>& s) { all.push_back(s); });
  std::size_t checked = 0;
  bool ok = true;
  for (const auto& r : all) {
    for (const auto& h : all) {
      auto ops = align::align<int>(h, r);
      align::validate(ops, r.size(), h.size());
      if (align::count_edits(ops).cost() != test::edit_distance_oracle(h, r)) ok = false;
      ++checked;
    }
  }
  CHECK(ok);
  CHECK(checked == all.size() * all.size());
}

TEST_CASE("align: cost is symmetric with deletions and insertions swapped") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> sym(0, 3), len(0, 8);
  for (int t = 0; t < 500; ++t) {
    std::vector<int> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
    for (auto& x : a) x = sym(rng);
    for (auto& x : b) x = sym(rng);
    auto ab = align::count_edits(align::align<int>(a, b));
    auto ba = align::count_edits(align::align<int>(b, a));
    CHECK(ab.cost() == ba.cost());
    CHECK(static_cast<long>(ab.deletions) - static_cast<long>(ab.insertions) ==
          static_cast<long>(ba.insertions) - static_cast<long>(ba.deletions));
  }
}

TEST_CASE("word_error_rate") {
  auto ref = words({"a", "b", "c"});
  CHECK(align::word_error_rate<std::string>(ref, ref) == 0.0);
  auto hyp = words({"a", "x", "c", "d"});
  CHECK(align::word_error_rate<std::string>(hyp, ref) == doctest::Approx(2.0 / 3.0));
  std::vector<std::string> empty;
  CHECK(align::word_error_rate<std::string>(hyp, empty) == 4.0);
  CHECK(align::word_error_rate<std::string>(empty, empty) == 0.0);
}

TEST_CASE("word_error_rate: shared prefix adds no edits, only reference length") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> sym(0, 2), len(1, 6);
  for (int t = 0; t < 300; ++t) {
    std::vector<int> ref(static_cast<std::size_t>(len(rng))), hyp(static_cast<std::size_t>(len(rng))),
        prefix(static_cast<std::size_t>(len(rng)));
    for (auto& x : ref) x = sym(rng);
    for (auto& x : hyp) x = sym(rng);
    for (auto& x : prefix) x = sym(rng) + 10;  // disjoint alphabet
    std::vector<int> pr = prefix, ph = prefix;
    pr.insert(pr.end(), ref.begin(), ref.end());
    ph.insert(ph.end(), hyp.begin(), hyp.end());
    const double edits = static_cast<double>(test::edit_distance_oracle(hyp, ref));
    CHECK(align::word_error_rate<int>(hyp, ref) == doctest::Approx(edits / ref.size()));
    CHECK(align::word_error_rate<int>(ph, pr) == doctest::Approx(edits / pr.size()));
  }
}

TEST_CASE("assign_scores: transfer rules") {
  std::vector<double> ref_scores{7, 8, 9};
  SUBCASE("identity copies scores") {
    auto ref = words({"a", "b", "c"});
    auto s = align::assign_scores(align_words(ref, ref), ref_scores, 3);
    CHECK(s.scores == ref_scores);
  }
  SUBCASE("insertion scores zero") {
    auto s = align::assign_scores(align_words(words({"a", "z", "b", "c"}), words({"a", "b", "c"})),
                                  ref_scores, 4);
    CHECK(s.scores == std::vector<double>{7, 0, 8, 9});
    CHECK(s.provenance[1] == align::Provenance::ZeroedInsertion);
    CHECK(s.provenance[0] == align::Provenance::HumanMatched);
  }
  SUBCASE("substitution inherits") {
    auto s = align::assign_scores(align_words(words({"a", "q", "c"}), words({"a", "b", "c"})),
                                  ref_scores, 3);
    CHECK(s.scores == std::vector<double>{7, 8, 9});
  }
  SUBCASE("deletion dropped") {
    auto s = align::assign_scores(align_words(words({"a", "c"}), words({"a", "b", "c"})),
                                  ref_scores, 2);
    CHECK(s.scores == std::vector<double>{7, 9});
  }
  SUBCASE("inconsistent ops rejected") {
    auto ops = align_words(words({"a", "b"}), words({"a", "b", "c"}));
    CHECK_THROWS_AS(align::assign_scores(ops, std::vector<double>{1, 2}, 2), std::invalid_argument);
    CHECK_THROWS_AS(align::assign_scores(ops, ref_scores, 3), std::invalid_argument);
  }
}

TEST_CASE("assign_scores: never invents a score") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> sym(0, 4), len(0, 9);
  std::uniform_real_distribution<double> sc(0.5, 10.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<int> ref(static_cast<std::size_t>(len(rng))), hyp(static_cast<std::size_t>(len(rng)));
    for (auto& x : ref) x = sym(rng);
    for (auto& x : hyp) x = sym(rng);
    std::vector<double> scores(ref.size());
    for (auto& s : scores) s = sc(rng);
    auto ops = align::align<int>(hyp, ref);
    auto out = align::assign_scores(ops, scores, hyp.size());
    REQUIRE(out.scores.size() == hyp.size());
    std::size_t zeroed = 0;
    for (std::size_t i = 0; i < out.scores.size(); ++i) {
      const bool from_ref = std::find(scores.begin(), scores.end(), out.scores[i]) != scores.end();
      CHECK((from_ref || out.scores[i] == 0.0));
      zeroed += out.provenance[i] == align::Provenance::ZeroedInsertion;
    }
    CHECK(zeroed == align::count_edits(ops).insertions);
  }
}

TEST_CASE("build_phone_word_map") {
  std::vector<std::size_t> counts{2, 1, 3};
  CHECK(align::build_phone_word_map(counts) == std::vector<std::size_t>{0, 0, 1, 2, 2, 2});
  std::vector<std::size_t> one{4};
  CHECK(align::build_phone_word_map(one) == std::vector<std::size_t>{0, 0, 0, 0});
  std::vector<std::size_t> bad{2, 0};
  CHECK_THROWS_AS(align::build_phone_word_map(bad), std::invalid_argument);

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> c(1, 5), n(1, 8);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::size_t> per(n(rng));
    for (auto& x : per) x = c(rng);
    auto map = align::build_phone_word_map(per);
    std::vector<std::size_t> recovered(per.size(), 0);
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (i > 0) CHECK(map[i] >= map[i - 1]);
      ++recovered[map[i]];
    }
    CHECK(recovered == per);
  }
}
