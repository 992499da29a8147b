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

// Edit-distance alignment of a recognized sequence against its reference,
// and transfer of reference scores onto the recognized tokens.

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace hippo::align {

enum class EditKind { Match, Substitute, Delete, Insert };

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct EditOp {
  EditKind kind;
  std::size_t ref = kNone;  // set for Match, Substitute, Delete
  std::size_t hyp = kNone;  // set for Match, Substitute, Insert
  friend bool operator==(const EditOp&, const EditOp&) = default;
};

using AlignmentOps = std::vector<EditOp>;

struct EditCounts {
  std::size_t matches = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t cost() const { return substitutions + deletions + insertions; }
};

// Minimal unit-cost Levenshtein alignment. Ties in the backtrace prefer
// Match, then Substitute, then Delete, then Insert.
template <class Token>
AlignmentOps align(std::span<const Token> hyp, std::span<const Token> ref);

EditCounts count_edits(const AlignmentOps& ops);

// Throws std::invalid_argument unless ops cover [0, ref_len) and
// [0, hyp_len) exactly once each, in increasing order.
void validate(const AlignmentOps& ops, std::size_t ref_len, std::size_t hyp_len);

// (S + D + I) / |ref|. With an empty reference the result is |hyp|.
template <class Token>
double word_error_rate(std::span<const Token> hyp, std::span<const Token> ref);

enum class Provenance { HumanMatched, ZeroedInsertion };

struct ScoredSequence {
  std::vector<double> scores;
  std::vector<Provenance> provenance;
};

// Recognized tokens aligned to a reference (Match or Substitute) inherit the
// reference score; inserted tokens score 0; deleted reference tokens leave
// nothing behind. Throws if ops do not fit ref_scores.
ScoredSequence assign_scores(const AlignmentOps& ops, std::span<const double> ref_scores,
                             std::size_t hyp_len);

// Flat phone -> word index map from per-word phone counts.
std::vector<std::size_t> build_phone_word_map(std::span<const std::size_t> phones_per_word);

extern template AlignmentOps align<int>(std::span<const int>, std::span<const int>);
extern template AlignmentOps align<std::string>(std::span<const std::string>,
                                                std::span<const std::string>);
extern template double word_error_rate<int>(std::span<const int>, std::span<const int>);
extern template double word_error_rate<std::string>(std::span<const std::string>,
                                                    std::span<const std::string>);

}  // namespace hippo::align
