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

#include "hippo/alignment.hpp"

#include <algorithm>
#include <stdexcept>

namespace hippo::align {

template <class Token>
AlignmentOps align(std::span<const Token> hyp, std::span<const Token> ref) {
  const std::size_t R = ref.size(), H = hyp.size();
  // cost[i][j]: edit distance between ref[0, i) and hyp[0, j)
  std::vector<std::size_t> cost((R + 1) * (H + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (H + 1) + j]; };
  for (std::size_t i = 0; i <= R; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= H; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= R; ++i)
    for (std::size_t j = 1; j <= H; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }

  AlignmentOps ops;
  ops.reserve(R + H);
  std::size_t i = R, j = H;
  while (i > 0 || j > 0) {
    const std::size_t here = at(i, j);
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i - 1, j - 1) == here) {
      ops.push_back({EditKind::Match, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && j > 0 && at(i - 1, j - 1) + 1 == here) {
      ops.push_back({EditKind::Substitute, i - 1, j - 1});
      --i, --j;
    } else if (i > 0 && at(i - 1, j) + 1 == here) {
      ops.push_back({EditKind::Delete, i - 1, kNone});
      --i;
    } else {
      ops.push_back({EditKind::Insert, kNone, j - 1});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

EditCounts count_edits(const AlignmentOps& ops) {
  EditCounts c;
  for (const auto& op : ops) {
    switch (op.kind) {
      case EditKind::Match: ++c.matches; break;
      case EditKind::Substitute: ++c.substitutions; break;
      case EditKind::Delete: ++c.deletions; break;
      case EditKind::Insert: ++c.insertions; break;
    }
  }
  return c;
}

void validate(const AlignmentOps& ops, std::size_t ref_len, std::size_t hyp_len) {
  std::size_t next_ref = 0, next_hyp = 0;
  for (const auto& op : ops) {
    const bool uses_ref = op.kind != EditKind::Insert;
    const bool uses_hyp = op.kind != EditKind::Delete;
    if (uses_ref) {
      if (op.ref != next_ref) throw std::invalid_argument("alignment: reference index out of order");
      ++next_ref;
    } else if (op.ref != kNone) {
      throw std::invalid_argument("alignment: insertion carries a reference index");
    }
    if (uses_hyp) {
      if (op.hyp != next_hyp) throw std::invalid_argument("alignment: hypothesis index out of order");
      ++next_hyp;
    } else if (op.hyp != kNone) {
      throw std::invalid_argument("alignment: deletion carries a hypothesis index");
    }
  }
  if (next_ref != ref_len) throw std::invalid_argument("alignment: reference not fully covered");
  if (next_hyp != hyp_len) throw std::invalid_argument("alignment: hypothesis not fully covered");
}

template <class Token>
double word_error_rate(std::span<const Token> hyp, std::span<const Token> ref) {
  if (ref.empty()) return static_cast<double>(hyp.size());
  return static_cast<double>(count_edits(align(hyp, ref)).cost()) / static_cast<double>(ref.size());
}

ScoredSequence assign_scores(const AlignmentOps& ops, std::span<const double> ref_scores,
                             std::size_t hyp_len) {
  validate(ops, ref_scores.size(), hyp_len);
  ScoredSequence out;
  out.scores.reserve(hyp_len);
  out.provenance.reserve(hyp_len);
  for (const auto& op : ops) {
    switch (op.kind) {
      case EditKind::Match:
      case EditKind::Substitute:
        out.scores.push_back(ref_scores[op.ref]);
        out.provenance.push_back(Provenance::HumanMatched);
        break;
      case EditKind::Insert:
        out.scores.push_back(0.0);
        out.provenance.push_back(Provenance::ZeroedInsertion);
        break;
      case EditKind::Delete:
        break;
    }
  }
  return out;
}

std::vector<std::size_t> build_phone_word_map(std::span<const std::size_t> phones_per_word) {
  std::vector<std::size_t> map;
  for (std::size_t w = 0; w < phones_per_word.size(); ++w) {
    if (phones_per_word[w] == 0)
      throw std::invalid_argument("build_phone_word_map: word " + std::to_string(w) +
                                  " has no phones");
    map.insert(map.end(), phones_per_word[w], w);
  }
  return map;
}

template AlignmentOps align<int>(std::span<const int>, std::span<const int>);
template AlignmentOps align<std::string>(std::span<const std::string>,
                                         std::span<const std::string>);
template double word_error_rate<int>(std::span<const int>, std::span<const int>);
template double word_error_rate<std::string>(std::span<const std::string>,
                                             std::span<const std::string>);

}  // namespace hippo::align
