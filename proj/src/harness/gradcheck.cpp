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
#include <json.hpp>
#include <random>

#include "hippo/harness.hpp"

namespace hippo::harness {

namespace {

enum Stream : std::uint64_t { kCorpusStream = 21, kInitStream = 22, kSampleStream = 23 };

// Entries to probe: everything for small groups, otherwise the largest
// analytic gradient plus a seeded random subset.
std::vector<std::size_t> probe_indices(const std::vector<double>& grad, std::size_t limit,
                                       std::mt19937_64& rng) {
  std::vector<std::size_t> idx(grad.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (grad.size() <= limit) return idx;
  const auto top = static_cast<std::size_t>(
      std::max_element(grad.begin(), grad.end(),
                       [](double a, double b) { return std::abs(a) < std::abs(b); }) -
      grad.begin());
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(limit);
  if (std::find(idx.begin(), idx.end(), top) == idx.end()) idx.back() = top;
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradcheckReport gradcheck(const GradcheckConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  syncorpus::CorpusConfig cc;
  cc.utterances = 10;
  cc.words_per_utt = {2, 3};
  cc.seed = syncorpus::derive_seed(c.seed, kCorpusStream);
  const auto data = prepare(syncorpus::generate_corpus(cc));

  // One read-aloud and one free-speaking sample with different utterance
  // labels, so both CONO terms have centroids to work with.
  std::vector<curriculum::Sample> batch{data.easy[0]};
  for (std::size_t i = 1; i < data.hard.size() && batch.size() < 2; ++i)
    if (data.hard[i].targets.utterance[0] != batch[0].targets.utterance[0])
      batch.push_back(data.hard[i]);
  if (batch.size() < 2) batch.push_back(data.hard[1]);

  model::ModelConfig mc;
  mc.num_phones = data.num_phones;
  mc.vocab_size = data.lexicon_size;
  mc.dim = c.dim;
  mc.pool_heads = c.pool_heads;
  model::HippoModel m(mc, syncorpus::derive_seed(c.seed, kInitStream));

  auto f = [&] { return batch_loss(m, batch, c.weights).total; };
  m.params().zero_grad();
  backward(f());

  std::mt19937_64 rng(syncorpus::derive_seed(c.seed, kSampleStream));
  GradcheckReport report;
  report.passed = true;
  for (auto& e : m.params().entries()) {
    const auto analytic = e.tensor.grad();
    GroupCheck g;
    g.name = e.name;
    g.size = e.tensor.size();
    auto v = e.tensor.mutable_data();
    for (auto i : probe_indices(analytic, c.samples_per_group, rng)) {
      const double keep = v[i];
      v[i] = keep + c.step;
      const double up = f().item();
      v[i] = keep - c.step;
      const double down = f().item();
      v[i] = keep;
      const double numeric = (up - down) / (2.0 * c.step);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), c.floor});
      g.max_rel_error = std::max(g.max_rel_error, std::abs(analytic[i] - numeric) / denom);
      ++g.checked;
    }
    g.passed = g.max_rel_error <= c.tolerance;
    report.passed = report.passed && g.passed;
    if (g.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = g.max_rel_error;
      report.worst_group = g.name;
    }
    report.groups.push_back(std::move(g));
  }
  m.params().zero_grad();
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string to_json(const GradcheckReport& r) {
  nlohmann::json groups = nlohmann::json::array();
  std::vector<std::string> failed;
  for (const auto& g : r.groups) {
    groups.push_back({{"name", g.name},
                      {"size", g.size},
                      {"checked", g.checked},
                      {"max_rel_error", g.max_rel_error},
                      {"passed", g.passed}});
    if (!g.passed) failed.push_back(g.name);
  }
  return nlohmann::json{{"passed", r.passed},
                        {"max_rel_error", r.max_rel_error},
                        {"worst_group", r.worst_group},
                        {"failed_groups", failed},
                        {"seconds", r.seconds},
                        {"groups", groups}}
      .dump();
}

}  // namespace hippo::harness
