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

#include "hippo/syncorpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <stdexcept>

namespace hippo::syncorpus {

namespace {

using nlohmann::json;

// Salts for independent per-utterance random streams.
enum Stream : std::uint64_t {
  kLexiconStream = 0x1e1c,
  kSslProjectionStream = 0x55e1,
  kUtteranceStream = 0xa11,
  kPosteriorStream = 1,
  kAsrStream = 2,
  kSslNoiseStream = 3,
};

// SSL features: 5 utterance scores, length, then nuisance factors.
constexpr std::size_t kSslNuisance = 6;
constexpr std::size_t kSslFeatures = model::kUttAspects + 1 + kSslNuisance;
constexpr double kSslNoise = 0.5;
constexpr double kSslScoreNoise = 1.0;
constexpr double kSslQuantum = 1e-4;

double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

std::size_t draw(std::mt19937_64& rng, Range r) {
  return std::uniform_int_distribution<std::size_t>(r.lo, r.hi)(rng);
}

// Pronunciation similarity in [0, 1]: 1 - normalized phone edit distance.
double similarity(const std::vector<int>& a, const std::vector<int>& b) {
  const auto e = align::count_edits(align::align<int>(a, b));
  return 1.0 - static_cast<double>(e.cost()) / static_cast<double>(std::max(a.size(), b.size()));
}

bool is_integer(double v) { return std::isfinite(v) && v == std::round(v); }

void check_scores(const std::vector<double>& s, double hi, const char* what) {
  for (double v : s)
    require(is_integer(v) && v >= 0.0 && v <= hi, std::string("record: bad ") + what + " score");
}

void check_view(const View& v, std::size_t num_phones, std::size_t lexicon_size,
                const char* name) {
  const std::string n(name);
  require(!v.words.empty(), "record: empty " + n + " word sequence");
  require(v.phones.size() == v.phone_to_word.size(), "record: " + n + " phone map length");
  require(v.phones.size() >= v.words.size(), "record: " + n + " has words without phones");
  for (int w : v.words)
    require(w >= 0 && static_cast<std::size_t>(w) < lexicon_size, "record: unknown word id");
  for (int p : v.phones)
    require(p >= 0 && static_cast<std::size_t>(p) < num_phones, "record: unknown phone id");
  require(v.phone_to_word.front() == 0 && v.phone_to_word.back() + 1 == v.words.size(),
          "record: " + n + " phone map does not cover every word");
  for (std::size_t j = 1; j < v.phone_to_word.size(); ++j) {
    const auto a = v.phone_to_word[j - 1], b = v.phone_to_word[j];
    require(b == a || b == a + 1, "record: " + n + " phone map not contiguous");
  }
  require(v.scores.phone.size() == v.phones.size(), "record: " + n + " phone score count");
  check_scores(v.scores.phone, 2.0, "phone");
  for (const auto& w : v.scores.word) {
    require(w.size() == v.words.size(), "record: " + n + " word score count");
    check_scores(w, 10.0, "word");
  }
  check_scores({v.scores.utterance.begin(), v.scores.utterance.end()}, 10.0, "utterance");
}

// Projection matrices (kSslDim x kSslFeatures per view), cached per seed.
const std::array<std::vector<double>, model::kSslViews>& ssl_projection(std::uint64_t seed) {
  thread_local std::uint64_t cached_seed = 0;
  thread_local bool have = false;
  thread_local std::array<std::vector<double>, model::kSslViews> w;
  if (!have || cached_seed != seed) {
    std::mt19937_64 rng(derive_seed(seed, kSslProjectionStream));
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(kSslFeatures)));
    for (auto& m : w) {
      m.resize(model::kSslDim * kSslFeatures);
      for (auto& x : m) x = g(rng);
    }
    cached_seed = seed;
    have = true;
  }
  return w;
}

json scores_json(const AspectScores& s) {
  const auto& u = s.utterance;
  return json{{"phone", s.phone},
              {"word", {{"acc", s.word[0]}, {"stress", s.word[1]}, {"total", s.word[2]}}},
              {"utt", {{"acc", u[0]}, {"flu", u[1]}, {"comp", u[2]}, {"pros", u[3]}, {"total", u[4]}}}};
}

AspectScores scores_of(const json& j) {
  AspectScores s;
  s.phone = j.at("phone").get<std::vector<double>>();
  const auto& w = j.at("word");
  s.word = {w.at("acc").get<std::vector<double>>(), w.at("stress").get<std::vector<double>>(),
            w.at("total").get<std::vector<double>>()};
  const auto& u = j.at("utt");
  s.utterance = {u.at("acc").get<double>(), u.at("flu").get<double>(), u.at("comp").get<double>(),
                 u.at("pros").get<double>(), u.at("total").get<double>()};
  return s;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over a combination of both inputs.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void CorpusConfig::validate() const {
  require(num_phones >= 2, "corpus config: need at least 2 phones");
  require(lexicon_size >= 2, "corpus config: need at least 2 lexicon words");
  require(utterances >= 1, "corpus config: need at least 1 utterance");
  for (auto [r, n] : {std::pair{words_per_utt, "words_per_utt"},
                      std::pair{phones_per_word, "phones_per_word"},
                      std::pair{frames_per_phone, "frames_per_phone"}})
    require(r.lo >= 1 && r.lo <= r.hi, std::string("corpus config: empty range ") + n);
  require(frames_per_phone.lo >= 2, "corpus config: phones need a speech and a blank frame");
  require(target_wer >= 0.0 && target_wer <= 1.0, "corpus config: target_wer outside [0, 1]");
  // Distinct pronunciations must exist.
  double room = 0.0;
  for (std::size_t len = phones_per_word.lo; len <= phones_per_word.hi && room < 1e18; ++len)
    room += std::pow(static_cast<double>(num_phones), static_cast<double>(len));
  require(room >= static_cast<double>(lexicon_size),
          "corpus config: lexicon larger than the number of distinct pronunciations");
}

std::pair<std::vector<int>, std::vector<std::size_t>> Lexicon::expand(
    const std::vector<int>& words) const {
  std::vector<int> phones;
  std::vector<std::size_t> map;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& pron = pronunciations.at(static_cast<std::size_t>(words[w]));
    phones.insert(phones.end(), pron.begin(), pron.end());
    map.insert(map.end(), pron.size(), w);
  }
  return {phones, map};
}

Lexicon make_lexicon(const CorpusConfig& config) {
  config.validate();
  std::mt19937_64 rng(derive_seed(config.seed, kLexiconStream));
  std::uniform_int_distribution<int> phone(0, static_cast<int>(config.num_phones) - 1);
  Lexicon lex;
  lex.num_phones = config.num_phones;
  std::set<std::vector<int>> seen;
  while (lex.pronunciations.size() < config.lexicon_size) {
    std::vector<int> pron(draw(rng, config.phones_per_word));
    for (auto& p : pron) p = phone(rng);
    if (seen.insert(pron).second) lex.pronunciations.push_back(std::move(pron));
  }
  return lex;
}

ctc::LogPosteriorGrid simulate_posteriors(const std::vector<int>& phones,
                                          const std::vector<double>& phone_scores,
                                          const std::vector<std::size_t>& frames,
                                          std::size_t num_phones, std::mt19937_64& rng) {
  require(!phones.empty(), "simulate_posteriors: no phones");
  require(phone_scores.size() == phones.size() && frames.size() == phones.size(),
          "simulate_posteriors: phones, scores and frame counts differ in length");
  const std::size_t width = num_phones + 1, blank = num_phones;
  std::size_t total = 0;
  for (auto f : frames) {
    require(f >= 2, "simulate_posteriors: each phone needs at least 2 frames");
    total += f;
  }
  std::normal_distribution<double> jitter(0.0, 0.25);
  std::bernoulli_distribution side(0.5);
  ctc::LogPosteriorGrid grid{Matrix(total, width)};
  std::vector<double> p(width);
  std::size_t t = 0;
  for (std::size_t i = 0; i < phones.size(); ++i) {
    const auto c = static_cast<std::size_t>(phones[i]);
    const double q = std::clamp(phone_scores[i] / 2.0, 0.0, 1.0);
    // A mispronounced phone drifts towards a neighbouring phone.
    const std::size_t confusion = side(rng) ? (c + 1) % num_phones : (c + num_phones - 1) % num_phones;
    for (std::size_t k = 0; k < frames[i]; ++k, ++t) {
      const bool last = k + 1 == frames[i];
      double canon = last ? 0.05 : 0.12 + 0.73 * q;
      double conf = last ? 0.0 : 0.45 * (1.0 - q) * (1.0 - q) + 0.03;
      double blank_mass = last ? 0.9 : 0.04;
      const double rest = std::max(0.0, 1.0 - canon - conf - blank_mass);
      const std::size_t others = width - 1 - (last ? 0 : 1) - 1;
      std::fill(p.begin(), p.end(), others > 0 ? rest / static_cast<double>(others) : 0.0);
      p[c] = canon;
      if (!last) p[confusion] = conf;
      p[blank] = blank_mass;
      double s = 0.0;
      for (auto& v : p) {
        v = std::max(v, 1e-4) * std::exp(jitter(rng));
        s += v;
      }
      for (std::size_t j = 0; j < width; ++j) grid.logp(t, j) = std::log(p[j] / s);
    }
  }
  return grid;
}

std::vector<int> inject_asr_errors(const std::vector<int>& words, double target_wer,
                                   const Lexicon& lexicon, std::mt19937_64& rng) {
  require(target_wer >= 0.0 && target_wer <= 1.0, "inject_asr_errors: rate outside [0, 1]");
  if (target_wer == 0.0 || words.empty()) return words;
  // An adjacent deletion and insertion align as a single substitution, so
  // the measured rate falls slightly short of the raw rate; boost it to first
  // order.
  const double rate = std::min(1.0, target_wer * (1.0 + 0.1 * target_wer));
  const double sub = 0.6 * rate, del = 0.2 * rate, ins = 0.2 * rate;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> any(0, static_cast<int>(lexicon.size()) - 1);

  auto substitute = [&](int w) {
    const auto& pw = lexicon.pronunciations.at(static_cast<std::size_t>(w));
    std::vector<double> weight(lexicon.size(), 0.0);
    for (std::size_t v = 0; v < lexicon.size(); ++v)
      if (static_cast<int>(v) != w) weight[v] = std::exp(4.0 * similarity(pw, lexicon.pronunciations[v]));
    return static_cast<int>(std::discrete_distribution<std::size_t>(weight.begin(), weight.end())(rng));
  };

  std::vector<int> out;
  for (int w : words) {
    const double r = u(rng);
    if (r < sub)
      out.push_back(substitute(w));
    else if (r >= sub + del)
      out.push_back(w);
    if (u(rng) < ins) out.push_back(any(rng));
  }
  if (out.empty()) out.push_back(substitute(words.front()));
  return out;
}

std::array<std::vector<double>, model::kSslViews> simulate_ssl_vectors(
    const AspectScores& scores, std::size_t num_phones_in_utt, std::uint64_t corpus_seed,
    std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::array<double, kSslFeatures> f{};
  // Perturbed per utterance so the scores are only partly recoverable.
  for (std::size_t a = 0; a < model::kUttAspects; ++a)
    f[a] = scores.utterance[a] / 5.0 - 1.0 + kSslScoreNoise * g(rng);
  f[model::kUttAspects] = static_cast<double>(num_phones_in_utt) / 20.0 - 1.0;
  for (std::size_t k = 0; k < kSslNuisance; ++k) f[model::kUttAspects + 1 + k] = g(rng);

  const auto& w = ssl_projection(corpus_seed);
  std::array<std::vector<double>, model::kSslViews> out;
  for (std::size_t v = 0; v < model::kSslViews; ++v) {
    out[v].resize(model::kSslDim);
    for (std::size_t i = 0; i < model::kSslDim; ++i) {
      double s = kSslNoise * g(rng);
      for (std::size_t k = 0; k < kSslFeatures; ++k) s += w[v][i * kSslFeatures + k] * f[k];
      out[v][i] = std::round(s / kSslQuantum) * kSslQuantum;
    }
  }
  return out;
}

View transcribed_view(const View& ref, const std::vector<int>& hyp_words, const Lexicon& lexicon) {
  View hyp;
  hyp.words = hyp_words;
  std::tie(hyp.phones, hyp.phone_to_word) = lexicon.expand(hyp_words);
  const auto word_ops = align::align<int>(hyp.words, ref.words);
  for (std::size_t a = 0; a < model::kWordAspects; ++a)
    hyp.scores.word[a] = align::assign_scores(word_ops, ref.scores.word[a], hyp.words.size()).scores;
  const auto phone_ops = align::align<int>(hyp.phones, ref.phones);
  hyp.scores.phone = align::assign_scores(phone_ops, ref.scores.phone, hyp.phones.size()).scores;
  hyp.scores.utterance = ref.scores.utterance;
  return hyp;
}

UtteranceRecord generate_utterance(const CorpusConfig& config, const Lexicon& lexicon,
                                   std::size_t utt_id) {
  UtteranceRecord r;
  r.utt_id = utt_id;
  r.seed = derive_seed(derive_seed(config.seed, kUtteranceStream), utt_id);
  std::mt19937_64 rng(r.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> word(0, static_cast<int>(lexicon.size()) - 1);
  auto score10 = [](double x) { return std::round(10.0 * clip01(x)); };

  r.proficiency = u(rng);
  const double rho = r.proficiency;
  r.ref.words.resize(draw(rng, config.words_per_utt));
  for (auto& w : r.ref.words) w = word(rng);
  std::tie(r.ref.phones, r.ref.phone_to_word) = lexicon.expand(r.ref.words);

  auto& s = r.ref.scores;
  for (std::size_t w = 0; w < r.ref.words.size(); ++w) {
    const double quality = clip01(rho + 0.15 * g(rng));
    const std::size_t n = lexicon.pronunciations[static_cast<std::size_t>(r.ref.words[w])].size();
    double phone_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double ps = std::round(2.0 * clip01(quality + 0.25 * g(rng)));
      s.phone.push_back(ps);
      phone_sum += ps;
    }
    const double acc = score10(0.7 * phone_sum / (2.0 * static_cast<double>(n)) + 0.3 * quality +
                               0.05 * g(rng));
    const double stress = score10(quality + 0.15 * g(rng));
    s.word[0].push_back(acc);
    s.word[1].push_back(stress);
    s.word[2].push_back(std::round(std::clamp(0.6 * acc + 0.4 * stress + 0.4 * g(rng), 0.0, 10.0)));
  }
  auto& us = s.utterance;
  us[0] = score10(rho + 0.05 * g(rng));
  us[1] = score10(rho + 0.1 * g(rng));
  us[2] = score10(0.6 + 0.4 * rho + 0.05 * g(rng));
  us[3] = score10(rho + 0.1 * g(rng));
  us[4] = std::round(std::clamp(0.5 * us[0] + 0.2 * us[1] + 0.1 * us[2] + 0.2 * us[3] + 0.3 * g(rng),
                                0.0, 10.0));

  std::vector<std::size_t> frames(r.ref.phones.size());
  for (auto& f : frames) f = draw(rng, config.frames_per_phone);

  std::mt19937_64 asr_rng(derive_seed(r.seed, kAsrStream));
  r.hyp = transcribed_view(r.ref, inject_asr_errors(r.ref.words, config.target_wer, lexicon, asr_rng),
                           lexicon);

  // The grid must be able to emit the transcription too: CTC needs one frame
  // per label plus a blank between repeats.
  std::size_t need = r.hyp.phones.size(), have = 0;
  for (std::size_t j = 1; j < r.hyp.phones.size(); ++j) need += r.hyp.phones[j] == r.hyp.phones[j - 1];
  for (auto f : frames) have += f;
  if (have < need) frames.back() += need - have;

  std::mt19937_64 post_rng(derive_seed(r.seed, kPosteriorStream));
  r.posteriors = simulate_posteriors(r.ref.phones, s.phone, frames, config.num_phones, post_rng);
  std::mt19937_64 ssl_rng(derive_seed(r.seed, kSslNoiseStream));
  r.ssl = simulate_ssl_vectors(s, r.ref.phones.size(), config.seed, ssl_rng);
  return r;
}

Corpus generate_corpus(const CorpusConfig& config) {
  config.validate();
  const auto lexicon = make_lexicon(config);
  Corpus c;
  c.num_phones = config.num_phones;
  c.lexicon_size = config.lexicon_size;
  c.records.reserve(config.utterances);
  for (std::size_t i = 0; i < config.utterances; ++i)
    c.records.push_back(generate_utterance(config, lexicon, i));
  return c;
}

void UtteranceRecord::validate(std::size_t num_phones, std::size_t lexicon_size) const {
  check_view(ref, num_phones, lexicon_size, "ref");
  check_view(hyp, num_phones, lexicon_size, "hyp");
  require(hyp.scores.utterance == ref.scores.utterance,
          "record: transcribed view must keep the utterance scores");
  require(proficiency >= 0.0 && proficiency <= 1.0, "record: proficiency outside [0, 1]");
  require(posteriors.logp.cols == num_phones + 1, "record: posterior width must be P + 1");
  ctc::validate(posteriors, 1e-9);
  for (const auto& v : ssl) {
    require(v.size() == model::kSslDim, "record: SSL vector length");
    for (double x : v) require(std::isfinite(x), "record: non-finite SSL value");
  }
}

std::string scores_to_json(const AspectScores& s) { return scores_json(s).dump(); }

std::string record_to_json(const UtteranceRecord& r, std::size_t num_phones,
                           std::size_t lexicon_size) {
  json post = json::array();
  for (std::size_t t = 0; t < r.posteriors.frames(); ++t) {
    const auto row = r.posteriors.logp.row(t);
    post.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json j{{"schema", kSchemaVersion},
         {"utt_id", r.utt_id},
         {"seed", r.seed},
         {"proficiency", r.proficiency},
         {"num_phones", num_phones},
         {"lexicon_size", lexicon_size},
         {"ref_words", r.ref.words},
         {"ref_phones", r.ref.phones},
         {"phone_to_word", r.ref.phone_to_word},
         {"scores", scores_json(r.ref.scores)},
         {"hyp_words", r.hyp.words},
         {"hyp_phones", r.hyp.phones},
         {"hyp_phone_to_word", r.hyp.phone_to_word},
         {"hyp_scores", scores_json(r.hyp.scores)},
         {"posteriors", std::move(post)},
         {"ssl", r.ssl}};
  return j.dump();
}

void save_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write corpus " + path);
  for (const auto& r : corpus.records)
    os << record_to_json(r, corpus.num_phones, corpus.lexicon_size) << '\n';
  if (!os) throw std::runtime_error("failed writing corpus " + path);
}

Corpus load_jsonl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open corpus " + path);
  Corpus c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    try {
      const auto j = json::parse(line);
      if (j.at("schema").get<int>() != kSchemaVersion)
        throw std::invalid_argument("unsupported schema version");
      const auto np = j.at("num_phones").get<std::size_t>();
      const auto lv = j.at("lexicon_size").get<std::size_t>();
      if (c.records.empty()) {
        c.num_phones = np;
        c.lexicon_size = lv;
      } else if (np != c.num_phones || lv != c.lexicon_size) {
        throw std::invalid_argument("inventory or lexicon size differs from earlier records");
      }
      UtteranceRecord r;
      r.utt_id = j.at("utt_id").get<std::size_t>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.proficiency = j.at("proficiency").get<double>();
      r.ref.words = j.at("ref_words").get<std::vector<int>>();
      r.ref.phones = j.at("ref_phones").get<std::vector<int>>();
      r.ref.phone_to_word = j.at("phone_to_word").get<std::vector<std::size_t>>();
      r.ref.scores = scores_of(j.at("scores"));
      r.hyp.words = j.at("hyp_words").get<std::vector<int>>();
      r.hyp.phones = j.at("hyp_phones").get<std::vector<int>>();
      r.hyp.phone_to_word = j.at("hyp_phone_to_word").get<std::vector<std::size_t>>();
      r.hyp.scores = scores_of(j.at("hyp_scores"));
      const auto post = j.at("posteriors").get<std::vector<std::vector<double>>>();
      if (post.empty()) throw std::invalid_argument("empty posterior grid");
      r.posteriors.logp = Matrix(post.size(), post[0].size());
      for (std::size_t t = 0; t < post.size(); ++t) {
        if (post[t].size() != post[0].size()) throw std::invalid_argument("ragged posterior grid");
        std::copy(post[t].begin(), post[t].end(), r.posteriors.logp.row(t).begin());
      }
      r.ssl = j.at("ssl").get<std::array<std::vector<double>, model::kSslViews>>();
      r.validate(c.num_phones, c.lexicon_size);
      c.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::invalid_argument(where + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
  }
  if (c.records.empty()) throw std::invalid_argument(path + ": corpus has no records");
  return c;
}

}  // namespace hippo::syncorpus
