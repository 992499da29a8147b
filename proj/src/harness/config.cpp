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

#include <json.hpp>
#include <sstream>

#include "hippo/harness.hpp"

namespace hippo::harness {

namespace {

using nlohmann::json;

// "section.key = value" lines into a nested JSON object. Values are read
// as JSON when they parse, as strings otherwise.
json parse_key_values(const std::string& text) {
  json out = json::object();
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto raw = trim(line.substr(eq + 1));
    const auto dot = key.find('.');
    if (dot == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": key must look like section.name");
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    out[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return out;
}

class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (root.contains(name)) {
      if (!root.at(name).is_object())
        throw std::invalid_argument(std::string("config: section ") + name + " must be an object");
      j_ = root.at(name);
    }
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() == 0 && !j_.empty())
      throw std::invalid_argument("config: unknown key " + name_ + "." + j_.begin().key());
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config: bad value for " + name_ + "." + key);
    }
    j_.erase(key);
  }
  void range(const char* key, syncorpus::Range& r) {
    std::array<std::size_t, 2> v{r.lo, r.hi};
    get(key, v);
    r = {v[0], v[1]};
  }
  void view(const char* key, curriculum::TaskView& v) {
    std::string s(curriculum::to_string(v));
    get(key, s);
    if (s == "easy" || s == "read-aloud")
      v = curriculum::TaskView::Easy;
    else if (s == "hard" || s == "free-speaking")
      v = curriculum::TaskView::Hard;
    else
      throw std::invalid_argument("config: " + name_ + "." + key + " must be easy or hard");
  }

 private:
  std::string name_;
  json j_ = json::object();
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  json root;
  if (first == std::string::npos) {
    root = json::object();
  } else if (text[first] == '{') {
    root = json::parse(text, nullptr, false);
    if (root.is_discarded()) throw std::invalid_argument("config: malformed JSON");
  } else {
    root = parse_key_values(text);
  }
  for (const auto& [k, v] : root.items())
    if (k != "corpus" && k != "model" && k != "train" && k != "loss" && k != "gradcheck")
      throw std::invalid_argument("config: unknown section " + k);

  ExperimentConfig c;
  {
    Section s(root, "corpus");
    auto& cc = c.corpus;
    s.get("num_phones", cc.num_phones);
    s.get("lexicon_size", cc.lexicon_size);
    s.get("utterances", cc.utterances);
    s.range("words_per_utt", cc.words_per_utt);
    s.range("phones_per_word", cc.phones_per_word);
    s.range("frames_per_phone", cc.frames_per_phone);
    s.get("target_wer", cc.target_wer);
    s.get("seed", cc.seed);
  }
  {
    Section s(root, "model");
    auto& m = c.train.model;
    s.get("dim", m.dim);
    s.get("pool_heads", m.pool_heads);
    s.get("phone_blocks", m.phone_blocks);
    s.get("word_blocks", m.word_blocks);
    s.get("utt_blocks", m.utt_blocks);
  }
  {
    Section s(root, "train");
    auto& t = c.train;
    s.get("learning_rate", t.learning_rate);
    s.get("batch_size", t.batch_size);
    s.get("epochs", t.epochs);
    s.get("trials", t.trials);
    s.get("seed", t.seed);
    s.get("curriculum", t.curriculum);
    s.get("cono", t.cono);
    s.view("selection_view", t.selection_view);
    s.get("log_steps", t.log_steps);
  }
  {
    Section s(root, "loss");
    auto& w = c.train.weights;
    s.get("lambda_phone", w.granularity[0]);
    s.get("lambda_word", w.granularity[1]);
    s.get("lambda_utt", w.granularity[2]);
    s.get("lambda_d", w.diversity);
    s.get("lambda_t", w.tightness);
    s.get("lambda_cono", w.cono);
    s.get("normalize_embeddings", w.normalize_embeddings);
  }
  {
    Section s(root, "gradcheck");
    auto& g = c.gradcheck;
    s.get("dim", g.dim);
    s.get("pool_heads", g.pool_heads);
    s.get("samples_per_group", g.samples_per_group);
    s.get("step", g.step);
    s.get("tolerance", g.tolerance);
    s.get("floor", g.floor);
    s.get("seed", g.seed);
  }
  c.gradcheck.weights = c.train.weights;
  c.corpus.validate();
  c.train.validate();
  return c;
}

}  // namespace hippo::harness
