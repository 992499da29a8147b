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

#include "hippo/hippo.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>
#include <string>

#include "hippo/alignment.hpp"
#include "hippo/ctc_gop.hpp"
#include "hippo/harness.hpp"
#include "hippo/syncorpus.hpp"

struct hippo_corpus {
  hippo::syncorpus::Corpus corpus;
};

struct hippo_model {
  hippo::model::HippoModel model;
};

namespace {

using nlohmann::json;
using namespace hippo;

thread_local std::string last_error;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class F>
hippo_status guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const harness::NumericError& e) {
    last_error = e.what();
    return HIPPO_ERR_NUMERIC;
  } catch (const IoError& e) {
    last_error = e.what();
    return HIPPO_ERR_IO;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return HIPPO_ERR_IO;
  } catch (const std::invalid_argument& e) {
    last_error = e.what();
    return HIPPO_ERR_INVALID_ARGUMENT;
  } catch (const json::exception& e) {
    last_error = e.what();
    return HIPPO_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return HIPPO_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return HIPPO_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

harness::ExperimentConfig config_of(const char* text) {
  return harness::parse_config(text ? text : "");
}

curriculum::TaskView view_of(const char* name) {
  const std::string v = name ? name : "";
  if (v == "easy" || v == "read-aloud") return curriculum::TaskView::Easy;
  if (v == "hard" || v == "free-speaking") return curriculum::TaskView::Hard;
  throw std::invalid_argument("view must be easy or hard, got '" + v + "'");
}

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

char* give(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void maybe_give(char** out, const std::string& s) {
  if (out) *out = give(s);
}

std::vector<curriculum::Sample> samples_of(const syncorpus::Corpus& c, curriculum::TaskView v,
                                           bool heldout_only) {
  std::vector<curriculum::Sample> out;
  for (const auto& r : c.records)
    if (!heldout_only || harness::is_heldout(r.utt_id))
      out.push_back(curriculum::select_view(harness::normalize_scores(r), v));
  return out;
}

}  // namespace

extern "C" {

const char* hippo_version(void) { return "1.0.0"; }

const char* hippo_last_error(void) { return last_error.c_str(); }

const char* hippo_status_name(hippo_status status) {
  switch (status) {
    case HIPPO_OK: return "ok";
    case HIPPO_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case HIPPO_ERR_IO: return "io";
    case HIPPO_ERR_NUMERIC: return "numeric";
    case HIPPO_ERR_CHECK_FAILED: return "check_failed";
    case HIPPO_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void hippo_string_free(char* s) { std::free(s); }

hippo_status hippo_config_check(const char* config_text) {
  return guarded([&] {
    config_of(config_text);
    return HIPPO_OK;
  });
}

hippo_status hippo_corpus_generate(const char* config_text, const uint64_t* seed,
                                   hippo_corpus** out) {
  return guarded([&] {
    require(out != nullptr, "out is NULL");
    auto cfg = config_of(config_text).corpus;
    if (seed) cfg.seed = *seed;
    *out = new hippo_corpus{syncorpus::generate_corpus(cfg)};
    return HIPPO_OK;
  });
}

hippo_status hippo_corpus_load(const char* path, hippo_corpus** out) {
  return guarded([&] {
    require(path && out, "path or out is NULL");
    if (!std::filesystem::exists(path)) throw IoError(std::string("no such file ") + path);
    *out = new hippo_corpus{syncorpus::load_jsonl(path)};
    return HIPPO_OK;
  });
}

hippo_status hippo_corpus_save(const hippo_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus && path, "corpus or path is NULL");
    open_out(path);  // creates parent directories, checks writability
    syncorpus::save_jsonl(corpus->corpus, path);
    return HIPPO_OK;
  });
}

size_t hippo_corpus_size(const hippo_corpus* corpus) {
  return corpus ? corpus->corpus.records.size() : 0;
}

void hippo_corpus_free(hippo_corpus* corpus) { delete corpus; }

hippo_status hippo_corpus_write_gop(const hippo_corpus* corpus, const char* view,
                                    const char* path) {
  return guarded([&] {
    require(corpus && path, "corpus or path is NULL");
    const auto v = view_of(view);
    auto f = open_out(path);
    for (const auto& r : corpus->corpus.records) {
      const auto& phones = v == curriculum::TaskView::Easy ? r.ref.phones : r.hyp.phones;
      const auto gop = ctc::gop_features(r.posteriors, phones);
      json rows = json::array();
      for (std::size_t i = 0; i < gop.rows; ++i) {
        const auto row = gop.row(i);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
      }
      f << json{{"utt_id", r.utt_id}, {"view", curriculum::to_string(v)}, {"gop", rows}}.dump()
        << '\n';
    }
    if (!f) throw IoError(std::string("write failed: ") + path);
    return HIPPO_OK;
  });
}

hippo_status hippo_corpus_write_alignment(const hippo_corpus* corpus, const char* path,
                                          char** summary_json) {
  return guarded([&] {
    require(corpus && path, "corpus or path is NULL");
    auto f = open_out(path);
    align::EditCounts total;
    std::size_t ref_words = 0;
    for (const auto& r : corpus->corpus.records) {
      const auto word_ops = align::align<int>(r.hyp.words, r.ref.words);
      const auto phone_ops = align::align<int>(r.hyp.phones, r.ref.phones);
      syncorpus::AspectScores s;
      json provenance = json::array();
      for (std::size_t a = 0; a < model::kWordAspects; ++a) {
        const auto t = align::assign_scores(word_ops, r.ref.scores.word[a], r.hyp.words.size());
        s.word[a] = t.scores;
        if (a == 0)
          for (auto p : t.provenance)
            provenance.push_back(p == align::Provenance::HumanMatched ? "matched" : "inserted");
      }
      s.phone = align::assign_scores(phone_ops, r.ref.scores.phone, r.hyp.phones.size()).scores;
      s.utterance = r.ref.scores.utterance;
      const auto e = align::count_edits(word_ops);
      total.matches += e.matches;
      total.substitutions += e.substitutions;
      total.deletions += e.deletions;
      total.insertions += e.insertions;
      ref_words += r.ref.words.size();
      f << json{{"utt_id", r.utt_id},
                {"hyp_words", r.hyp.words},
                {"hyp_phones", r.hyp.phones},
                {"hyp_phone_to_word", r.hyp.phone_to_word},
                {"hyp_scores", json::parse(syncorpus::scores_to_json(s))},
                {"word_provenance", provenance},
                {"edits",
                 {{"matches", e.matches},
                  {"substitutions", e.substitutions},
                  {"deletions", e.deletions},
                  {"insertions", e.insertions}}},
                {"wer", align::word_error_rate<int>(r.hyp.words, r.ref.words)}}
                  .dump()
        << '\n';
    }
    if (!f) throw IoError(std::string("write failed: ") + path);
    const double wer =
        ref_words ? static_cast<double>(total.cost()) / static_cast<double>(ref_words) : 0.0;
    maybe_give(summary_json, json{{"utterances", corpus->corpus.records.size()},
                                  {"reference_words", ref_words},
                                  {"matches", total.matches},
                                  {"substitutions", total.substitutions},
                                  {"deletions", total.deletions},
                                  {"insertions", total.insertions},
                                  {"wer", wer}}
                                 .dump());
    return HIPPO_OK;
  });
}

hippo_status hippo_train(const hippo_corpus* corpus, const char* config_text, const uint64_t* seed,
                         int curriculum, const char* out_dir, char** summary_json) {
  return guarded([&] {
    require(corpus != nullptr, "corpus is NULL");
    require(curriculum >= -1 && curriculum <= 1, "curriculum must be -1, 0 or 1");
    auto tc = config_of(config_text).train;
    if (seed) tc.seed = *seed;
    if (curriculum >= 0) tc.curriculum = curriculum == 1;
    const std::string dir = out_dir ? out_dir : "";
    const auto data = harness::prepare(corpus->corpus);

    std::vector<harness::MetricReport> best;
    json trials = json::array();
    for (std::size_t t = 0; t < tc.trials; ++t) {
      auto trial = tc;
      trial.seed = tc.seed + t;
      if (!dir.empty()) trial.out_dir = dir + "/trial_" + std::to_string(t);
      const auto r = harness::train(trial, data);
      best.push_back(r.history[r.best_epoch - 1].heldout);
      trials.push_back({{"seed", trial.seed},
                        {"best_epoch", r.best_epoch},
                        {"heldout", json::parse(harness::to_json(best.back()))}});
    }
    const json summary{{"curriculum", tc.curriculum},
                       {"cono", tc.cono && tc.weights.cono > 0.0},
                       {"selection_view", curriculum::to_string(tc.selection_view)},
                       {"trials", trials},
                       {"aggregate", json::parse(harness::to_json(harness::aggregate(best)))}};
    if (!dir.empty()) open_out(dir + "/summary.json") << summary.dump(2) << '\n';
    maybe_give(summary_json, summary.dump());
    return HIPPO_OK;
  });
}

hippo_status hippo_model_load(const char* checkpoint_path, hippo_model** out) {
  return guarded([&] {
    require(checkpoint_path && out, "path or out is NULL");
    if (!std::filesystem::exists(checkpoint_path))
      throw IoError(std::string("no such file ") + checkpoint_path);
    *out = new hippo_model{model::load_checkpoint(checkpoint_path)};
    return HIPPO_OK;
  });
}

void hippo_model_free(hippo_model* model) { delete model; }

hippo_status hippo_evaluate(const hippo_model* const* models, size_t num_models,
                            const hippo_corpus* corpus, const char* view, int heldout_only,
                            const char* embeddings_csv, char** report_json) {
  return guarded([&] {
    require(models && num_models > 0 && corpus, "need at least one model and a corpus");
    for (size_t i = 0; i < num_models; ++i) require(models[i] != nullptr, "model handle is NULL");
    const auto v = view_of(view);
    const auto samples = samples_of(corpus->corpus, v, heldout_only != 0);
    require(!samples.empty(), "no utterances to evaluate");
    const std::string name(curriculum::to_string(v));
    std::vector<harness::MetricReport> reports;
    for (size_t i = 0; i < num_models; ++i)
      reports.push_back(harness::evaluate(models[i]->model, samples, name));
    if (embeddings_csv) {
      open_out(embeddings_csv);
      harness::write_embeddings_csv(models[0]->model, samples, embeddings_csv);
    }
    if (num_models == 1) {
      maybe_give(report_json, harness::to_json(reports[0]));
    } else {
      auto j = json::parse(harness::to_json(harness::aggregate(reports)));
      j["view"] = name;
      j["utterances"] = samples.size();
      maybe_give(report_json, j.dump());
    }
    return HIPPO_OK;
  });
}

hippo_status hippo_gradcheck(const char* config_text, const uint64_t* seed, char** report_json) {
  return guarded([&] {
    auto g = config_of(config_text).gradcheck;
    if (seed) g.seed = *seed;
    const auto r = harness::gradcheck(g);
    maybe_give(report_json, harness::to_json(r));
    if (!r.passed) {
      last_error = "gradient check failed, worst group " + r.worst_group;
      return HIPPO_ERR_CHECK_FAILED;
    }
    return HIPPO_OK;
  });
}

}  // extern "C"
