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

// Command-line front end over the C API.
//
// Success prints a one-line JSON summary on stdout and exits 0. Failure
// prints {"error": <code>, "message": <text>} on one stderr line and exits
// nonzero (64 for usage errors, otherwise the library status).

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hippo/hippo.h"

namespace {

using nlohmann::json;

constexpr int kUsageExit = 64;

struct Failure {
  int exit_code;
  std::string code;
  std::string message;
};

void check(hippo_status s) {
  if (s != HIPPO_OK) throw Failure{static_cast<int>(s), hippo_status_name(s), hippo_last_error()};
}

std::string read_file(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream f(path);
  if (!f) throw Failure{HIPPO_ERR_IO, "io", "cannot read config " + path};
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Takes ownership of a library-allocated string.
std::string take(char* s) {
  std::string out = s ? s : "";
  hippo_string_free(s);
  return out;
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;

  std::string config() const { return read_file(config_path); }
  const std::uint64_t* seed_ptr() const { return seed ? &*seed : nullptr; }
};

void add_common(CLI::App* app, Common& c, bool out_required, const std::string& out_help) {
  app->add_option("--config", c.config_path, "Configuration file (JSON or section.key = value)")
      ->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Seed override");
  auto* o = app->add_option("--out", c.out, out_help);
  if (out_required) o->required();
}

class Corpus {
 public:
  // Loads `path`, or generates from the config's corpus section when empty.
  Corpus(const std::string& path, const Common& c) {
    if (path.empty())
      check(hippo_corpus_generate(c.config().c_str(), c.seed_ptr(), &h_));
    else
      check(hippo_corpus_load(path.c_str(), &h_));
  }
  ~Corpus() { hippo_corpus_free(h_); }
  Corpus(const Corpus&) = delete;
  Corpus& operator=(const Corpus&) = delete;
  const hippo_corpus* get() const { return h_; }

 private:
  hippo_corpus* h_ = nullptr;
};

void emit(const json& j) { std::cout << j.dump() << std::endl; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-granular pronunciation assessment on synthetic learner speech"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hippo_version()));

  Common synth_c, gop_c, align_c, train_c, eval_c, grad_c;
  std::string gop_corpus, gop_view = "hard", align_corpus, train_corpus, curriculum_flag,
              eval_corpus, eval_view = "hard", embeddings;
  std::vector<std::string> checkpoints;
  bool heldout_only = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus (JSONL)");
  add_common(synth, synth_c, true, "Corpus JSONL to write");

  auto* gop = app.add_subcommand("gopfeat", "Write per-utterance GOP feature matrices (JSONL)");
  add_common(gop, gop_c, true, "GOP JSONL to write");
  gop->add_option("--corpus", gop_corpus, "Corpus JSONL (default: generate from config)");
  gop->add_option("--view", gop_view, "Phone sequence to score against")
      ->check(CLI::IsMember({"easy", "hard"}));

  auto* aln = app.add_subcommand("align", "Transfer scores onto transcriptions and measure WER");
  add_common(aln, align_c, true, "Aligned free-speaking view JSONL to write");
  aln->add_option("--corpus", align_corpus, "Corpus JSONL (default: generate from config)");

  auto* trn = app.add_subcommand("train", "Train one model per trial");
  add_common(trn, train_c, true, "Output directory");
  trn->add_option("--corpus", train_corpus, "Corpus JSONL (default: generate from config)");
  trn->add_option("--curriculum", curriculum_flag, "Easy-to-hard schedule; off trains on both views")
      ->check(CLI::IsMember({"on", "off"}));

  auto* ev = app.add_subcommand("eval", "Score checkpoints on a corpus view");
  add_common(ev, eval_c, false, "Report JSON to write (default: stdout only)");
  ev->add_option("--checkpoint", checkpoints, "Checkpoint file; repeat to aggregate trials")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--corpus", eval_corpus, "Corpus JSONL (default: generate from config)");
  ev->add_option("--view", eval_view, "easy (reference text) or hard (transcription)")
      ->check(CLI::IsMember({"easy", "hard"}));
  ev->add_flag("--heldout-only", heldout_only, "Score only the held-out split");
  ev->add_option("--dump-embeddings", embeddings, "CSV of utt_id, y and z per utterance");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  add_common(grad, grad_c, false, "Report JSON to write");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::Success& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::string msg = e.what();
      for (auto& ch : msg)
        if (ch == '\n') ch = ' ';
      throw Failure{kUsageExit, "usage", msg};
    }

    if (*synth) {
      hippo_corpus* c = nullptr;
      check(hippo_corpus_generate(synth_c.config().c_str(), synth_c.seed_ptr(), &c));
      const auto n = hippo_corpus_size(c);
      const auto s = hippo_corpus_save(c, synth_c.out.c_str());
      hippo_corpus_free(c);
      check(s);
      emit({{"command", "synth"}, {"utterances", n}, {"out", synth_c.out}});
    } else if (*gop) {
      Corpus c(gop_corpus, gop_c);
      check(hippo_corpus_write_gop(c.get(), gop_view.c_str(), gop_c.out.c_str()));
      emit({{"command", "gopfeat"}, {"utterances", hippo_corpus_size(c.get())}, {"view", gop_view},
            {"out", gop_c.out}});
    } else if (*aln) {
      Corpus c(align_corpus, align_c);
      char* summary = nullptr;
      check(hippo_corpus_write_alignment(c.get(), align_c.out.c_str(), &summary));
      auto j = json::parse(take(summary));
      j["command"] = "align";
      j["out"] = align_c.out;
      emit(j);
    } else if (*trn) {
      const auto config = train_c.config();
      check(hippo_config_check(config.c_str()));
      Corpus c(train_corpus, train_c);
      const int cl = curriculum_flag.empty() ? -1 : curriculum_flag == "on" ? 1 : 0;
      char* summary = nullptr;
      check(hippo_train(c.get(), config.c_str(), train_c.seed_ptr(), cl, train_c.out.c_str(),
                        &summary));
      const auto j = json::parse(take(summary));
      emit({{"command", "train"}, {"out", train_c.out}, {"trials", j["trials"].size()},
            {"aggregate", j["aggregate"]}});
    } else if (*ev) {
      std::vector<hippo_model*> models;
      struct Release {
        std::vector<hippo_model*>& m;
        ~Release() {
          for (auto* p : m) hippo_model_free(p);
        }
      } release{models};
      for (const auto& path : checkpoints) {
        hippo_model* m = nullptr;
        check(hippo_model_load(path.c_str(), &m));
        models.push_back(m);
      }
      Corpus c(eval_corpus, eval_c);
      char* report = nullptr;
      check(hippo_evaluate(models.data(), models.size(), c.get(), eval_view.c_str(),
                           heldout_only ? 1 : 0, embeddings.empty() ? nullptr : embeddings.c_str(),
                           &report));
      const auto text = take(report);
      if (!eval_c.out.empty()) {
        std::ofstream f(eval_c.out);
        if (!(f << text << '\n')) throw Failure{HIPPO_ERR_IO, "io", "cannot write " + eval_c.out};
      }
      auto j = json::parse(text);
      j["command"] = "eval";
      emit(j);
    } else if (*grad) {
      char* report = nullptr;
      const auto s = hippo_gradcheck(grad_c.config().c_str(), grad_c.seed_ptr(), &report);
      const auto text = take(report);
      if (!grad_c.out.empty() && !text.empty()) {
        std::ofstream f(grad_c.out);
        if (!(f << text << '\n')) throw Failure{HIPPO_ERR_IO, "io", "cannot write " + grad_c.out};
      }
      check(s);
      const auto j = json::parse(text);
      emit({{"command", "gradcheck"}, {"passed", j["passed"]}, {"max_rel_error", j["max_rel_error"]},
            {"groups", j["groups"].size()}});
    }
    return 0;
  } catch (const Failure& f) {
    std::cerr << json{{"error", f.code}, {"message", f.message}}.dump() << std::endl;
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << std::endl;
    return HIPPO_ERR_INTERNAL;
  }
}
