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

/* C interface to the pronunciation assessment library.
 *
 * Objects are opaque handles released with the matching _free function.
 * Every fallible call returns a hippo_status; on failure hippo_last_error()
 * describes the problem (thread-local, valid until the next call on the
 * same thread). Strings returned through char** are owned by the caller
 * and released with hippo_string_free.
 *
 * config_text arguments take the experiment configuration format: a JSON
 * object or "section.key = value" lines; NULL or "" means defaults. A
 * non-NULL seed pointer overrides the configured seed. */

#ifndef HIPPO_HIPPO_H_
#define HIPPO_HIPPO_H_

#include <stddef.h>
#include <stdint.h>

#if defined(HIPPO_BUILDING_LIBRARY)
#define HIPPO_API __attribute__((visibility("default")))
#else
#define HIPPO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hippo_status {
  HIPPO_OK = 0,
  HIPPO_ERR_INVALID_ARGUMENT = 1,
  HIPPO_ERR_IO = 2,
  HIPPO_ERR_NUMERIC = 3,   /* training produced a non-finite loss */
  HIPPO_ERR_CHECK_FAILED = 4,  /* gradcheck ran and failed */
  HIPPO_ERR_INTERNAL = 5
} hippo_status;

typedef struct hippo_corpus hippo_corpus;
typedef struct hippo_model hippo_model;

HIPPO_API const char* hippo_version(void);
HIPPO_API const char* hippo_last_error(void);
/* Stable lower-case identifier such as "invalid_argument". */
HIPPO_API const char* hippo_status_name(hippo_status status);
HIPPO_API void hippo_string_free(char* s);

/* Validates a configuration without doing anything else. */
HIPPO_API hippo_status hippo_config_check(const char* config_text);

/* ---- corpus ---- */
HIPPO_API hippo_status hippo_corpus_generate(const char* config_text, const uint64_t* seed,
                                             hippo_corpus** out);
HIPPO_API hippo_status hippo_corpus_load(const char* path, hippo_corpus** out);
HIPPO_API hippo_status hippo_corpus_save(const hippo_corpus* corpus, const char* path);
HIPPO_API size_t hippo_corpus_size(const hippo_corpus* corpus);
HIPPO_API void hippo_corpus_free(hippo_corpus* corpus);

/* GOP feature matrices, one JSON line per utterance:
 * {"utt_id": n, "view": "easy"|"hard", "gop": [[...], ...]}. */
HIPPO_API hippo_status hippo_corpus_write_gop(const hippo_corpus* corpus, const char* view,
                                              const char* path);

/* Re-aligns every transcription against its reference and writes the
 * free-speaking view with transferred scores and per-utterance WER, one
 * JSON line per utterance. *summary_json (optional) receives the
 * corpus-wide counts and WER. */
HIPPO_API hippo_status hippo_corpus_write_alignment(const hippo_corpus* corpus, const char* path,
                                                    char** summary_json);

/* ---- training and evaluation ---- */

/* Runs train.trials independent trials (seeds seed, seed+1, ...). curriculum
 * is -1 to keep the configured value, 0 for off, 1 for on. With out_dir set,
 * trial k writes to out_dir/trial_k and the aggregate of the best epochs'
 * held-out reports goes to out_dir/summary.json; *summary_json (optional)
 * receives the same document. */
HIPPO_API hippo_status hippo_train(const hippo_corpus* corpus, const char* config_text,
                                   const uint64_t* seed, int curriculum, const char* out_dir,
                                   char** summary_json);

HIPPO_API hippo_status hippo_model_load(const char* checkpoint_path, hippo_model** out);
HIPPO_API void hippo_model_free(hippo_model* model);

/* Scores the given view ("easy" or "hard") of the corpus, or only its
 * held-out utterances when heldout_only is nonzero. With several models the
 * report aggregates mean and standard deviation over them. embeddings_csv,
 * if not NULL, receives utt_id, y and z of the first model. */
HIPPO_API hippo_status hippo_evaluate(const hippo_model* const* models, size_t num_models,
                                      const hippo_corpus* corpus, const char* view,
                                      int heldout_only, const char* embeddings_csv,
                                      char** report_json);

/* Finite-difference check of every parameter group. Returns HIPPO_OK when
 * it passes and HIPPO_ERR_CHECK_FAILED when it does not; the report is
 * produced in both cases. */
HIPPO_API hippo_status hippo_gradcheck(const char* config_text, const uint64_t* seed,
                                       char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* HIPPO_HIPPO_H_ */
