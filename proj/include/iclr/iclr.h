// Copyright 2026 The iclr Authors. All Rights Reserved.
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

/*
 * iclr.h
 *
 * C interface to the demonstration retrieval and evaluation library.
 *
 * Every function returns an iclr_status. On failure the thread-local message
 * returned by iclr_last_error() describes the problem. Strings returned
 * through `char**` out-parameters are owned by the caller and must be
 * released with iclr_string_free(). Handles are released with their
 * matching *_free() function; passing NULL to a *_free() function is a no-op.
 */

#ifndef ICLR_ICLR_H_
#define ICLR_ICLR_H_

#include <stddef.h>

#if defined(ICLR_BUILDING_LIBRARY)
#define ICLR_API __attribute__((visibility("default")))
#else
#define ICLR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum iclr_status {
  ICLR_OK = 0,
  ICLR_INVALID_ARGUMENT = 1,
  ICLR_ZERO_VECTOR = 2,
  ICLR_DIMENSION_MISMATCH = 3,
  ICLR_MALFORMED_RECORD = 4,
  ICLR_EMPTY_INDEX = 5,
  ICLR_MISSING_QUERY = 6,
  ICLR_MISSING_FIXED_IDS = 7,
  ICLR_BACKEND_UNAVAILABLE = 8,
  ICLR_BACKEND_REJECTED = 9,
  ICLR_TOKENIZATION_MISMATCH = 10,
  ICLR_EMPTY_INPUT = 11,
  ICLR_TOO_FEW_ITEMS = 12,
  ICLR_MISSING_EMBEDDING = 13,
  ICLR_MISSING_BIAS = 14,
  ICLR_EMBEDDING_SOURCE_ERROR = 15,
  ICLR_IO_ERROR = 16,
  ICLR_LEAVE_ONE_OUT_VIOLATION = 17,
  ICLR_INTERNAL = 99
} iclr_status;

typedef struct iclr_dataset iclr_dataset;
typedef struct iclr_backend iclr_backend;
typedef struct iclr_workspace iclr_workspace;
typedef struct iclr_report iclr_report;
typedef struct iclr_sweep iclr_sweep;

ICLR_API const char* iclr_version(void);
ICLR_API const char* iclr_last_error(void);
ICLR_API const char* iclr_status_name(iclr_status status);
ICLR_API void iclr_string_free(char* s);

/* ---- Vector math and selection ---------------------------------------- */

ICLR_API iclr_status iclr_normalize(const double* v, size_t dim, double* out);
ICLR_API iclr_status iclr_cosine(const double* u, const double* v, size_t dim,
                                 double* out);

/* Greedy MMR with quality bias over n candidates. `embeddings` is row-major
 * n x dim with unit rows, `query` unit length, `biases` may be NULL (zeros).
 * Writes min(k, n) candidate positions and selection scores; either output
 * array may be NULL. */
ICLR_API iclr_status iclr_mmr_select(const double* embeddings, size_t n,
                                     size_t dim, const double* biases,
                                     const double* query, size_t k,
                                     double lambda_d, double lambda_b,
                                     size_t* out_positions, double* out_scores,
                                     size_t* out_count);

ICLR_API iclr_status iclr_dpo_term(double a_ctx, double a_bare,
                                   const double* abar_ctx,
                                   const double* abar_bare, double* out);
ICLR_API iclr_status iclr_avg_pairwise_similarity(const double* embeddings,
                                                  size_t n, size_t dim,
                                                  double* out);

/* ---- Datasets ----------------------------------------------------------- */

/* format: "jsonl", "truthfulqa-csv", or NULL to infer from the extension. */
ICLR_API iclr_status iclr_dataset_load(const char* path, const char* format,
                                       iclr_dataset** out);
ICLR_API void iclr_dataset_free(iclr_dataset* ds);
ICLR_API iclr_status iclr_dataset_counts(const iclr_dataset* ds,
                                         size_t* examples, size_t* pairs,
                                         size_t* triplets);
ICLR_API iclr_status iclr_dataset_to_jsonl(const iclr_dataset* ds, char** out);
/* SHA-256 of the canonical JSONL form. */
ICLR_API iclr_status iclr_dataset_hash(const iclr_dataset* ds, char** out);

/* ---- Scoring backends --------------------------------------------------- */

/* Fills tokens/logprobs for target given prefix. The callback allocates
 * nothing: it calls iclr_score_sink_push() once per token. Return 0 on
 * success, 1 for a retryable failure, 2 for a rejection. */
typedef struct iclr_score_sink iclr_score_sink;
typedef int (*iclr_score_fn)(void* user, const char* prefix,
                             const char* target, iclr_score_sink* sink);
ICLR_API void iclr_score_sink_push(iclr_score_sink* sink, const char* token,
                                   double logprob);

ICLR_API iclr_status iclr_backend_create_mock(double fallback_per_token,
                                              iclr_backend** out);
ICLR_API iclr_status iclr_backend_mock_add_fixture(iclr_backend* b,
                                                   const char* prefix,
                                                   const char* target,
                                                   const double* logprobs,
                                                   size_t n);
/* config_json: {"endpoint", "model", "credential_env", "max_concurrency",
 * "timeout_seconds", "retry": {"max_attempts", "base_seconds", "factor"}} */
ICLR_API iclr_status iclr_backend_create_http(const char* config_json,
                                              iclr_backend** out);
ICLR_API iclr_status iclr_backend_create_callback(iclr_score_fn fn, void* user,
                                                  const char* model,
                                                  size_t max_concurrency,
                                                  iclr_backend** out);
ICLR_API void iclr_backend_free(iclr_backend* b);
ICLR_API iclr_status iclr_backend_score(iclr_backend* b, const char* prefix,
                                        const char* target, double* total,
                                        size_t* n_tokens);
ICLR_API iclr_status iclr_backend_calls(const iclr_backend* b, size_t* out);

/* ---- Workspace (embedding, bias and score caches in one directory) ------ */

ICLR_API iclr_status iclr_workspace_open(const char* cache_dir,
                                         const char* model,
                                         iclr_workspace** out);
ICLR_API void iclr_workspace_free(iclr_workspace* ws);
/* Embeds every demo and eval question from an embedding file
 * ({"hash", "vector"} per line). */
ICLR_API iclr_status iclr_workspace_embed_from_file(iclr_workspace* ws,
                                                    const iclr_dataset* ds,
                                                    const char* path,
                                                    size_t* source_calls);
ICLR_API iclr_status iclr_workspace_embed_http(iclr_workspace* ws,
                                               const iclr_dataset* ds,
                                               const char* config_json,
                                               size_t* source_calls);
/* Writes {"hash", "text"} lines for questions lacking an embedding. */
ICLR_API iclr_status iclr_workspace_export_missing(iclr_workspace* ws,
                                                   const iclr_dataset* ds,
                                                   const char* path,
                                                   size_t* n_missing);
/* template_json may be NULL for the default template. */
ICLR_API iclr_status iclr_workspace_compute_biases(iclr_workspace* ws,
                                                   const iclr_dataset* ds,
                                                   iclr_backend* b,
                                                   const char* template_json,
                                                   size_t concurrency,
                                                   size_t* backend_calls);
ICLR_API iclr_status iclr_workspace_cache_stats(const iclr_workspace* ws,
                                                size_t* score_hits,
                                                size_t* score_misses);

/* ---- Runs --------------------------------------------------------------- */

/* run_json: {"method", "k", "lambda_d", "lambda_b", "concurrency", "seed",
 * "rescale_bias", "template": {...}, "fixed_ids": [...],
 * "fixed_demos": [{"question", "answer"}]}; absent keys take defaults. */
ICLR_API iclr_status iclr_evaluate(iclr_workspace* ws, const iclr_dataset* ds,
                                   iclr_backend* b, const char* run_json,
                                   iclr_report** out);
/* methods: comma-separated names, e.g. "Fix,Bias,Rel". */
ICLR_API iclr_status iclr_ablate(iclr_workspace* ws, const iclr_dataset* ds,
                                 iclr_backend* b, const char* run_json,
                                 const char* methods, iclr_report** out);
ICLR_API void iclr_report_free(iclr_report* r);
ICLR_API iclr_status iclr_report_json(const iclr_report* r, char** out);
ICLR_API iclr_status iclr_report_markdown(const iclr_report* r, char** out);
ICLR_API iclr_status iclr_report_dropped(const iclr_report* r, size_t* out);
/* Retrieved demo ids per eval example (single-method reports only). */
ICLR_API iclr_status iclr_report_contexts_json(const iclr_report* r, char** out);

ICLR_API iclr_status iclr_sweep_run(iclr_workspace* ws, const iclr_dataset* ds,
                                    iclr_backend* b, const char* run_json,
                                    const double* grid, size_t n,
                                    iclr_sweep** out);
ICLR_API void iclr_sweep_free(iclr_sweep* s);
ICLR_API iclr_status iclr_sweep_csv(const iclr_sweep* s, char** out);
ICLR_API iclr_status iclr_sweep_svg(const iclr_sweep* s, char** out);

/* ---- Misc --------------------------------------------------------------- */

ICLR_API iclr_status iclr_file_sha256(const char* path, char** out);
/* Default Fix context as [{"id", "question", "answer"}]. */
ICLR_API iclr_status iclr_default_primer_json(char** out);

#ifdef __cplusplus
}  // extern "C"
#endif

#endif  // ICLR_ICLR_H_
