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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iclr/caches.hpp"
#include "iclr/core.hpp"
#include "iclr/llm.hpp"
#include "iclr/metrics.hpp"
#include "iclr/retrieval.hpp"
#include "iclr/score_cache.hpp"

namespace iclr {

/// One evaluation configuration. Defaults are k = 6, lambda_d = 0.75,
/// lambda_b = 0.95.
struct EvalRun {
  std::string dataset_id;
  RetrieverConfig retriever;
  PromptTemplate prompt;
  std::size_t concurrency = 4;
  /// Non-zero: scoring requests are dispatched in an order shuffled with this
  /// seed. Results never depend on it.
  std::uint64_t seed = 0;
  /// Context-only demonstrations for Fix (e.g. a fixed primer). Their ids are
  /// appended to retriever.fixed_ids.
  std::vector<Demonstration> fixed_demos;
};

/// Caches shared by every run over one dataset and model.
struct Workspace {
  EmbeddingCache& embeddings;
  BiasCache* biases = nullptr;
  ScoreCache& scores;
};

struct RetrievedDemos {
  std::string example_id;
  std::vector<std::string> demo_ids;
  std::vector<std::string> questions;
  /// Mean pairwise cosine of the demos' question embeddings; NaN below two
  /// demos or when embeddings are unavailable.
  double avg_similarity = 0.0;
};

struct EvalOutcome {
  MetricsReport report;
  std::vector<ExampleScores> scores;
  std::vector<RetrievedDemos> contexts;
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
};

/// Leave-one-out evaluation: per example, retrieve from the demos not sharing
/// its question, score every answer with and without the context, then
/// aggregate MC1/MC2/MC3 over examples and DPO over (q, a, a-bar) triplets.
/// Examples whose scoring fails are dropped and listed in the report.
EvalOutcome evaluate(const EvalRun& run, std::span<const EvalExample> evals,
                     const DemoStore& store, ScoringBackend& backend,
                     Workspace& ws);

/// One report per method, sharing data and caches.
std::vector<MetricsReport> run_ablation(const EvalRun& run,
                                        std::span<const Method> methods,
                                        std::span<const EvalExample> evals,
                                        const DemoStore& store,
                                        ScoringBackend& backend, Workspace& ws);

struct SweepRow {
  double lambda_d = 0.0;
  double avg_similarity = 0.0;
  double dpo = 0.0;
};

/// Evaluates Rel+Div+Bias at each lambda_d, keeping the rest of `run`.
std::vector<SweepRow> diversity_sweep(const EvalRun& run,
                                      std::span<const double> lambda_d_grid,
                                      std::span<const EvalExample> evals,
                                      const DemoStore& store,
                                      ScoringBackend& backend, Workspace& ws);

/// CSV with header "lambda_d,avg_similarity,dpo".
std::string sweep_to_csv(std::span<const SweepRow> rows);

/// Scatter of avg_similarity (x) against dpo (y).
std::string sweep_to_svg(std::span<const SweepRow> rows);

struct TextToEmbed {
  std::string hash;
  std::string text;
};

/// Demo and eval questions lacking a cached embedding, deduplicated by hash.
std::vector<TextToEmbed> missing_embeddings(const DemoStore& store,
                                            std::span<const EvalExample> evals,
                                            const EmbeddingCache& cache);

/// Fills the cache for every demo and eval question. Returns the number of
/// source calls (zero on a warm cache).
std::size_t precompute_embeddings(const DemoStore& store,
                                  std::span<const EvalExample> evals,
                                  EmbeddingSource& source,
                                  EmbeddingCache& cache);

/// Fills the bias cache for every demo. Completed entries persist even when
/// some demos fail; the first failure is rethrown naming its demo id.
/// Returns the number of backend calls.
std::size_t precompute_biases(const DemoStore& store, ScoringBackend& backend,
                              const PromptTemplate& tmpl, BiasCache& cache,
                              std::size_t concurrency);

/// Runs fn(i) for i in [0, n) on up to `concurrency` threads, visiting
/// indices in `order` when given.
void parallel_for(std::size_t n, std::size_t concurrency,
                  std::span<const std::size_t> order,
                  const std::function<void(std::size_t)>& fn);

}  // namespace iclr
