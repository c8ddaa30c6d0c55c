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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iclr/caches.hpp"
#include "iclr/core.hpp"
#include "iclr/dataset_io.hpp"
#include "iclr/harness.hpp"
#include "iclr/http_backend.hpp"
#include "iclr/metrics.hpp"

namespace iclr::acceptance {

enum class Verdict { kPass, kFail, kSkip };

struct Outcome {
  Verdict verdict = Verdict::kSkip;
  std::string detail;
};

inline const char* label(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "PASS";
    case Verdict::kFail:
      return "FAIL";
    case Verdict::kSkip:
      return "SKIP";
  }
  return "?";
}

inline void print(int id, const char* name, const Outcome& o) {
  std::printf("%s  %2d  %-34s %s\n", label(o.verdict), id, name, o.detail.c_str());
  std::fflush(stdout);
}

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

inline std::vector<EvalExample> load_csv(const std::string& path) {
  return build_eval_set(read_records(path, DatasetFormat::kTruthfulQaCsv));
}

// Counts from the published benchmark CSV named by TRUTHFULQA_CSV.
inline Outcome dataset_counts() {
  const auto path = env("TRUTHFULQA_CSV");
  if (!path) return {Verdict::kSkip, "TRUTHFULQA_CSV not set"};
  const auto evals = load_csv(*path);
  const std::size_t examples = evals.size();
  const std::size_t pairs = expand_pairs(evals).size();
  const std::size_t triplets = expand_triplets(evals).size();
  const bool ok = examples == 817 && pairs == 2846 && triplets == 12485;
  return {ok ? Verdict::kPass : Verdict::kFail,
          std::to_string(examples) + " examples, " + std::to_string(pairs) + " pairs, " +
              std::to_string(triplets) + " triplets (want 817, 2846, 12485)"};
}

// Live MC1 ordering Rel+Div > Rel > Fix against a hosted completion endpoint.
//   ICLR_LIVE_ENDPOINT, ICLR_LIVE_MODEL      completion endpoint and model
//   ICLR_LIVE_EMBEDDINGS                     {"hash","vector"} JSONL, or
//   ICLR_LIVE_EMBED_ENDPOINT/_EMBED_MODEL    embedding endpoint
//   ICLR_LIVE_CREDENTIAL_ENV                 credential variable name (ICLR_API_KEY)
//   ICLR_LIVE_CACHE                          cache directory (iclr-live-cache)
inline Outcome live_ordering() {
  const auto csv = env("TRUTHFULQA_CSV");
  const auto endpoint = env("ICLR_LIVE_ENDPOINT");
  const auto model = env("ICLR_LIVE_MODEL");
  const auto vectors = env("ICLR_LIVE_EMBEDDINGS");
  const auto embed_endpoint = env("ICLR_LIVE_EMBED_ENDPOINT");
  const std::string cred = env("ICLR_LIVE_CREDENTIAL_ENV").value_or("ICLR_API_KEY");
  if (!csv || !endpoint || !model || (!vectors && !embed_endpoint) || !env(cred.c_str())) {
    return {Verdict::kSkip, "needs TRUTHFULQA_CSV, ICLR_LIVE_ENDPOINT, ICLR_LIVE_MODEL, "
                            "ICLR_LIVE_EMBEDDINGS or ICLR_LIVE_EMBED_ENDPOINT, and " + cred};
  }
  const std::filesystem::path cache = env("ICLR_LIVE_CACHE").value_or("iclr-live-cache");
  const auto evals = load_csv(*csv);
  const DemoStore store = expand_pairs(evals);

  EmbeddingCache embeddings(cache / "embeddings.jsonl");
  if (vectors) {
    VectorFileSource src(*vectors);
    precompute_embeddings(store, evals, src, embeddings);
  } else {
    HttpEndpointConfig ec;
    ec.endpoint = *embed_endpoint;
    ec.model = env("ICLR_LIVE_EMBED_MODEL").value_or(*model);
    ec.credential_env = cred;
    HttpEmbeddingSource src(ec);
    precompute_embeddings(store, evals, src, embeddings);
  }

  HttpEndpointConfig cfg;
  cfg.endpoint = *endpoint;
  cfg.model = *model;
  cfg.credential_env = cred;
  HttpBackend backend(cfg);
  ScoreCache scores(cache / "scores.jsonl");
  Workspace ws{embeddings, nullptr, scores};

  EvalRun run;
  run.dataset_id = "truthfulqa";
  run.fixed_demos = default_primer();
  run.concurrency = cfg.max_concurrency;
  const std::vector<Method> methods{Method::kFix, Method::kRel, Method::kRelDiv};
  const auto reports = run_ablation(run, methods, evals, store, backend, ws);
  const double fix = reports[0].mc1, rel = reports[1].mc1, div = reports[2].mc1;
  char buf[256];
  std::snprintf(buf, sizeof buf, "MC1 Rel+Div %.4f, Rel %.4f, Fix %.4f (SE %.4f, n=%zu)", div,
                rel, fix, reports[2].mc1_standard_error, reports[2].n_examples);
  return {div > rel && rel > fix ? Verdict::kPass : Verdict::kFail, buf};
}

inline int exit_code(const Outcome& o) {
  switch (o.verdict) {
    case Verdict::kPass:
      return 0;
    case Verdict::kSkip:
      return 77;
    case Verdict::kFail:
      return 1;
  }
  return 1;
}

}  // namespace iclr::acceptance
