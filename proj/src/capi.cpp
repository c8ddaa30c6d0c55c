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

#include "iclr/iclr.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "iclr/caches.hpp"
#include "iclr/core.hpp"
#include "iclr/dataset_io.hpp"
#include "iclr/error.hpp"
#include "iclr/harness.hpp"
#include "iclr/http_backend.hpp"
#include "iclr/llm.hpp"
#include "iclr/metrics.hpp"
#include "iclr/retrieval.hpp"
#include "iclr/score_cache.hpp"
#include "iclr/text.hpp"
#include "json.hpp"

struct iclr_dataset {
  std::vector<iclr::RawRecord> records;
  std::vector<iclr::EvalExample> evals;
  iclr::DemoStore store;
  std::size_t n_triplets = 0;
};

struct iclr_backend {
  std::unique_ptr<iclr::ScoringBackend> impl;
  iclr::MockBackend* mock = nullptr;
};

struct iclr_workspace {
  std::string model;
  std::unique_ptr<iclr::EmbeddingCache> embeddings;
  std::unique_ptr<iclr::BiasCache> biases;
  std::unique_ptr<iclr::ScoreCache> scores;

  iclr::Workspace view() { return {*embeddings, biases.get(), *scores}; }
};

struct iclr_report {
  std::vector<iclr::MetricsReport> reports;
  std::vector<iclr::RetrievedDemos> contexts;
};

struct iclr_sweep {
  std::vector<iclr::SweepRow> rows;
};

struct iclr_score_sink {
  std::vector<iclr::TokenScore> tokens;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

iclr_status to_status(iclr::ErrorCode code) {
  return static_cast<iclr_status>(static_cast<int>(code));
}

template <typename Fn>
iclr_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return ICLR_OK;
  } catch (const iclr::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const json::exception& e) {
    g_last_error = e.what();
    return ICLR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ICLR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return ICLR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) iclr::fail(iclr::ErrorCode::kInvalidArgument, what);
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

iclr::EvalRun parse_run(const char* run_json) {
  iclr::EvalRun run;
  if (run_json == nullptr || *run_json == '\0') return run;
  const json j = json::parse(run_json);
  require(j.is_object(), "run config must be a JSON object");
  auto& r = run.retriever;
  if (j.contains("method")) r.method = iclr::parse_method(j["method"].get<std::string>());
  r.k = j.value("k", r.k);
  r.lambda_d = j.value("lambda_d", r.lambda_d);
  r.lambda_b = j.value("lambda_b", r.lambda_b);
  r.rescale_bias = j.value("rescale_bias", r.rescale_bias);
  if (j.contains("fixed_ids")) r.fixed_ids = j["fixed_ids"].get<std::vector<std::string>>();
  run.concurrency = j.value("concurrency", run.concurrency);
  run.seed = j.value("seed", run.seed);
  run.dataset_id = j.value("dataset_id", std::string{});
  if (j.contains("template")) run.prompt = iclr::PromptTemplate::from_json(j["template"].dump());
  if (j.contains("fixed_demos")) {
    for (const auto& d : j["fixed_demos"]) {
      iclr::Demonstration demo;
      demo.question = d.at("question").get<std::string>();
      demo.answer = d.at("answer").get<std::string>();
      demo.id = d.contains("id") ? d["id"].get<std::string>()
                                 : iclr::demo_id(demo.question, demo.answer);
      demo.source_example_id = "fixed";
      run.fixed_demos.push_back(std::move(demo));
    }
  }
  require(run.concurrency >= 1, "concurrency must be >= 1");
  return run;
}

}  // namespace

extern "C" {

const char* iclr_version(void) { return "0.1.0"; }

const char* iclr_last_error(void) { return g_last_error.c_str(); }

const char* iclr_status_name(iclr_status status) {
  static thread_local std::string name;
  name = std::string(iclr::to_string(static_cast<iclr::ErrorCode>(status)));
  return name.c_str();
}

void iclr_string_free(char* s) { std::free(s); }

iclr_status iclr_normalize(const double* v, size_t dim, double* out) {
  return guarded([&] {
    require(v != nullptr && out != nullptr, "null argument");
    const auto e = iclr::normalize(std::span<const double>(v, dim));
    std::copy(e.values().begin(), e.values().end(), out);
  });
}

iclr_status iclr_cosine(const double* u, const double* v, size_t dim, double* out) {
  return guarded([&] {
    require(u != nullptr && v != nullptr && out != nullptr, "null argument");
    *out = iclr::cosine(std::span<const double>(u, dim), std::span<const double>(v, dim));
  });
}

iclr_status iclr_mmr_select(const double* embeddings, size_t n, size_t dim,
                            const double* biases, const double* query, size_t k,
                            double lambda_d, double lambda_b,
                            size_t* out_positions, double* out_scores,
                            size_t* out_count) {
  return guarded([&] {
    require(out_count != nullptr, "null out_count");
    require(n == 0 || (embeddings != nullptr && query != nullptr), "null argument");
    std::vector<std::string> ids(n);
    for (size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
    std::vector<double> b = biases ? std::vector<double>(biases, biases + n)
                                   : std::vector<double>(n, 0.0);
    const iclr::CandidateIndex index(
        std::move(ids), dim,
        n == 0 ? std::vector<double>{} : std::vector<double>(embeddings, embeddings + n * dim),
        std::move(b));
    const auto ctx = iclr::mmr_select(index, std::span<const double>(query, dim), k,
                                      lambda_d, lambda_b);
    for (size_t i = 0; i < ctx.positions.size(); ++i) {
      if (out_positions) out_positions[i] = ctx.positions[i];
      if (out_scores) out_scores[i] = ctx.scores[i];
    }
    *out_count = ctx.positions.size();
  });
}

iclr_status iclr_dpo_term(double a_ctx, double a_bare, const double* abar_ctx,
                          const double* abar_bare, double* out) {
  return guarded([&] {
    require(out != nullptr, "null out");
    std::optional<double> ic, ib;
    if (abar_ctx && abar_bare) {
      ic = *abar_ctx;
      ib = *abar_bare;
    }
    *out = iclr::dpo_term(a_ctx, a_bare, ic, ib);
  });
}

iclr_status iclr_avg_pairwise_similarity(const double* embeddings, size_t n,
                                         size_t dim, double* out) {
  return guarded([&] {
    require(out != nullptr && (n == 0 || embeddings != nullptr), "null argument");
    std::vector<iclr::Embedding> vecs;
    for (size_t i = 0; i < n; ++i) {
      vecs.emplace_back(std::vector<double>(embeddings + i * dim, embeddings + (i + 1) * dim));
    }
    *out = iclr::avg_pairwise_similarity(vecs);
  });
}

iclr_status iclr_dataset_load(const char* path, const char* format, iclr_dataset** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    const std::filesystem::path p(path);
    if (!std::filesystem::exists(p)) {
      iclr::fail(iclr::ErrorCode::kIoError, std::string("no such file: ") + path);
    }
    const auto fmt = format ? iclr::parse_dataset_format(format)
                            : iclr::detect_dataset_format(p);
    auto ds = std::make_unique<iclr_dataset>();
    ds->records = iclr::read_records(p, fmt);
    ds->evals = iclr::build_eval_set(ds->records);
    ds->store = iclr::expand_pairs(ds->evals);
    ds->n_triplets = iclr::expand_triplets(ds->evals).size();
    *out = ds.release();
  });
}

void iclr_dataset_free(iclr_dataset* ds) { delete ds; }

iclr_status iclr_dataset_counts(const iclr_dataset* ds, size_t* examples,
                                size_t* pairs, size_t* triplets) {
  return guarded([&] {
    require(ds != nullptr, "null dataset");
    if (examples) *examples = ds->evals.size();
    if (pairs) *pairs = ds->store.size();
    if (triplets) *triplets = ds->n_triplets;
  });
}

iclr_status iclr_dataset_to_jsonl(const iclr_dataset* ds, char** out) {
  return guarded([&] {
    require(ds != nullptr && out != nullptr, "null argument");
    *out = dup(iclr::to_canonical_jsonl(ds->records));
  });
}

iclr_status iclr_dataset_hash(const iclr_dataset* ds, char** out) {
  return guarded([&] {
    require(ds != nullptr && out != nullptr, "null argument");
    *out = dup(iclr::sha256_hex(iclr::to_canonical_jsonl(ds->records)));
  });
}

void iclr_score_sink_push(iclr_score_sink* sink, const char* token, double logprob) {
  if (sink == nullptr) return;
  sink->tokens.push_back({token ? token : "", logprob});
}

iclr_status iclr_backend_create_mock(double fallback_per_token, iclr_backend** out) {
  return guarded([&] {
    require(out != nullptr, "null out");
    auto b = std::make_unique<iclr_backend>();
    auto mock = std::make_unique<iclr::MockBackend>(fallback_per_token);
    b->mock = mock.get();
    b->impl = std::move(mock);
    *out = b.release();
  });
}

iclr_status iclr_backend_mock_add_fixture(iclr_backend* b, const char* prefix,
                                          const char* target, const double* logprobs,
                                          size_t n) {
  return guarded([&] {
    require(b != nullptr && b->mock != nullptr, "not a mock backend");
    require(prefix != nullptr && target != nullptr, "null argument");
    require(n == 0 || logprobs != nullptr, "null logprobs");
    b->mock->add_fixture(prefix, target, std::vector<double>(logprobs, logprobs + n));
  });
}

iclr_status iclr_backend_create_http(const char* config_json, iclr_backend** out) {
  return guarded([&] {
    require(config_json != nullptr && out != nullptr, "null argument");
    auto b = std::make_unique<iclr_backend>();
    b->impl = std::make_unique<iclr::HttpBackend>(
        iclr::HttpEndpointConfig::from_json(config_json));
    *out = b.release();
  });
}

iclr_status iclr_backend_create_callback(iclr_score_fn fn, void* user, const char* model,
                                         size_t max_concurrency, iclr_backend** out) {
  return guarded([&] {
    require(fn != nullptr && out != nullptr, "null argument");
    auto b = std::make_unique<iclr_backend>();
    b->impl = std::make_unique<iclr::CallbackBackend>(
        [fn, user](std::string_view prefix, std::string_view target) {
          iclr_score_sink sink;
          const std::string p(prefix), t(target);
          const int rc = fn(user, p.c_str(), t.c_str(), &sink);
          if (rc == 1) iclr::fail(iclr::ErrorCode::kBackendUnavailable, "callback failed");
          if (rc != 0) iclr::fail(iclr::ErrorCode::kBackendRejected, "callback rejected");
          return iclr::CompletionScore::from_tokens(std::move(sink.tokens));
        },
        model ? model : "callback", max_concurrency == 0 ? 1 : max_concurrency);
    *out = b.release();
  });
}

void iclr_backend_free(iclr_backend* b) { delete b; }

iclr_status iclr_backend_score(iclr_backend* b, const char* prefix, const char* target,
                               double* total, size_t* n_tokens) {
  return guarded([&] {
    require(b != nullptr && prefix != nullptr && target != nullptr, "null argument");
    const auto cs = iclr::score(*b->impl, prefix, target);
    if (total) *total = cs.total_logprob;
    if (n_tokens) *n_tokens = cs.tokens.size();
  });
}

iclr_status iclr_backend_calls(const iclr_backend* b, size_t* out) {
  return guarded([&] {
    require(b != nullptr && out != nullptr, "null argument");
    if (b->mock) {
      *out = b->mock->calls();
    } else if (auto* cb = dynamic_cast<const iclr::CallbackBackend*>(b->impl.get())) {
      *out = cb->calls();
    } else if (auto* http = dynamic_cast<const iclr::HttpBackend*>(b->impl.get())) {
      *out = http->requests_sent();
    } else {
      *out = 0;
    }
  });
}

iclr_status iclr_workspace_open(const char* cache_dir, const char* model,
                                iclr_workspace** out) {
  return guarded([&] {
    require(out != nullptr && model != nullptr, "null argument");
    auto ws = std::make_unique<iclr_workspace>();
    ws->model = model;
    if (cache_dir != nullptr) {
      const std::filesystem::path dir(cache_dir);
      std::filesystem::create_directories(dir);
      ws->embeddings = std::make_unique<iclr::EmbeddingCache>(dir / "embeddings.jsonl");
      ws->biases = std::make_unique<iclr::BiasCache>(model, dir / "biases.jsonl");
      ws->scores = std::make_unique<iclr::ScoreCache>(dir / "scores.jsonl");
    } else {
      ws->embeddings = std::make_unique<iclr::EmbeddingCache>();
      ws->biases = std::make_unique<iclr::BiasCache>(model);
      ws->scores = std::make_unique<iclr::ScoreCache>();
    }
    *out = ws.release();
  });
}

void iclr_workspace_free(iclr_workspace* ws) { delete ws; }

iclr_status iclr_workspace_embed_from_file(iclr_workspace* ws, const iclr_dataset* ds,
                                           const char* path, size_t* source_calls) {
  return guarded([&] {
    require(ws != nullptr && ds != nullptr && path != nullptr, "null argument");
    iclr::VectorFileSource source(path);
    const auto calls = iclr::precompute_embeddings(ds->store, ds->evals, source,
                                                   *ws->embeddings);
    if (source_calls) *source_calls = calls;
  });
}

iclr_status iclr_workspace_embed_http(iclr_workspace* ws, const iclr_dataset* ds,
                                      const char* config_json, size_t* source_calls) {
  return guarded([&] {
    require(ws != nullptr && ds != nullptr && config_json != nullptr, "null argument");
    iclr::HttpEmbeddingSource source(iclr::HttpEndpointConfig::from_json(config_json));
    const auto calls = iclr::precompute_embeddings(ds->store, ds->evals, source,
                                                   *ws->embeddings);
    if (source_calls) *source_calls = calls;
  });
}

iclr_status iclr_workspace_export_missing(iclr_workspace* ws, const iclr_dataset* ds,
                                          const char* path, size_t* n_missing) {
  return guarded([&] {
    require(ws != nullptr && ds != nullptr && path != nullptr, "null argument");
    const auto missing = iclr::missing_embeddings(ds->store, ds->evals, *ws->embeddings);
    std::ofstream out(path, std::ios::binary);
    if (!out) iclr::fail(iclr::ErrorCode::kIoError, std::string("cannot write ") + path);
    for (const auto& m : missing) {
      nlohmann::ordered_json j;
      j["hash"] = m.hash;
      j["text"] = m.text;
      out << j.dump() << '\n';
    }
    if (n_missing) *n_missing = missing.size();
  });
}

iclr_status iclr_workspace_compute_biases(iclr_workspace* ws, const iclr_dataset* ds,
                                          iclr_backend* b, const char* template_json,
                                          size_t concurrency, size_t* backend_calls) {
  return guarded([&] {
    require(ws != nullptr && ds != nullptr && b != nullptr, "null argument");
    require(b->impl->model() == ws->model,
            "backend model differs from the workspace model");
    const auto tmpl = template_json ? iclr::PromptTemplate::from_json(template_json)
                                    : iclr::PromptTemplate{};
    const auto calls =
        iclr::precompute_biases(ds->store, *b->impl, tmpl, *ws->biases, concurrency);
    if (backend_calls) *backend_calls = calls;
  });
}

iclr_status iclr_workspace_cache_stats(const iclr_workspace* ws, size_t* score_hits,
                                       size_t* score_misses) {
  return guarded([&] {
    require(ws != nullptr, "null workspace");
    if (score_hits) *score_hits = ws->scores->hits();
    if (score_misses) *score_misses = ws->scores->misses();
  });
}

iclr_status iclr_evaluate(iclr_workspace* ws, const iclr_dataset* ds, iclr_backend* b,
                          const char* run_json, iclr_report** out) {
  return guarded([&] {
    require(ws != nullptr && ds != nullptr && b != nullptr && out != nullptr,
            "null argument");
    const auto run = parse_run(run_json);
    auto view = ws->view();
    auto outcome = iclr::evaluate(run, ds->evals, ds->store, *b->impl, view);
    auto r = std::make_unique<iclr_report>();
    r->reports.push_back(std::move(outcome.report));
    r->contexts = std::move(outcome.contexts);
    *out = r.release();
  });
}

iclr_status iclr_ablate(iclr_workspace* ws, const iclr_dataset* ds, iclr_backend* b,
                        const char* run_json, const char* methods, iclr_report** out) {
  return guarded([&] {
    require(ws != nullptr && ds != nullptr && b != nullptr && out != nullptr,
            "null argument");
    std::vector<iclr::Method> list;
    if (methods == nullptr || *methods == '\0') {
      list.assign(std::begin(iclr::kAllMethods), std::end(iclr::kAllMethods));
    } else {
      std::string_view rest(methods);
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto name = iclr::trim(rest.substr(0, comma));
        if (!name.empty()) list.push_back(iclr::parse_method(name));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
    }
    const auto run = parse_run(run_json);
    auto view = ws->view();
    auto r = std::make_unique<iclr_report>();
    r->reports = iclr::run_ablation(run, list, ds->evals, ds->store, *b->impl, view);
    *out = r.release();
  });
}

void iclr_report_free(iclr_report* r) { delete r; }

iclr_status iclr_report_json(const iclr_report* r, char** out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "null argument");
    *out = dup(r->reports.size() == 1 ? r->reports.front().to_json()
                                      : iclr::to_json(r->reports));
  });
}

iclr_status iclr_report_markdown(const iclr_report* r, char** out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "null argument");
    *out = dup(iclr::to_markdown(r->reports));
  });
}

iclr_status iclr_report_dropped(const iclr_report* r, size_t* out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "null argument");
    size_t n = 0;
    for (const auto& rep : r->reports) n += rep.n_dropped;
    *out = n;
  });
}

iclr_status iclr_report_contexts_json(const iclr_report* r, char** out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "null argument");
    json arr = json::array();
    for (const auto& c : r->contexts) {
      arr.push_back({{"example_id", c.example_id}, {"demo_ids", c.demo_ids}});
    }
    *out = dup(arr.dump());
  });
}

iclr_status iclr_sweep_run(iclr_workspace* ws, const iclr_dataset* ds, iclr_backend* b,
                           const char* run_json, const double* grid, size_t n,
                           iclr_sweep** out) {
  return guarded([&] {
    require(ws != nullptr && ds != nullptr && b != nullptr && out != nullptr,
            "null argument");
    require(n == 0 || grid != nullptr, "null grid");
    const auto run = parse_run(run_json);
    auto view = ws->view();
    auto s = std::make_unique<iclr_sweep>();
    s->rows = iclr::diversity_sweep(run, std::span<const double>(grid, n), ds->evals,
                                    ds->store, *b->impl, view);
    *out = s.release();
  });
}

void iclr_sweep_free(iclr_sweep* s) { delete s; }

iclr_status iclr_sweep_csv(const iclr_sweep* s, char** out) {
  return guarded([&] {
    require(s != nullptr && out != nullptr, "null argument");
    *out = dup(iclr::sweep_to_csv(s->rows));
  });
}

iclr_status iclr_sweep_svg(const iclr_sweep* s, char** out) {
  return guarded([&] {
    require(s != nullptr && out != nullptr, "null argument");
    *out = dup(iclr::sweep_to_svg(s->rows));
  });
}

iclr_status iclr_file_sha256(const char* path, char** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = dup(iclr::sha256_file(path));
  });
}

iclr_status iclr_default_primer_json(char** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& d : iclr::default_primer()) {
      arr.push_back({{"id", d.id}, {"question", d.question}, {"answer", d.answer}});
    }
    *out = dup(arr.dump());
  });
}

}  // extern "C"
