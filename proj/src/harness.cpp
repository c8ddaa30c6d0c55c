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

#include "iclr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "iclr/error.hpp"
#include "iclr/text.hpp"

namespace iclr {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_backend_failure(ErrorCode code) {
  return code == ErrorCode::kBackendUnavailable ||
         code == ErrorCode::kBackendRejected ||
         code == ErrorCode::kTokenizationMismatch;
}

struct ScoreJob {
  std::string prefix;
  std::string target;
  double total = 0.0;
  std::optional<Error> error;
};

class JobTable {
 public:
  std::size_t add(const std::string& prefix, const std::string& target) {
    std::string key = prefix;
    key.push_back('\0');
    key += target;
    auto [it, inserted] = index_.emplace(std::move(key), jobs_.size());
    if (inserted) jobs_.push_back(ScoreJob{prefix, target, 0.0, std::nullopt});
    return it->second;
  }
  std::vector<ScoreJob>& jobs() { return jobs_; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<ScoreJob> jobs_;
};

struct AnswerJobs {
  std::vector<std::size_t> correct_ctx, correct_bare;
  std::vector<std::size_t> incorrect_ctx, incorrect_bare;
};

std::size_t first_match(const std::vector<std::string>& normalized,
                        const std::string& value) {
  return static_cast<std::size_t>(
      std::find(normalized.begin(), normalized.end(), value) - normalized.begin());
}

std::vector<std::string> normalized_all(const std::vector<std::string>& texts) {
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(normalize_text(t));
  return out;
}

double mean_or_nan(std::span<const ExampleScores> scores,
                   double (*metric)(std::span<const ExampleScores>)) {
  try {
    return metric(scores);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEmptyInput) return kNaN;
    throw;
  }
}

double context_similarity(const std::vector<const Demonstration*>& demos,
                          const EmbeddingCache& cache) {
  if (demos.size() < 2) return kNaN;
  std::vector<Embedding> vecs;
  for (const auto* d : demos) {
    auto e = cache.get(d->question);
    if (!e) return kNaN;
    vecs.push_back(std::move(*e));
  }
  return avg_pairwise_similarity(vecs);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void parallel_for(std::size_t n, std::size_t concurrency,
                  std::span<const std::size_t> order,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers = std::clamp<std::size_t>(concurrency, 1, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(order.empty() ? i : order[i]);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
}

EvalOutcome evaluate(const EvalRun& run, std::span<const EvalExample> evals,
                     const DemoStore& store, ScoringBackend& backend,
                     Workspace& ws) {
  RetrieverConfig cfg = run.retriever;
  const Method method = cfg.method;
  const bool use_fixed_demos = method == Method::kFix;

  std::vector<Demonstration> demos(store.demos().begin(), store.demos().end());
  if (use_fixed_demos) {
    std::unordered_set<std::string> known;
    for (const auto& d : demos) known.insert(d.id);
    for (Demonstration d : run.fixed_demos) {
      if (d.id.empty()) d.id = demo_id(d.question, d.answer);
      cfg.fixed_ids.push_back(d.id);
      if (known.insert(d.id).second) demos.push_back(std::move(d));
    }
  }
  cfg.validate();
  run.prompt.validate();
  const DemoStore pool(std::move(demos));

  const bool need_query = method_uses_query(method);
  const bool need_bias = method_uses_bias(method);
  if (need_bias && ws.biases == nullptr) {
    fail(ErrorCode::kMissingBias, std::string("method ") +
                                      std::string(method_name(method)) +
                                      " needs a bias cache");
  }

  // Full candidate table; per-example indexes are row subsets of it.
  std::vector<std::string> ids;
  std::vector<double> matrix;
  std::vector<double> biases;
  const std::size_t dim = need_query ? ws.embeddings.dim() : 0;
  for (const auto& d : pool.demos()) {
    ids.push_back(d.id);
    if (need_query) {
      auto e = ws.embeddings.get(d.question);
      if (!e) fail(ErrorCode::kMissingEmbedding, "no embedding for demo " + d.id);
      matrix.insert(matrix.end(), e->values().begin(), e->values().end());
    }
    double b = 0.0;
    if (need_bias) {
      auto cached = ws.biases->get(d.id);
      if (!cached) fail(ErrorCode::kMissingBias, "no bias for demo " + d.id);
      b = *cached;
    }
    biases.push_back(b);
  }
  const CandidateIndex full(std::move(ids), dim, std::move(matrix), std::move(biases));

  EvalOutcome out;
  JobTable table;
  std::vector<AnswerJobs> answer_jobs(evals.size());

  for (std::size_t e = 0; e < evals.size(); ++e) {
    const EvalExample& ex = evals[e];
    const CandidateView view = leave_one_out(pool, ex.question);
    const CandidateIndex candidates = full.subset(
        std::vector<std::size_t>(view.positions().begin(), view.positions().end()));

    std::optional<Embedding> query;
    if (need_query) {
      query = ws.embeddings.get(ex.question);
      if (!query) {
        fail(ErrorCode::kMissingEmbedding, "no embedding for eval example " + ex.id);
      }
    }
    RetrievedContext ctx;
    if (!candidates.empty() || method == Method::kFix) {
      ctx = retrieve(cfg, candidates,
                     query ? std::optional<std::span<const double>>(query->values())
                           : std::nullopt);
    }

    const std::string question = normalize_text(ex.question);
    std::vector<const Demonstration*> picked;
    std::vector<Demonstration> context;
    RetrievedDemos record{ex.id, {}, {}, kNaN};
    for (std::size_t pos : ctx.positions) {
      const Demonstration& d = pool[candidates.row(pos)];
      if (normalize_text(d.question) == question) {
        fail(ErrorCode::kLeaveOneOutViolation,
             "demo " + d.id + " shares its question with eval example " + ex.id);
      }
      picked.push_back(&d);
      context.push_back(d);
      record.demo_ids.push_back(d.id);
      record.questions.push_back(d.question);
    }
    record.avg_similarity = context_similarity(picked, ws.embeddings);
    out.contexts.push_back(std::move(record));

    const std::string ctx_prefix = format_prompt(run.prompt, context, ex.question);
    const std::string bare_prefix = format_prompt(run.prompt, {}, ex.question);
    AnswerJobs& aj = answer_jobs[e];
    for (const auto& a : ex.correct_answers) {
      const std::string target = answer_continuation(run.prompt, ex.question, a);
      aj.correct_ctx.push_back(table.add(ctx_prefix, target));
      aj.correct_bare.push_back(table.add(bare_prefix, target));
    }
    for (const auto& a : ex.incorrect_answers) {
      const std::string target = answer_continuation(run.prompt, ex.question, a);
      aj.incorrect_ctx.push_back(table.add(ctx_prefix, target));
      aj.incorrect_bare.push_back(table.add(bare_prefix, target));
    }
  }

  auto& jobs = table.jobs();
  std::vector<std::size_t> order(jobs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (run.seed != 0) std::shuffle(order.begin(), order.end(), std::mt19937_64(run.seed));

  const std::string model = backend.model();
  std::atomic<std::size_t> calls{0};
  std::atomic<std::size_t> hits{0};
  const std::size_t workers =
      std::min(std::max<std::size_t>(run.concurrency, 1),
               std::max<std::size_t>(backend.capabilities().max_concurrency, 1));
  parallel_for(jobs.size(), workers, order, [&](std::size_t j) {
    ScoreJob& job = jobs[j];
    if (auto cached = ws.scores.lookup(model, job.prefix, job.target)) {
      hits.fetch_add(1);
      job.total = std::accumulate(cached->begin(), cached->end(), 0.0);
      return;
    }
    try {
      calls.fetch_add(1);
      const CompletionScore cs = score(backend, job.prefix, job.target);
      ws.scores.insert(model, job.prefix, job.target, cs.logprobs());
      job.total = cs.total_logprob;
    } catch (const Error& err) {
      job.error = err;
    }
  });
  out.backend_calls = calls.load();
  out.cache_hits = hits.load();

  auto totals = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> v;
    v.reserve(idx.size());
    for (std::size_t j : idx) v.push_back(jobs[j].total);
    return v;
  };

  MetricsReport& report = out.report;
  std::vector<double> dpo_terms;
  std::optional<Error> first_failure;
  for (std::size_t e = 0; e < evals.size(); ++e) {
    const AnswerJobs& aj = answer_jobs[e];
    std::optional<Error> failure;
    for (const auto* group : {&aj.correct_ctx, &aj.correct_bare, &aj.incorrect_ctx,
                              &aj.incorrect_bare}) {
      for (std::size_t j : *group) {
        if (jobs[j].error && !failure) failure = jobs[j].error;
      }
    }
    if (failure) {
      if (!is_backend_failure(failure->code())) throw *failure;
      if (!first_failure) first_failure = failure;
      report.dropped_ids.push_back(evals[e].id);
      continue;
    }
    ExampleScores s{evals[e].id, totals(aj.correct_ctx), totals(aj.incorrect_ctx),
                    totals(aj.correct_bare), totals(aj.incorrect_bare)};

    const EvalExample& ex = evals[e];
    const auto correct_norm = normalized_all(ex.correct_answers);
    const auto incorrect_norm = normalized_all(ex.incorrect_answers);
    for (const auto& t : expand_triplets(std::span<const EvalExample>(&ex, 1))) {
      const std::size_t c = first_match(correct_norm, normalize_text(t.correct));
      const std::size_t i = first_match(incorrect_norm, normalize_text(t.incorrect));
      dpo_terms.push_back(dpo_term(s.correct_logprobs_ctx[c], s.correct_logprobs_bare[c],
                                   s.incorrect_logprobs_ctx[i],
                                   s.incorrect_logprobs_bare[i]));
    }
    out.scores.push_back(std::move(s));
  }
  if (!evals.empty() && out.scores.empty() && first_failure) {
    throw Error(first_failure->code(),
                std::string("every eval example failed; first error: ") +
                    first_failure->what());
  }

  report.method = std::string(method_name(method));
  report.k = cfg.k;
  report.lambda_d = cfg.lambda_d;
  report.lambda_b = cfg.lambda_b;
  report.mc1 = mean_or_nan(out.scores, &mc1);
  report.mc2 = mean_or_nan(out.scores, &mc2);
  report.mc3 = mean_or_nan(out.scores, &mc3);
  report.dpo = dpo_terms.empty() ? kNaN : dpo_aggregate(dpo_terms);
  report.n_examples = out.scores.size();
  report.n_triplets = dpo_terms.size();
  report.n_mc_skipped = mc_skipped(out.scores);
  report.n_dropped = report.dropped_ids.size();
  report.mc1_standard_error = binomial_standard_error(
      report.mc1, report.n_examples - report.n_mc_skipped);
  return out;
}

std::vector<MetricsReport> run_ablation(const EvalRun& run,
                                        std::span<const Method> methods,
                                        std::span<const EvalExample> evals,
                                        const DemoStore& store,
                                        ScoringBackend& backend, Workspace& ws) {
  if (methods.empty()) fail(ErrorCode::kInvalidArgument, "no methods to run");
  std::vector<MetricsReport> reports;
  for (Method m : methods) {
    EvalRun r = run;
    r.retriever.method = m;
    reports.push_back(evaluate(r, evals, store, backend, ws).report);
  }
  return reports;
}

std::vector<SweepRow> diversity_sweep(const EvalRun& run,
                                      std::span<const double> lambda_d_grid,
                                      std::span<const EvalExample> evals,
                                      const DemoStore& store,
                                      ScoringBackend& backend, Workspace& ws) {
  for (double l : lambda_d_grid) {
    if (!(l >= 0.0 && l <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "sweep lambda_d values must be in [0, 1]");
    }
  }
  std::vector<SweepRow> rows;
  for (double l : lambda_d_grid) {
    EvalRun r = run;
    r.retriever.method = Method::kRelDivBias;
    r.retriever.lambda_d = l;
    const EvalOutcome o = evaluate(r, evals, store, backend, ws);
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& c : o.contexts) {
      if (std::isnan(c.avg_similarity)) continue;
      acc += c.avg_similarity;
      ++n;
    }
    rows.push_back({l, n == 0 ? kNaN : acc / static_cast<double>(n), o.report.dpo});
  }
  return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
  std::string out = "lambda_d,avg_similarity,dpo\n";
  for (const auto& r : rows) {
    out += format_number(r.lambda_d) + "," + format_number(r.avg_similarity) + "," +
           format_number(r.dpo) + "\n";
  }
  return out;
}

std::string sweep_to_svg(std::span<const SweepRow> rows) {
  constexpr double kWidth = 480, kHeight = 360, kMargin = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& r : rows) {
    if (!std::isfinite(r.avg_similarity) || !std::isfinite(r.dpo)) continue;
    xmin = std::min(xmin, r.avg_similarity);
    xmax = std::max(xmax, r.avg_similarity);
    ymin = std::min(ymin, r.dpo);
    ymax = std::max(ymax, r.dpo);
  }
  if (xmin > xmax) xmin = xmax = ymin = ymax = 0.0;
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
  auto sx = [&](double x) {
    return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin);
  };
  auto sy = [&](double y) {
    return kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin);
  };
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<line x1=\"50\" y1=\"310\" x2=\"430\" y2=\"310\" stroke=\"black\"/>\n"
      "<line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"310\" stroke=\"black\"/>\n"
      "<text x=\"240\" y=\"345\" text-anchor=\"middle\" font-size=\"12\">"
      "average pairwise cosine similarity</text>\n"
      "<text x=\"15\" y=\"180\" text-anchor=\"middle\" font-size=\"12\" "
      "transform=\"rotate(-90 15 180)\">DPO</text>\n";
  svg += "<text x=\"50\" y=\"325\" font-size=\"10\">" + format_number(xmin) + "</text>\n";
  svg += "<text x=\"430\" y=\"325\" text-anchor=\"end\" font-size=\"10\">" +
         format_number(xmax) + "</text>\n";
  svg += "<text x=\"45\" y=\"310\" text-anchor=\"end\" font-size=\"10\">" +
         format_number(ymin) + "</text>\n";
  svg += "<text x=\"45\" y=\"55\" text-anchor=\"end\" font-size=\"10\">" +
         format_number(ymax) + "</text>\n";
  for (const auto& r : rows) {
    if (!std::isfinite(r.avg_similarity) || !std::isfinite(r.dpo)) continue;
    svg += "<circle cx=\"" + format_number(sx(r.avg_similarity)) + "\" cy=\"" +
           format_number(sy(r.dpo)) + "\" r=\"4\" fill=\"steelblue\"><title>lambda_d=" +
           format_number(r.lambda_d) + "</title></circle>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<TextToEmbed> missing_embeddings(const DemoStore& store,
                                            std::span<const EvalExample> evals,
                                            const EmbeddingCache& cache) {
  std::vector<TextToEmbed> out;
  std::unordered_set<std::string> seen;
  auto consider = [&](const std::string& text) {
    std::string hash = text_hash(text);
    if (!seen.insert(hash).second) return;
    if (cache.get_by_hash(hash)) return;
    out.push_back({std::move(hash), normalize_text(text)});
  };
  for (const auto& d : store.demos()) consider(d.question);
  for (const auto& e : evals) consider(e.question);
  return out;
}

std::size_t precompute_embeddings(const DemoStore& store,
                                  std::span<const EvalExample> evals,
                                  EmbeddingSource& source,
                                  EmbeddingCache& cache) {
  std::size_t calls = 0;
  std::size_t dim = cache.dim();
  for (const auto& item : missing_embeddings(store, evals, cache)) {
    ++calls;
    std::vector<double> v = source.embed(item.text);
    if (dim == 0) dim = v.size();
    if (v.empty() || v.size() != dim) {
      fail(ErrorCode::kEmbeddingSourceError,
           "text " + item.hash + ": source returned dimension " +
               std::to_string(v.size()) + ", expected " + std::to_string(dim));
    }
    try {
      cache.put(item.text, v);
    } catch (const Error& e) {
      fail(ErrorCode::kEmbeddingSourceError, "text " + item.hash + ": " + e.what());
    }
  }
  return calls;
}

std::size_t precompute_biases(const DemoStore& store, ScoringBackend& backend,
                              const PromptTemplate& tmpl, BiasCache& cache,
                              std::size_t concurrency) {
  tmpl.validate();
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!cache.get(store[i].id)) todo.push_back(i);
  }
  std::vector<std::optional<Error>> errors(todo.size());
  const std::size_t workers =
      std::min(std::max<std::size_t>(concurrency, 1),
               std::max<std::size_t>(backend.capabilities().max_concurrency, 1));
  parallel_for(todo.size(), workers, {}, [&](std::size_t t) {
    const Demonstration& d = store[todo[t]];
    try {
      cache.put(d.id, quality_bias(backend, d, tmpl));
    } catch (const Error& e) {
      errors[t] = e;
    }
  });
  for (std::size_t t = 0; t < todo.size(); ++t) {
    if (errors[t]) {
      throw Error(errors[t]->code(),
                  "demo " + store[todo[t]].id + ": " + errors[t]->what());
    }
  }
  return todo.size();
}

}  // namespace iclr
