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

#include "synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>


namespace iclr::testing {

CandidateIndex Instance::index() const {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = "c" + std::to_string(i);
  return CandidateIndex(std::move(ids), d, rows, biases);
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(d);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (auto& x : v) {
      x = g(rng);
      sq += x * x;
    }
  } while (sq < 1e-6);
  const Embedding e = normalize(v);
  return {e.values().begin(), e.values().end()};
}

Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t d,
                         double bias_lo, double bias_hi) {
  Instance inst;
  inst.n = n;
  inst.d = d;
  std::uniform_real_distribution<double> b(bias_lo, bias_hi);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = random_unit(rng, d);
    inst.rows.insert(inst.rows.end(), row.begin(), row.end());
    inst.biases.push_back(b(rng));
  }
  inst.query = random_unit(rng, d);
  return inst;
}

namespace {

double row_dot(const Instance& inst, std::size_t i, const double* q) {
  double acc = 0.0;
  for (std::size_t t = 0; t < inst.d; ++t) acc += inst.rows[i * inst.d + t] * q[t];
  return acc;
}

}  // namespace

std::vector<std::size_t> oracle_greedy(const Instance& inst, std::size_t k,
                                       double lambda_d, double lambda_b) {
  std::vector<std::size_t> picked;
  const std::size_t target = std::min(k, inst.n);
  while (picked.size() < target) {
    std::size_t best = inst.n;
    double best_score = 0.0;
    for (std::size_t i = 0; i < inst.n; ++i) {
      if (std::find(picked.begin(), picked.end(), i) != picked.end()) continue;
      const double v = lambda_b * row_dot(inst, i, inst.query.data()) +
                       (1.0 - lambda_b) * inst.biases[i];
      double score = v;
      if (!picked.empty()) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j : picked) {
          m = std::max(m, row_dot(inst, i, inst.rows.data() + j * inst.d));
        }
        score = lambda_d * v - (1.0 - lambda_d) * m;
      }
      if (best == inst.n || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    picked.push_back(best);
  }
  return picked;
}

std::vector<std::size_t> oracle_top_k_cosine(const Instance& inst, std::size_t k) {
  std::vector<double> cos(inst.n);
  double qn = 0.0;
  for (double x : inst.query) qn += x * x;
  qn = std::sqrt(qn);
  for (std::size_t i = 0; i < inst.n; ++i) {
    double rn = 0.0;
    for (std::size_t t = 0; t < inst.d; ++t) rn += inst.rows[i * inst.d + t] * inst.rows[i * inst.d + t];
    cos[i] = row_dot(inst, i, inst.query.data()) / (qn * std::sqrt(rn));
  }
  std::vector<std::size_t> order(inst.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cos[a] != cos[b]) return cos[a] > cos[b];
    return a < b;
  });
  order.resize(std::min(k, inst.n));
  return order;
}

double oracle_avg_similarity(const Instance& inst, const std::vector<std::size_t>& picks) {
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < picks.size(); ++a) {
    for (std::size_t b = a + 1; b < picks.size(); ++b) {
      sum += row_dot(inst, picks[a], inst.rows.data() + picks[b] * inst.d);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

namespace {

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<RawRecord> shared_question_records(std::mt19937_64& rng,
                                               std::size_t n_questions) {
  std::uniform_int_distribution<int> copies(1, 3);
  std::uniform_int_distribution<int> n_correct(1, 3);
  std::uniform_int_distribution<int> n_incorrect(0, 3);
  std::vector<RawRecord> out;
  for (std::size_t q = 0; q < n_questions; ++q) {
    // Every fifth question carries an accent written composed or decomposed.
    const std::string stem = q % 5 == 0 ? "What does the café on street " : "What is fact ";
    const std::string stem_nfd = q % 5 == 0 ? "What does the cafe\xCC\x81 on street " : stem;
    const int c = copies(rng);
    for (int copy = 0; copy < c; ++copy) {
      RawRecord r;
      const std::string body = std::to_string(q) + " say?";
      switch (copy) {
        case 0: r.question = stem + body; break;
        case 1: r.question = "  " + stem_nfd + body + "\t"; break;
        default: r.question = stem_nfd + body + "\n"; break;
      }
      const int nc = n_correct(rng);
      for (int a = 0; a < nc; ++a) {
        r.correct_answers.push_back("Answer " + std::to_string(q) + "." + std::to_string(a));
      }
      const int ni = n_incorrect(rng);
      for (int a = 0; a < ni; ++a) {
        r.incorrect_answers.push_back("Wrong " + std::to_string(q) + "." + std::to_string(a));
      }
      out.push_back(std::move(r));
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

void embed_all(std::mt19937_64& rng, std::size_t d, const DemoStore& store,
               const std::vector<EvalExample>& evals, EmbeddingCache& cache) {
  for (const auto& demo : store.demos()) {
    if (!cache.contains(demo.question)) cache.put(demo.question, random_unit(rng, d));
  }
  for (const auto& e : evals) {
    if (!cache.contains(e.question)) cache.put(e.question, random_unit(rng, d));
  }
}

namespace {

std::string two_digits(std::size_t v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

std::string margin_text(double m) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, m, std::chars_format::fixed, 3);
  return std::string(buf, res.ptr);
}

}  // namespace

ClusterCorpus cluster_corpus(std::uint64_t seed, std::size_t n_clusters,
                             std::size_t per_cluster, std::size_t n_queries,
                             std::size_t mix, EmbeddingCache& cache) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.01);
  const std::size_t d = n_clusters + 4;
  ClusterCorpus corpus;

  std::vector<RawRecord> demo_rows;
  std::vector<std::vector<double>> demo_vecs;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    for (std::size_t i = 0; i < per_cluster; ++i) {
      RawRecord r;
      r.question = "[c" + two_digits(c) + "] Variant " + std::to_string(i) +
                   " of the topic " + std::to_string(c) + " question?";
      r.correct_answers = {"Topic " + std::to_string(c) + " answer " + std::to_string(i)};
      std::vector<double> v(d);
      for (auto& x : v) x = noise(rng);
      v[c] += 1.0;
      demo_rows.push_back(std::move(r));
      demo_vecs.push_back(std::move(v));
    }
  }
  corpus.demo_examples = build_eval_set(demo_rows);
  corpus.store = expand_pairs(corpus.demo_examples);
  for (std::size_t i = 0; i < demo_rows.size(); ++i) {
    cache.put(demo_rows[i].question, demo_vecs[i]);
  }

  std::vector<RawRecord> query_rows;
  std::vector<std::size_t> clusters(n_clusters);
  std::iota(clusters.begin(), clusters.end(), std::size_t{0});
  for (std::size_t q = 0; q < n_queries; ++q) {
    std::shuffle(clusters.begin(), clusters.end(), rng);
    std::vector<double> v(d);
    for (auto& x : v) x = noise(rng);
    for (std::size_t r = 0; r < mix; ++r) {
      v[clusters[r]] += 1.0 - 0.1 * static_cast<double>(r);
    }
    const double margin =
        0.5 + 4.5 * static_cast<double>(q) / static_cast<double>(std::max<std::size_t>(1, n_queries - 1));
    RawRecord row;
    row.question = "Query " + std::to_string(q) + " spans which topics?";
    row.correct_answers = {"True fact for query " + std::to_string(q)};
    row.incorrect_answers = {"False claim with margin " + margin_text(margin)};
    cache.put(row.question, v);
    query_rows.push_back(std::move(row));
  }
  corpus.evals = build_eval_set(query_rows);
  return corpus;
}

std::size_t distinct_cluster_tags(std::string_view prompt) {
  std::set<std::string_view> tags;
  for (std::size_t pos = prompt.find("[c"); pos != std::string_view::npos;
       pos = prompt.find("[c", pos + 1)) {
    if (pos + 5 <= prompt.size() && prompt[pos + 4] == ']') tags.insert(prompt.substr(pos, 5));
  }
  return tags.size();
}

CompletionScore cluster_reward_score(std::string_view prefix, std::string_view target,
                                     double alpha) {
  const auto words = whitespace_tokenize(target);
  double boost = 0.0;
  const auto start = target.find_first_not_of(" \t\n");
  const std::string_view t = start == std::string_view::npos ? "" : target.substr(start);
  if (t.starts_with("True")) {
    boost = alpha * static_cast<double>(distinct_cluster_tags(prefix));
  } else if (t.starts_with("False")) {
    const auto last = t.find_last_of(' ');
    double m = 0.0;
    std::from_chars(t.data() + last + 1, t.data() + t.size(), m);
    boost = m;
  }
  std::vector<TokenScore> tokens;
  const double per = -2.0 + boost / static_cast<double>(words.size());
  for (const auto& w : words) tokens.push_back({w, std::min(per, 0.0)});
  return CompletionScore::from_tokens(std::move(tokens));
}

}  // namespace iclr::testing
