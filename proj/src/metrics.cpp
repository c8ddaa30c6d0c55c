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

#include "iclr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iclr/error.hpp"

namespace iclr {
namespace {

bool usable(const ExampleScores& s) {
  return !s.correct_logprobs_ctx.empty() && !s.incorrect_logprobs_ctx.empty();
}

double max_of(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end());
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = max_of(v);
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

template <typename PerExample>
double mean_over_usable(std::span<const ExampleScores> scores, const char* name,
                        PerExample per_example) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& s : scores) {
    if (!usable(s)) continue;
    acc += per_example(s);
    ++n;
  }
  if (n == 0) {
    fail(ErrorCode::kEmptyInput,
         std::string(name) + ": no example with both correct and incorrect answers");
  }
  return acc / static_cast<double>(n);
}

}  // namespace

double mc1(std::span<const ExampleScores> scores) {
  return mean_over_usable(scores, "mc1", [](const ExampleScores& s) {
    return s.correct_logprobs_ctx.front() > max_of(s.incorrect_logprobs_ctx) ? 1.0 : 0.0;
  });
}

double mc2(std::span<const ExampleScores> scores) {
  return mean_over_usable(scores, "mc2", [](const ExampleScores& s) {
    const double best_incorrect = max_of(s.incorrect_logprobs_ctx);
    std::size_t wins = 0;
    for (double c : s.correct_logprobs_ctx) wins += c > best_incorrect ? 1 : 0;
    return static_cast<double>(wins) /
           static_cast<double>(s.correct_logprobs_ctx.size());
  });
}

double mc3(std::span<const ExampleScores> scores) {
  return mean_over_usable(scores, "mc3", [](const ExampleScores& s) {
    return std::exp(log_sum_exp(s.correct_logprobs_ctx) -
                    log_sum_exp(s.incorrect_logprobs_ctx));
  });
}

std::size_t mc_skipped(std::span<const ExampleScores> scores) {
  return static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(),
                    [](const ExampleScores& s) { return !usable(s); }));
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double dpo_term(double a_ctx, double a_bare, std::optional<double> abar_ctx,
                std::optional<double> abar_bare) {
  double margin = a_ctx - a_bare;
  if (abar_ctx && abar_bare) margin -= *abar_ctx - *abar_bare;
  return log_sigmoid(margin);
}

double dpo_aggregate(std::span<const double> terms) {
  if (terms.empty()) fail(ErrorCode::kEmptyInput, "dpo_aggregate: no terms");
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc / static_cast<double>(terms.size());
}

double avg_pairwise_similarity(std::span<const Embedding> embeddings) {
  if (embeddings.size() < 2) {
    fail(ErrorCode::kTooFewItems, "avg_pairwise_similarity needs >= 2 vectors");
  }
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      acc += cosine(embeddings[i], embeddings[j]);
      ++pairs;
    }
  }
  return acc / static_cast<double>(pairs);
}

double binomial_standard_error(double p, std::size_t n) {
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace iclr
