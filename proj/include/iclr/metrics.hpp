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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iclr/core.hpp"

namespace iclr {

/// Total answer log-probabilities for one eval example, with the retrieved
/// context and without it. Bare lists align positionally with ctx lists.
struct ExampleScores {
  std::string example_id;
  std::vector<double> correct_logprobs_ctx;
  std::vector<double> incorrect_logprobs_ctx;
  std::vector<double> correct_logprobs_bare;
  std::vector<double> incorrect_logprobs_bare;
};

// The MC metrics skip examples with no incorrect answers and throw
// EmptyInput when nothing is left. A tie counts as a failure.

/// Fraction of examples whose first correct answer beats every incorrect one.
double mc1(std::span<const ExampleScores> scores);

/// Mean fraction of correct answers beating every incorrect answer.
double mc2(std::span<const ExampleScores> scores);

/// Mean of sum(p(correct)) / sum(p(incorrect)), with context.
double mc3(std::span<const ExampleScores> scores);

/// Examples the MC metrics skip (no incorrect answers).
std::size_t mc_skipped(std::span<const ExampleScores> scores);

/// log(sigmoid(x)) without overflow.
double log_sigmoid(double x);

/// log sigmoid((a_ctx - a_bare) - (abar_ctx - abar_bare)); the incorrect
/// term is dropped when either incorrect value is absent.
double dpo_term(double a_ctx, double a_bare,
                std::optional<double> abar_ctx = std::nullopt,
                std::optional<double> abar_bare = std::nullopt);

/// Unweighted mean. Throws EmptyInput.
double dpo_aggregate(std::span<const double> terms);

/// Mean cosine over all unordered pairs. Throws TooFewItems below 2.
double avg_pairwise_similarity(std::span<const Embedding> embeddings);

/// sqrt(p (1 - p) / n), the binomial standard error of an accuracy.
double binomial_standard_error(double p, std::size_t n);

struct MetricsReport {
  std::string method;
  std::size_t k = 0;
  double lambda_d = 0.0;
  double lambda_b = 0.0;
  double dpo = 0.0;
  double mc1 = 0.0;
  double mc2 = 0.0;
  double mc3 = 0.0;
  std::size_t n_examples = 0;
  std::size_t n_triplets = 0;
  std::size_t n_mc_skipped = 0;
  std::size_t n_dropped = 0;
  std::vector<std::string> dropped_ids;
  double mc1_standard_error = 0.0;

  std::string to_json() const;
};

/// Markdown table with columns Method, DPO, MC1, MC2, MC3.
std::string to_markdown(std::span<const MetricsReport> reports);

/// {"reports": [...]} for ablation output.
std::string to_json(std::span<const MetricsReport> reports);

}  // namespace iclr
