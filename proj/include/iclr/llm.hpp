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

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iclr/core.hpp"

namespace iclr {

/// How demonstrations and the query are laid out in a prompt.
struct PromptTemplate {
  std::string demo_format = "Q: {question}\nA: {answer}";
  std::string demo_separator = "\n\n";
  std::string query_format = "Q: {question}\nA:";
  std::string header;

  /// demo_format must hold {question} and {answer} exactly once each,
  /// query_format must hold {question} exactly once.
  void validate() const;

  static PromptTemplate from_json(std::string_view json);
  static PromptTemplate load(const std::filesystem::path& path);
  std::string to_json() const;
};

/// Demos in the given order, then the query, joined by demo_separator after
/// the header.
std::string format_prompt(const PromptTemplate& tmpl,
                          std::span<const Demonstration> context,
                          std::string_view query);

/// Text scored as the answer continuation of format_prompt(tmpl, {}, q):
/// whatever demo_format places between the rendered query and {answer},
/// followed by the answer. For the default template this is " " + answer.
std::string answer_continuation(const PromptTemplate& tmpl,
                                std::string_view question,
                                std::string_view answer);

/// Six general-knowledge QA pairs used as the fixed context for Fix when no
/// other demonstrations are supplied. Ids are demo_id(question, answer).
std::vector<Demonstration> default_primer();

struct TokenScore {
  std::string token;
  double logprob = 0.0;  // nats
};

struct CompletionScore {
  std::vector<TokenScore> tokens;
  double total_logprob = 0.0;  // nats

  static CompletionScore from_tokens(std::vector<TokenScore> tokens);
  std::vector<double> logprobs() const;
};

struct BackendCapabilities {
  std::size_t max_concurrency = 1;
  bool supports_scoring = true;
};

/// Token-level log-probability scoring of a target given a prefix.
/// Implementations must be safe for concurrent score() calls up to
/// capabilities().max_concurrency.
class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;

  virtual std::string model() const = 0;
  virtual BackendCapabilities capabilities() const = 0;
  virtual CompletionScore score(std::string_view prefix,
                                std::string_view target) = 0;
};

/// Scores through `backend` and enforces the CompletionScore contract:
/// non-empty target, finite non-positive logprobs, tokens reconstructing the
/// target and total equal to the sum.
CompletionScore score(ScoringBackend& backend, std::string_view prefix,
                      std::string_view target);

/// exp(total_logprob).
double sequence_probability(const CompletionScore& cs);

/// Mean per-token log-probability of the demo answer given its question
/// formatted as a zero-shot prompt.
double quality_bias(ScoringBackend& backend, const Demonstration& demo,
                    const PromptTemplate& tmpl);

/// Splits into tokens that concatenate back to `text`: each token is a run of
/// whitespace followed by a run of non-whitespace; trailing whitespace joins
/// the last token.
std::vector<std::string> whitespace_tokenize(std::string_view text);

/// Deterministic offline backend: fixture lookups with a per-token fallback.
class MockBackend : public ScoringBackend {
 public:
  using Fixture = std::map<std::pair<std::string, std::string>, std::vector<double>>;

  explicit MockBackend(double fallback_per_token = -1.0, Fixture fixture = {},
                       std::string model = "mock", std::size_t max_concurrency = 8);

  /// Not safe to call concurrently with score().
  void add_fixture(std::string prefix, std::string target,
                   std::vector<double> logprobs);

  std::string model() const override { return model_; }
  BackendCapabilities capabilities() const override {
    return {max_concurrency_, true};
  }
  CompletionScore score(std::string_view prefix,
                        std::string_view target) override;

  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  double fallback_;
  Fixture fixture_;
  std::string model_;
  std::size_t max_concurrency_;
  std::atomic<std::size_t> calls_{0};
};

/// Adapts a callable; used by language bindings and tests.
class CallbackBackend : public ScoringBackend {
 public:
  using Fn = std::function<CompletionScore(std::string_view prefix,
                                           std::string_view target)>;

  CallbackBackend(Fn fn, std::string model, std::size_t max_concurrency = 1)
      : fn_(std::move(fn)), model_(std::move(model)),
        max_concurrency_(max_concurrency) {}

  std::string model() const override { return model_; }
  BackendCapabilities capabilities() const override {
    return {max_concurrency_, true};
  }
  CompletionScore score(std::string_view prefix,
                        std::string_view target) override {
    calls_.fetch_add(1);
    return fn_(prefix, target);
  }
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  Fn fn_;
  std::string model_;
  std::size_t max_concurrency_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace iclr
