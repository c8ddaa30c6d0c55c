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

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iclr/llm.hpp"

namespace iclr {

struct RetryPolicy {
  int max_attempts = 5;
  double base_seconds = 1.0;
  double factor = 2.0;
};

struct HttpEndpointConfig {
  /// Full URL including path, e.g. "https://api.example.com/v1/completions".
  std::string endpoint;
  std::string model;
  /// Name of the environment variable holding the bearer token; empty for
  /// unauthenticated endpoints. The secret itself is never stored in configs.
  std::string credential_env;
  std::size_t max_concurrency = 4;
  double timeout_seconds = 60.0;
  RetryPolicy retry;

  static HttpEndpointConfig from_json(std::string_view json);
};

/// POSTs JSON with bounded retries. Transport failures and 429/5xx are retried
/// with exponential backoff and end in BackendUnavailable; other 4xx fail
/// immediately with BackendRejected. Returns the response body.
class JsonPoster {
 public:
  explicit JsonPoster(HttpEndpointConfig config);

  std::string post(const std::string& body);

  const HttpEndpointConfig& config() const noexcept { return config_; }
  std::size_t requests_sent() const noexcept { return sent_.load(); }

 private:
  HttpEndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::string bearer_;
  std::counting_semaphore<4096> slots_;
  std::atomic<std::size_t> sent_{0};
};

/// Selects the tokens of `target` from an echoed prompt = prefix + target.
/// `offsets` are character offsets of each token in the prompt. Tokens at or
/// past the end of the prompt (generated text) are ignored. Throws
/// TokenizationMismatch if a token straddles the prefix/target boundary or
/// the selected tokens do not reconstruct the target.
CompletionScore align_echoed_target(std::size_t prefix_size,
                                    std::string_view target,
                                    std::span<const std::string> tokens,
                                    std::span<const double> logprobs,
                                    std::span<const std::size_t> offsets);

/// Completions-style scoring: sends prompt = prefix + target with echo and
/// logprobs enabled and zero new tokens, then aligns the echoed tokens.
class HttpBackend : public ScoringBackend {
 public:
  explicit HttpBackend(HttpEndpointConfig config);

  std::string model() const override { return poster_.config().model; }
  BackendCapabilities capabilities() const override {
    return {poster_.config().max_concurrency, true};
  }
  CompletionScore score(std::string_view prefix,
                        std::string_view target) override;

  std::size_t requests_sent() const noexcept { return poster_.requests_sent(); }

 private:
  JsonPoster poster_;
};

}  // namespace iclr
