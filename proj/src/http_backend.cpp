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

#include "iclr/http_backend.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "iclr/error.hpp"
#include "json.hpp"

namespace iclr {
namespace {

using nlohmann::json;

struct SlotGuard {
  std::counting_semaphore<4096>& sem;
  explicit SlotGuard(std::counting_semaphore<4096>& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

std::ptrdiff_t checked_cap(std::size_t cap) {
  if (cap < 1 || cap > 4096) {
    fail(ErrorCode::kInvalidArgument, "max_concurrency must be in [1, 4096]");
  }
  return static_cast<std::ptrdiff_t>(cap);
}

}  // namespace

HttpEndpointConfig HttpEndpointConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("endpoint config: ") + e.what());
  }
  HttpEndpointConfig c;
  try {
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.credential_env = j.value("credential_env", std::string{});
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    if (auto r = j.find("retry"); r != j.end()) {
      c.retry.max_attempts = r->value("max_attempts", c.retry.max_attempts);
      c.retry.base_seconds = r->value("base_seconds", c.retry.base_seconds);
      c.retry.factor = r->value("factor", c.retry.factor);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("endpoint config: ") + e.what());
  }
  return c;
}

JsonPoster::JsonPoster(HttpEndpointConfig config)
    : config_(std::move(config)), slots_(checked_cap(config_.max_concurrency)) {
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    fail(ErrorCode::kInvalidArgument, "endpoint must be an absolute URL: " + url);
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "/" : url.substr(path_begin);
  if (config_.model.empty()) {
    fail(ErrorCode::kInvalidArgument, "endpoint config requires a model");
  }
  if (config_.retry.max_attempts < 1) {
    fail(ErrorCode::kInvalidArgument, "retry.max_attempts must be >= 1");
  }
  if (!config_.credential_env.empty()) {
    const char* secret = std::getenv(config_.credential_env.c_str());
    if (secret == nullptr || *secret == '\0') {
      fail(ErrorCode::kInvalidArgument, "credential environment variable " +
                                            config_.credential_env + " is not set");
    }
    bearer_ = secret;
  }
}

std::string JsonPoster::post(const std::string& body) {
  SlotGuard slot(slots_);
  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      const double wait = config_.retry.base_seconds *
                          std::pow(config_.retry.factor, attempt - 2);
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);

    sent_.fetch_add(1);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status >= 200 && status < 300) return res->body;
    if (status == 429 || status >= 500) {
      last_error = "HTTP " + std::to_string(status);
      continue;
    }
    fail(ErrorCode::kBackendRejected,
         "HTTP " + std::to_string(status) + " from " + config_.endpoint + ": " +
             res->body.substr(0, 200));
  }
  fail(ErrorCode::kBackendUnavailable,
       config_.endpoint + " unavailable after " +
           std::to_string(config_.retry.max_attempts) + " attempts (" +
           last_error + ")");
}

CompletionScore align_echoed_target(std::size_t prefix_size,
                                    std::string_view target,
                                    std::span<const std::string> tokens,
                                    std::span<const double> logprobs,
                                    std::span<const std::size_t> offsets) {
  if (tokens.size() != logprobs.size() || tokens.size() != offsets.size()) {
    fail(ErrorCode::kBackendRejected, "echoed token arrays differ in length");
  }
  const std::size_t prompt_end = prefix_size + target.size();
  std::vector<TokenScore> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t begin = offsets[i];
    const std::size_t end = begin + tokens[i].size();
    if (begin >= prompt_end) break;
    if (end <= prefix_size) continue;
    if (begin < prefix_size) {
      fail(ErrorCode::kTokenizationMismatch,
           "token '" + tokens[i] + "' spans the prefix/target boundary");
    }
    if (!std::isfinite(logprobs[i])) {
      fail(ErrorCode::kTokenizationMismatch,
           "no logprob for target token '" + tokens[i] + "'");
    }
    out.push_back({tokens[i], logprobs[i]});
  }
  std::string joined;
  for (const auto& t : out) joined += t.token;
  if (joined != target) {
    fail(ErrorCode::kTokenizationMismatch,
         "echoed tokens reconstruct '" + joined + "' instead of the target");
  }
  return CompletionScore::from_tokens(std::move(out));
}

HttpBackend::HttpBackend(HttpEndpointConfig config) : poster_(std::move(config)) {}

CompletionScore HttpBackend::score(std::string_view prefix,
                                   std::string_view target) {
  std::string prompt(prefix);
  prompt += target;
  json req = {{"model", poster_.config().model},
              {"prompt", prompt},
              {"max_tokens", 0},
              {"echo", true},
              {"logprobs", 1},
              {"temperature", 0}};
  const std::string body = poster_.post(req.dump());

  std::vector<std::string> tokens;
  std::vector<double> logprobs;
  std::vector<std::size_t> offsets;
  try {
    const json res = json::parse(body);
    const json& lp = res.at("choices").at(0).at("logprobs");
    for (const auto& t : lp.at("tokens")) tokens.push_back(t.get<std::string>());
    for (const auto& v : lp.at("token_logprobs")) {
      logprobs.push_back(v.is_null() ? std::nan("") : v.get<double>());
    }
    std::string joined;
    for (const auto& t : tokens) joined += t;
    const bool contiguous = prompt.compare(0, joined.size(), joined) == 0 ||
                            joined.compare(0, prompt.size(), prompt) == 0;
    auto it = lp.find("text_offset");
    if (contiguous || it == lp.end() || it->is_null()) {
      std::size_t pos = 0;
      for (const auto& t : tokens) {
        offsets.push_back(pos);
        pos += t.size();
      }
    } else {
      // Servers report offsets in code points; map them to byte offsets.
      std::vector<std::size_t> byte_of_cp;
      for (std::size_t b = 0; b < prompt.size(); ++b) {
        if ((static_cast<unsigned char>(prompt[b]) & 0xC0) != 0x80) {
          byte_of_cp.push_back(b);
        }
      }
      byte_of_cp.push_back(prompt.size());
      for (const auto& v : *it) {
        const auto cp = v.get<std::size_t>();
        offsets.push_back(cp < byte_of_cp.size() ? byte_of_cp[cp] : prompt.size() + cp);
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kBackendRejected,
         std::string("unexpected completions response: ") + e.what());
  }
  return align_echoed_target(prefix.size(), target, tokens, logprobs, offsets);
}

}  // namespace iclr
