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

#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "iclr/caches.hpp"
#include "iclr/error.hpp"
#include "iclr/http_backend.hpp"
#include "json.hpp"

using namespace iclr;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

// Whitespace-split echo of the prompt, first token without a logprob.
json echo_response(const std::string& prompt, bool code_point_offsets) {
  json tokens = json::array(), lps = json::array(), offsets = json::array();
  std::size_t i = 0, cp = 0;
  auto cps = [&](std::size_t from, std::size_t to) {
    std::size_t n = 0;
    for (std::size_t b = from; b < to; ++b) n += (static_cast<unsigned char>(prompt[b]) & 0xC0) != 0x80;
    return n;
  };
  while (i < prompt.size()) {
    const std::size_t start = i;
    while (i < prompt.size() && prompt[i] == ' ') ++i;
    while (i < prompt.size() && prompt[i] != ' ') ++i;
    const std::string tok = prompt.substr(start, i - start);
    tokens.push_back(tok);
    if (lps.empty()) {
      lps.push_back(nullptr);
    } else {
      lps.push_back(-0.5);
    }
    offsets.push_back(code_point_offsets ? cp : start);
    cp += cps(start, i);
  }
  return {{"choices",
           json::array({{{"text", prompt},
                         {"logprobs",
                          {{"tokens", tokens}, {"token_logprobs", lps}, {"text_offset", offsets}}}}})}};
}

struct Server {
  httplib::Server svr;
  int port = 0;
  std::jthread thread;
  std::atomic<int> requests{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  std::atomic<int> fail_first{0};
  std::atomic<int> status_override{0};
  std::atomic<bool> mangle{false};
  std::atomic<bool> slow{false};
  std::string last_auth;
  std::mutex mu;

  Server() {
    svr.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      requests.fetch_add(1);
      const int now = in_flight.fetch_add(1) + 1;
      int p = peak.load();
      while (now > p && !peak.compare_exchange_weak(p, now)) {
      }
      {
        std::lock_guard lock(mu);
        last_auth = req.get_header_value("Authorization");
      }
      if (slow) std::this_thread::sleep_for(std::chrono::milliseconds(30));
      in_flight.fetch_sub(1);
      if (fail_first.load() > 0) {
        fail_first.fetch_sub(1);
        res.status = 503;
        return;
      }
      if (const int s = status_override.load(); s != 0) {
        res.status = s;
        res.set_content("{\"error\":\"denied\"}", "application/json");
        return;
      }
      const auto body = json::parse(req.body);
      std::string prompt = body.at("prompt").get<std::string>();
      if (mangle) prompt += "X";
      res.set_content(echo_response(prompt, false).dump(), "application/json");
    });
    svr.Post("/v1/embeddings", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      const double len = static_cast<double>(body.at("input").get<std::string>().size());
      res.set_content(json{{"data", json::array({{{"embedding", {len, 1.0, 0.0}}}})}}.dump(),
                      "application/json");
    });
    port = svr.bind_to_any_port("127.0.0.1");
    thread = std::jthread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  ~Server() { svr.stop(); }

  HttpEndpointConfig config(std::string path = "/v1/completions") const {
    HttpEndpointConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port) + path;
    c.model = "test-model";
    c.retry.base_seconds = 0.01;
    c.timeout_seconds = 5;
    return c;
  }
};

}  // namespace

TEST_CASE("http backend scores the target tokens") {
  Server s;
  HttpBackend b(s.config());
  const auto cs = score(b, "Q: Who?\nA:", " Ada Lovelace");
  CHECK(cs.tokens.size() == 2);
  CHECK(cs.tokens[0].token == " Ada");
  CHECK(cs.total_logprob == -1.0);
  CHECK(s.requests.load() == 1);
}

TEST_CASE("transient 503 then success") {
  Server s;
  s.fail_first = 1;
  HttpBackend b(s.config());
  CHECK(score(b, "p", " x y").total_logprob == -1.0);
  CHECK(s.requests.load() == 2);
  CHECK(b.requests_sent() == 2);
}

TEST_CASE("retry exhaustion is BackendUnavailable") {
  Server s;
  s.fail_first = 100;
  auto cfg = s.config();
  cfg.retry.max_attempts = 3;
  HttpBackend b(cfg);
  CHECK(code_of([&] { score(b, "p", " x"); }) == ErrorCode::kBackendUnavailable);
  CHECK(s.requests.load() == 3);
}

TEST_CASE("invalid credentials are rejected without retry") {
  Server s;
  s.status_override = 401;
  ::setenv("ICLR_TEST_KEY", "sk-test", 1);
  auto cfg = s.config();
  cfg.credential_env = "ICLR_TEST_KEY";
  HttpBackend b(cfg);
  CHECK(code_of([&] { score(b, "p", " x"); }) == ErrorCode::kBackendRejected);
  CHECK(s.requests.load() == 1);
  CHECK(s.last_auth == "Bearer sk-test");
}

TEST_CASE("429 is retried") {
  Server s;
  s.status_override = 429;
  auto cfg = s.config();
  cfg.retry.max_attempts = 2;
  HttpBackend b(cfg);
  CHECK(code_of([&] { score(b, "p", " x"); }) == ErrorCode::kBackendUnavailable);
  CHECK(s.requests.load() == 2);
}

TEST_CASE("unset credential variable") {
  Server s;
  auto cfg = s.config();
  cfg.credential_env = "ICLR_TEST_KEY_THAT_IS_NOT_SET";
  ::unsetenv("ICLR_TEST_KEY_THAT_IS_NOT_SET");
  CHECK(code_of([&] { HttpBackend b(cfg); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("echo that does not reconstruct the target") {
  Server s;
  s.mangle = true;
  HttpBackend b(s.config());
  CHECK(code_of([&] { score(b, "p", " x y"); }) == ErrorCode::kTokenizationMismatch);
}

TEST_CASE("transport failure is retried then unavailable") {
  HttpEndpointConfig cfg;
  {
    Server s;
    cfg = s.config();
  }
  cfg.retry.max_attempts = 2;
  cfg.timeout_seconds = 1;
  HttpBackend b(cfg);
  CHECK(code_of([&] { score(b, "p", " x"); }) == ErrorCode::kBackendUnavailable);
}

TEST_CASE("concurrency cap is enforced") {
  Server s;
  s.slow = true;
  auto cfg = s.config();
  cfg.max_concurrency = 2;
  HttpBackend b(cfg);
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&b, t] { score(b, "p" + std::to_string(t), " x"); });
    }
  }
  CHECK(s.requests.load() == 8);
  CHECK(s.peak.load() <= 2);
}

TEST_CASE("alignment by offsets") {
  const std::string prompt = "Q: caf\xC3\xA9?\nA: Yes";
  const std::vector<std::string> tokens{"Q:", " caf\xC3\xA9?\nA:", " Yes"};
  const std::vector<double> lps{std::nan(""), -1.0, -0.25};
  const std::vector<std::size_t> offs{0, 2, 13};
  const auto cs = align_echoed_target(13, " Yes", tokens, lps, offs);
  CHECK(cs.total_logprob == -0.25);
  const std::vector<std::size_t> split{0, 2, 12};
  const std::vector<std::string> t2{"Q:", " caf\xC3\xA9?\nA", ": Yes"};
  CHECK(code_of([&] { align_echoed_target(13, " Yes", t2, lps, split); }) ==
        ErrorCode::kTokenizationMismatch);
}

TEST_CASE("code-point offsets are mapped to bytes") {
  Server s;
  s.svr.Post("/cp", [](const httplib::Request& req, httplib::Response& res) {
    const auto prompt = json::parse(req.body).at("prompt").get<std::string>();
    auto body = echo_response(prompt, true);
    // Drop the text so only offsets can locate the target.
    auto& lp = body["choices"][0]["logprobs"];
    lp["tokens"][0] = "";
    res.set_content(body.dump(), "application/json");
  });
  HttpBackend b(s.config("/cp"));
  const auto cs = score(b, "Q: caf\xC3\xA9 \xE2\x82\xAC?\nA:", " Oui merci");
  CHECK(cs.total_logprob == -1.0);
}

TEST_CASE("http embedding source") {
  Server s;
  HttpEmbeddingSource src(s.config("/v1/embeddings"));
  CHECK(src.embed("abcd") == std::vector<double>{4.0, 1.0, 0.0});
}

TEST_CASE("endpoint config parsing") {
  const auto c = HttpEndpointConfig::from_json(
      R"({"endpoint":"http://h:1/v1","model":"m","credential_env":"K","max_concurrency":3,
          "retry":{"max_attempts":2,"base_seconds":0.5}})");
  CHECK(c.max_concurrency == 3);
  CHECK(c.retry.max_attempts == 2);
  CHECK(c.retry.base_seconds == 0.5);
  CHECK(c.retry.factor == 2.0);
  CHECK(code_of([] { HttpEndpointConfig::from_json(R"({"model":"m"})"); }) ==
        ErrorCode::kInvalidArgument);
  const HttpEndpointConfig defaults;
  CHECK(defaults.retry.max_attempts == 5);
  CHECK(defaults.retry.base_seconds == 1.0);
}
