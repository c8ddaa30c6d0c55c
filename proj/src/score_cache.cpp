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

#include "iclr/score_cache.hpp"

#include "iclr/error.hpp"
#include "iclr/text.hpp"
#include "json.hpp"
#include "jsonl.hpp"

namespace iclr {

ScoreCache::ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
  detail::for_each_jsonl(path_, [&](const nlohmann::json& j) {
    entries_[{j.at("model").get<std::string>(),
              j.at("prefix_hash").get<std::string>(),
              j.at("target_hash").get<std::string>()}] =
        j.at("logprobs").get<std::vector<double>>();
  });
  out_ = detail::open_append(path_);
}

std::optional<std::vector<double>> ScoreCache::lookup(
    std::string_view model, std::string_view prefix,
    std::string_view target) const {
  Key key{std::string(model), sha256_hex(prefix), sha256_hex(target)};
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    misses_.fetch_add(1);
    return std::nullopt;
  }
  hits_.fetch_add(1);
  return it->second;
}

void ScoreCache::insert(std::string_view model, std::string_view prefix,
                        std::string_view target,
                        const std::vector<double>& logprobs) {
  Key key{std::string(model), sha256_hex(prefix), sha256_hex(target)};
  std::unique_lock lock(mu_);
  auto [it, inserted] = entries_.emplace(key, logprobs);
  if (!inserted || !out_.is_open()) return;
  nlohmann::ordered_json j;
  j["prefix_hash"] = std::get<1>(key);
  j["target_hash"] = std::get<2>(key);
  j["model"] = std::get<0>(key);
  j["logprobs"] = logprobs;
  out_ << j.dump() << '\n';
  out_.flush();
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

}  // namespace iclr
