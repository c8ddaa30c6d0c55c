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

#include "iclr/caches.hpp"

#include <cmath>

#include "iclr/error.hpp"
#include "iclr/text.hpp"
#include "json.hpp"
#include "jsonl.hpp"

namespace iclr {

using nlohmann::json;

VectorFileSource::VectorFileSource(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kIoError, "embedding file not found: " + path.string());
  }
  std::size_t dim = 0;
  detail::for_each_jsonl(path, [&](const json& j) {
    auto v = j.at("vector").get<std::vector<double>>();
    if (dim == 0) dim = v.size();
    if (v.empty() || v.size() != dim) {
      fail(ErrorCode::kEmbeddingSourceError,
           path.string() + ": vector for " + j.at("hash").get<std::string>() +
               " has dimension " + std::to_string(v.size()) + ", expected " +
               std::to_string(dim));
    }
    vectors_[j.at("hash").get<std::string>()] = std::move(v);
  });
}

std::vector<double> VectorFileSource::embed(std::string_view text) {
  const std::string hash = text_hash(text);
  auto it = vectors_.find(hash);
  if (it == vectors_.end()) {
    fail(ErrorCode::kEmbeddingSourceError,
         "no vector for text " + hash + " ('" + std::string(text.substr(0, 60)) + "')");
  }
  return it->second;
}

HttpEmbeddingSource::HttpEmbeddingSource(HttpEndpointConfig config)
    : poster_(std::move(config)) {}

std::vector<double> HttpEmbeddingSource::embed(std::string_view text) {
  const json req = {{"model", poster_.config().model}, {"input", std::string(text)}};
  std::string body;
  try {
    body = poster_.post(req.dump());
  } catch (const Error& e) {
    fail(ErrorCode::kEmbeddingSourceError, e.what());
  }
  try {
    return json::parse(body).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kEmbeddingSourceError,
         std::string("unexpected embeddings response: ") + e.what());
  }
}

EmbeddingCache::EmbeddingCache(std::filesystem::path path) {
  detail::for_each_jsonl(path, [&](const json& j) {
    const auto v = j.at("vector").get<std::vector<double>>();
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) {
      fail(ErrorCode::kDimensionMismatch,
           path.string() + ": mixed embedding dimensions");
    }
    // Stored vectors are already unit norm; keep them bit-exact so warm and
    // cold runs see identical values.
    Embedding e(v);
    if (std::abs(e.norm() - 1.0) > 1e-12) e = normalize(v);
    by_hash_.insert_or_assign(j.at("hash").get<std::string>(), std::move(e));
  });
  out_ = detail::open_append(path);
}

std::optional<Embedding> EmbeddingCache::get_by_hash(const std::string& hash) const {
  std::shared_lock lock(mu_);
  auto it = by_hash_.find(hash);
  if (it == by_hash_.end()) return std::nullopt;
  return it->second;
}

std::optional<Embedding> EmbeddingCache::get(std::string_view text) const {
  return get_by_hash(text_hash(text));
}

bool EmbeddingCache::contains(std::string_view text) const {
  const std::string hash = text_hash(text);
  std::shared_lock lock(mu_);
  return by_hash_.count(hash) != 0;
}

void EmbeddingCache::put(std::string_view text, std::span<const double> vector) {
  Embedding e = normalize(vector);
  const std::string hash = text_hash(text);
  std::unique_lock lock(mu_);
  if (dim_ == 0) dim_ = e.dim();
  if (e.dim() != dim_) {
    fail(ErrorCode::kDimensionMismatch,
         "embedding dimension " + std::to_string(e.dim()) + " differs from cache dimension " +
             std::to_string(dim_));
  }
  if (out_.is_open()) {
    nlohmann::ordered_json j;
    j["hash"] = hash;
    j["vector"] = std::vector<double>(e.values().begin(), e.values().end());
    out_ << j.dump() << '\n';
    out_.flush();
  }
  by_hash_.insert_or_assign(hash, std::move(e));
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mu_);
  return by_hash_.size();
}

std::size_t EmbeddingCache::dim() const {
  std::shared_lock lock(mu_);
  return dim_;
}

BiasCache::BiasCache(std::string model, std::filesystem::path path)
    : model_(std::move(model)) {
  detail::for_each_jsonl(path, [&](const json& j) {
    if (j.at("model").get<std::string>() != model_) return;
    biases_[j.at("demo_id").get<std::string>()] = j.at("bias").get<double>();
  });
  out_ = detail::open_append(path);
}

std::optional<double> BiasCache::get(const std::string& demo_id) const {
  std::shared_lock lock(mu_);
  auto it = biases_.find(demo_id);
  if (it == biases_.end()) return std::nullopt;
  return it->second;
}

void BiasCache::put(const std::string& demo_id, double bias) {
  if (!std::isfinite(bias) || bias > 0.0) {
    fail(ErrorCode::kInvalidArgument, "bias must be finite and <= 0");
  }
  std::unique_lock lock(mu_);
  if (out_.is_open()) {
    nlohmann::ordered_json j;
    j["demo_id"] = demo_id;
    j["bias"] = bias;
    j["model"] = model_;
    out_ << j.dump() << '\n';
    out_.flush();
  }
  biases_[demo_id] = bias;
}

std::size_t BiasCache::size() const {
  std::shared_lock lock(mu_);
  return biases_.size();
}

}  // namespace iclr
