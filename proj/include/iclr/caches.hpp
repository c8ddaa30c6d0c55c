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
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iclr/core.hpp"
#include "iclr/http_backend.hpp"

namespace iclr {

/// Produces a dense vector for a text.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual std::vector<double> embed(std::string_view text) = 0;
};

/// Precomputed vectors in the embedding file format:
///   {"hash": sha256 of the canonical text, "vector": [real...]}
class VectorFileSource : public EmbeddingSource {
 public:
  explicit VectorFileSource(const std::filesystem::path& path);

  std::vector<double> embed(std::string_view text) override;
  std::size_t size() const noexcept { return vectors_.size(); }

 private:
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

/// OpenAI-style embeddings endpoint: {"model", "input"} -> data[0].embedding.
class HttpEmbeddingSource : public EmbeddingSource {
 public:
  explicit HttpEmbeddingSource(HttpEndpointConfig config);
  std::vector<double> embed(std::string_view text) override;

 private:
  JsonPoster poster_;
};

/// Unit-normalized embeddings keyed by canonical-text hash, persisted in the
/// embedding file format. All vectors share one dimension.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path path);

  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;

  std::optional<Embedding> get(std::string_view text) const;
  std::optional<Embedding> get_by_hash(const std::string& hash) const;
  bool contains(std::string_view text) const;

  /// Normalizes and stores. Throws DimensionMismatch on a dimension change.
  void put(std::string_view text, std::span<const double> vector);

  std::size_t size() const;
  std::size_t dim() const;

 private:
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Embedding> by_hash_;
  std::size_t dim_ = 0;
  std::ofstream out_;
};

/// Quality biases keyed by demo id for one scoring model, persisted as
///   {"demo_id": str, "bias": real, "model": str}
/// Entries for other models in the same file are ignored.
class BiasCache {
 public:
  explicit BiasCache(std::string model) : model_(std::move(model)) {}
  BiasCache(std::string model, std::filesystem::path path);

  BiasCache(const BiasCache&) = delete;
  BiasCache& operator=(const BiasCache&) = delete;

  const std::string& model() const noexcept { return model_; }
  std::optional<double> get(const std::string& demo_id) const;
  void put(const std::string& demo_id, double bias);
  std::size_t size() const;

 private:
  std::string model_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, double> biases_;
  std::ofstream out_;
};

}  // namespace iclr
