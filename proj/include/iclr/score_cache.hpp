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
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace iclr {

/// Persistent map (model, sha256(prefix), sha256(target)) -> token logprobs.
/// Backed by an append-only JSON Lines file:
///   {"prefix_hash": hex, "target_hash": hex, "model": str, "logprobs": [real]}
/// Reads may run concurrently; inserts are serialized and flushed per line so
/// an interrupted run keeps every completed entry.
class ScoreCache {
 public:
  /// In-memory only.
  ScoreCache() = default;
  /// Loads `path` if it exists and appends new entries to it.
  explicit ScoreCache(std::filesystem::path path);

  ScoreCache(const ScoreCache&) = delete;
  ScoreCache& operator=(const ScoreCache&) = delete;

  std::optional<std::vector<double>> lookup(std::string_view model,
                                            std::string_view prefix,
                                            std::string_view target) const;

  void insert(std::string_view model, std::string_view prefix,
              std::string_view target, const std::vector<double>& logprobs);

  std::size_t size() const;
  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }

 private:
  using Key = std::tuple<std::string, std::string, std::string>;

  mutable std::shared_mutex mu_;
  std::map<Key, std::vector<double>> entries_;
  std::filesystem::path path_;
  std::ofstream out_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

}  // namespace iclr
