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
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iclr {

/// Dense real vector with finite components. Construction validates
/// finiteness but not norm; use normalize() for unit vectors.
class Embedding {
 public:
  Embedding() = default;
  explicit Embedding(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  double norm() const noexcept;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  std::vector<double> values_;
};

/// Threshold below which a vector is treated as zero.
inline constexpr double kZeroNormThreshold = 1e-12;

Embedding normalize(std::span<const double> v);
inline Embedding normalize(const Embedding& v) { return normalize(v.values()); }

double dot(std::span<const double> u, std::span<const double> v);

/// Cosine similarity clamped to [-1, 1].
double cosine(std::span<const double> u, std::span<const double> v);
inline double cosine(const Embedding& u, const Embedding& v) {
  return cosine(u.values(), v.values());
}

/// One ingested row before validation.
struct RawRecord {
  std::string question;
  std::vector<std::string> correct_answers;
  std::vector<std::string> incorrect_answers;
};

struct EvalExample {
  std::string id;
  std::string question;
  std::vector<std::string> correct_answers;
  std::vector<std::string> incorrect_answers;
};

struct Demonstration {
  std::string id;
  std::string question;
  std::string answer;
  std::string source_example_id;
  std::optional<Embedding> embedding;
  std::optional<double> bias;
};

struct DpoTriplet {
  std::string question;
  std::string correct;
  std::string incorrect;
  std::string source_example_id;
};

/// Stable id of an eval example: hash of its canonical question.
std::string example_id(std::string_view question);

/// Stable id of a demonstration: hash of canonical question and answer.
std::string demo_id(std::string_view question, std::string_view answer);

class CandidateView;

/// Immutable collection of demonstrations with a question index.
class DemoStore {
 public:
  DemoStore() = default;
  explicit DemoStore(std::vector<Demonstration> demos);

  std::size_t size() const noexcept { return demos_.size(); }
  bool empty() const noexcept { return demos_.empty(); }
  const Demonstration& operator[](std::size_t i) const { return demos_[i]; }
  std::span<const Demonstration> demos() const noexcept { return demos_; }

  std::optional<std::size_t> find(std::string_view id) const;

  /// Positions of demos whose canonical question equals `question`.
  std::span<const std::size_t> positions_with_question(
      std::string_view question) const;

  CandidateView all() const;

 private:
  std::vector<Demonstration> demos_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_question_;
};

/// Non-owning ordered subset of a DemoStore. The store must outlive the view.
class CandidateView {
 public:
  CandidateView(const DemoStore& store, std::vector<std::size_t> positions)
      : store_(&store), positions_(std::move(positions)) {}

  std::size_t size() const noexcept { return positions_.size(); }
  bool empty() const noexcept { return positions_.empty(); }
  const Demonstration& operator[](std::size_t i) const {
    return (*store_)[positions_[i]];
  }
  std::span<const std::size_t> positions() const noexcept {
    return positions_;
  }
  const DemoStore& store() const noexcept { return *store_; }

 private:
  const DemoStore* store_;
  std::vector<std::size_t> positions_;
};

/// Validates rows and assigns stable ids. Throws MalformedRecord naming the
/// 1-based row number.
std::vector<EvalExample> build_eval_set(std::span<const RawRecord> records);

/// One demonstration per distinct canonical (question, correct answer).
DemoStore expand_pairs(std::span<const EvalExample> evals);

/// Distinct (question, correct, incorrect) triples, in input order.
std::vector<DpoTriplet> expand_triplets(std::span<const EvalExample> evals);

/// All demos whose canonical question differs from `question`.
CandidateView leave_one_out(const DemoStore& store, std::string_view question);

}  // namespace iclr
