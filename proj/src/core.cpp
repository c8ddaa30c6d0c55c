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

#include "iclr/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "iclr/error.hpp"
#include "iclr/text.hpp"

namespace iclr {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      fail(ErrorCode::kInvalidArgument,
           "embedding component " + std::to_string(i) + " is not finite");
    }
  }
}

double Embedding::norm() const noexcept {
  return std::sqrt(dot(values_, values_));
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    fail(ErrorCode::kDimensionMismatch,
         "dimension mismatch: " + std::to_string(u.size()) + " vs " +
             std::to_string(v.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

Embedding normalize(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double n = std::sqrt(sq);
  if (!(n >= kZeroNormThreshold)) {
    fail(ErrorCode::kZeroVector, "cannot normalize a zero vector");
  }
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return Embedding(std::move(out));
}

double cosine(std::span<const double> u, std::span<const double> v) {
  const double uv = dot(u, v);
  const double nu = std::sqrt(dot(u, u));
  const double nv = std::sqrt(dot(v, v));
  if (nu < kZeroNormThreshold || nv < kZeroNormThreshold) {
    fail(ErrorCode::kZeroVector, "cosine of a zero vector");
  }
  return std::clamp(uv / (nu * nv), -1.0, 1.0);
}

std::string example_id(std::string_view question) {
  return text_hash(question);
}

std::string demo_id(std::string_view question, std::string_view answer) {
  std::string key = normalize_text(question);
  key.push_back('\x1f');
  key += normalize_text(answer);
  return sha256_hex(key);
}

DemoStore::DemoStore(std::vector<Demonstration> demos)
    : demos_(std::move(demos)) {
  for (std::size_t i = 0; i < demos_.size(); ++i) {
    if (!by_id_.emplace(demos_[i].id, i).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate demo id " + demos_[i].id);
    }
    by_question_[normalize_text(demos_[i].question)].push_back(i);
  }
}

std::optional<std::size_t> DemoStore::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::span<const std::size_t> DemoStore::positions_with_question(
    std::string_view question) const {
  auto it = by_question_.find(normalize_text(question));
  if (it == by_question_.end()) return {};
  return it->second;
}

CandidateView DemoStore::all() const {
  std::vector<std::size_t> positions(demos_.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
  return CandidateView(*this, std::move(positions));
}

std::vector<EvalExample> build_eval_set(std::span<const RawRecord> records) {
  std::vector<EvalExample> out;
  out.reserve(records.size());
  for (std::size_t row = 0; row < records.size(); ++row) {
    const RawRecord& r = records[row];
    auto malformed = [row](const std::string& why) {
      fail(ErrorCode::kMalformedRecord,
           "row " + std::to_string(row + 1) + ": " + why);
    };
    if (normalize_text(r.question).empty()) malformed("empty question");
    if (r.correct_answers.empty()) malformed("no correct answers");
    for (const auto& a : r.correct_answers) {
      if (normalize_text(a).empty()) malformed("empty correct answer");
    }
    for (const auto& a : r.incorrect_answers) {
      if (normalize_text(a).empty()) malformed("empty incorrect answer");
    }
    out.push_back(EvalExample{example_id(r.question), r.question,
                              r.correct_answers, r.incorrect_answers});
  }
  return out;
}

DemoStore expand_pairs(std::span<const EvalExample> evals) {
  std::vector<Demonstration> demos;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : evals) {
    const std::string q = normalize_text(e.question);
    for (const auto& a : e.correct_answers) {
      if (!seen.emplace(q, normalize_text(a)).second) continue;
      demos.push_back(Demonstration{demo_id(e.question, a), e.question, a,
                                    e.id, std::nullopt, std::nullopt});
    }
  }
  return DemoStore(std::move(demos));
}

std::vector<DpoTriplet> expand_triplets(std::span<const EvalExample> evals) {
  std::vector<DpoTriplet> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& e : evals) {
    const std::string q = normalize_text(e.question);
    for (const auto& a : e.correct_answers) {
      const std::string na = normalize_text(a);
      for (const auto& abar : e.incorrect_answers) {
        const std::string nabar = normalize_text(abar);
        if (na == nabar) continue;
        if (!seen.emplace(q, na, nabar).second) continue;
        out.push_back(DpoTriplet{e.question, a, abar, e.id});
      }
    }
  }
  return out;
}

CandidateView leave_one_out(const DemoStore& store, std::string_view question) {
  auto excluded = store.positions_with_question(question);
  std::vector<std::size_t> keep;
  keep.reserve(store.size() - excluded.size());
  std::size_t next_excluded = 0;
  // Excluded positions are sorted ascending by construction.
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (next_excluded < excluded.size() && excluded[next_excluded] == i) {
      ++next_excluded;
      continue;
    }
    keep.push_back(i);
  }
  return CandidateView(store, std::move(keep));
}

}  // namespace iclr
