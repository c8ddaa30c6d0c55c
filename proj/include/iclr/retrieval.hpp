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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iclr/core.hpp"

namespace iclr {

enum class Method { kFix, kBias, kRel, kRelBias, kRelDiv, kRelDivBias };

/// Display names follow the ablation tables: "Fix", "Bias", "Rel",
/// "Rel+Bias", "Rel+Div", "Rel+Div+Bias".
std::string_view method_name(Method m) noexcept;

/// Accepts display names, the identifiers "RelDivBias" etc. and
/// case-insensitive variants; "Rel+Bias+Div" is an alias of "Rel+Div+Bias".
Method parse_method(std::string_view name);

inline constexpr Method kAllMethods[] = {Method::kFix,    Method::kBias,
                                         Method::kRel,    Method::kRelBias,
                                         Method::kRelDiv, Method::kRelDivBias};

bool method_uses_query(Method m) noexcept;
bool method_uses_bias(Method m) noexcept;

struct RetrieverConfig {
  Method method = Method::kRelDivBias;
  std::size_t k = 6;
  double lambda_d = 0.75;
  double lambda_b = 0.95;
  std::vector<std::string> fixed_ids;
  /// Min-max rescale biases to [0, 1] over the index before mixing.
  bool rescale_bias = false;

  /// Throws InvalidArgument / MissingFixedIds on violated invariants.
  void validate() const;
};

/// Row-major table of unit-normalized embeddings plus ids and biases.
/// Shared between the full index and its subsets.
struct CandidateTable {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<double> embeddings;  // ids.size() * dim
  std::vector<double> biases;      // ids.size()
};

/// Candidate set for one query. Cheap to subset: rows are shared.
class CandidateIndex {
 public:
  /// `embeddings` is row-major n x dim; rows are checked for unit norm.
  /// dim may be 0 for indexes used only by id-based retrieval (Fix).
  CandidateIndex(std::vector<std::string> ids, std::size_t dim,
                 std::vector<double> embeddings, std::vector<double> biases);

  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  std::size_t dim() const noexcept { return table_->dim; }

  const std::string& id(std::size_t i) const { return table_->ids[rows_[i]]; }
  std::span<const double> embedding(std::size_t i) const {
    return {table_->embeddings.data() + rows_[i] * table_->dim, table_->dim};
  }
  double bias(std::size_t i) const { return table_->biases[rows_[i]]; }

  /// Position in the underlying table of candidate i.
  std::size_t row(std::size_t i) const { return rows_[i]; }

  /// Index over the given rows of the underlying table, in the given order.
  CandidateIndex subset(std::vector<std::size_t> rows) const;

  std::optional<std::size_t> find(std::string_view id) const;

 private:
  CandidateIndex(std::shared_ptr<const CandidateTable> table,
                 std::vector<std::size_t> rows)
      : table_(std::move(table)), rows_(std::move(rows)) {}

  std::shared_ptr<const CandidateTable> table_;
  std::vector<std::size_t> rows_;
};

struct RetrievedContext {
  std::vector<std::string> ids;
  /// Candidate positions within the index that was searched.
  std::vector<std::size_t> positions;
  /// Selection score of each pick (v for the first pick and for pure
  /// ranking, w for later MMR picks; 0 for Fix).
  std::vector<double> scores;
};

/// v_i = lambda_b * <q, e_i> + (1 - lambda_b) * b_i.
std::vector<double> biased_relevance(std::span<const double> query,
                                     const CandidateIndex& index,
                                     double lambda_b,
                                     bool rescale_bias = false);

/// Greedy maximal marginal relevance with quality bias. Ties go to the
/// lowest candidate position. Returns min(k, n) distinct candidates.
RetrievedContext mmr_select(const CandidateIndex& index,
                            std::span<const double> query, std::size_t k,
                            double lambda_d, double lambda_b,
                            bool rescale_bias = false);

/// k highest scores, descending, ties to the lowest position.
RetrievedContext top_k_by_score(const CandidateIndex& index,
                                std::span<const double> scores,
                                std::size_t k);

/// Dispatches on config.method. `query` may be empty for Fix and Bias.
RetrievedContext retrieve(const RetrieverConfig& config,
                          const CandidateIndex& index,
                          std::optional<std::span<const double>> query);

}  // namespace iclr
