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

#include "iclr/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "iclr/error.hpp"

namespace iclr {
namespace {

constexpr double kUnitTolerance = 1e-9;

void check_unit(std::span<const double> v, const char* what) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (std::abs(std::sqrt(sq) - 1.0) > kUnitTolerance) {
    fail(ErrorCode::kInvalidArgument, std::string(what) + " is not unit-normalized");
  }
}

void check_weight(double w, const char* name) {
  if (!(w >= 0.0 && w <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, std::string(name) + " must be in [0, 1]");
  }
}

std::string fold(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '+' || c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::kFix: return "Fix";
    case Method::kBias: return "Bias";
    case Method::kRel: return "Rel";
    case Method::kRelBias: return "Rel+Bias";
    case Method::kRelDiv: return "Rel+Div";
    case Method::kRelDivBias: return "Rel+Div+Bias";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  const std::string f = fold(name);
  if (f == "fix") return Method::kFix;
  if (f == "bias") return Method::kBias;
  if (f == "rel") return Method::kRel;
  if (f == "relbias") return Method::kRelBias;
  if (f == "reldiv") return Method::kRelDiv;
  if (f == "reldivbias" || f == "relbiasdiv") return Method::kRelDivBias;
  fail(ErrorCode::kInvalidArgument, "unknown method '" + std::string(name) + "'");
}

bool method_uses_query(Method m) noexcept {
  return m != Method::kFix && m != Method::kBias;
}

bool method_uses_bias(Method m) noexcept {
  return m == Method::kBias || m == Method::kRelBias || m == Method::kRelDivBias;
}

void RetrieverConfig::validate() const {
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  check_weight(lambda_d, "lambda_d");
  check_weight(lambda_b, "lambda_b");
  if (method == Method::kFix && fixed_ids.empty()) {
    fail(ErrorCode::kMissingFixedIds, "method Fix requires fixed ids");
  }
}

CandidateIndex::CandidateIndex(std::vector<std::string> ids, std::size_t dim,
                               std::vector<double> embeddings,
                               std::vector<double> biases) {
  const std::size_t n = ids.size();
  if (embeddings.size() != n * dim) {
    fail(ErrorCode::kDimensionMismatch, "embedding matrix is not n x dim");
  }
  if (biases.size() != n) {
    fail(ErrorCode::kDimensionMismatch, "bias count differs from id count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (dim > 0) {
      check_unit({embeddings.data() + i * dim, dim}, "candidate embedding");
    }
    if (!std::isfinite(biases[i])) {
      fail(ErrorCode::kInvalidArgument, "bias of " + ids[i] + " is not finite");
    }
  }
  auto table = std::make_shared<CandidateTable>();
  table->ids = std::move(ids);
  table->dim = dim;
  table->embeddings = std::move(embeddings);
  table->biases = std::move(biases);
  rows_.resize(n);
  std::iota(rows_.begin(), rows_.end(), std::size_t{0});
  table_ = std::move(table);
}

CandidateIndex CandidateIndex::subset(std::vector<std::size_t> rows) const {
  for (std::size_t r : rows) {
    if (r >= table_->ids.size()) {
      fail(ErrorCode::kInvalidArgument, "subset row out of range");
    }
  }
  return CandidateIndex(table_, std::move(rows));
}

std::optional<std::size_t> CandidateIndex::find(std::string_view id) const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (table_->ids[rows_[i]] == id) return i;
  }
  return std::nullopt;
}

std::vector<double> biased_relevance(std::span<const double> query,
                                     const CandidateIndex& index,
                                     double lambda_b, bool rescale_bias) {
  check_weight(lambda_b, "lambda_b");
  if (query.size() != index.dim()) {
    fail(ErrorCode::kDimensionMismatch,
         "query dimension " + std::to_string(query.size()) +
             " differs from index dimension " + std::to_string(index.dim()));
  }
  check_unit(query, "query embedding");

  const std::size_t n = index.size();
  double lo = 0.0;
  double span = 0.0;
  if (rescale_bias && n > 0) {
    double hi = index.bias(0);
    lo = hi;
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, index.bias(i));
      hi = std::max(hi, index.bias(i));
    }
    span = hi - lo;
  }

  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    double b = index.bias(i);
    if (rescale_bias) b = span > 0.0 ? (b - lo) / span : 0.0;
    v[i] = lambda_b * dot(query, index.embedding(i)) + (1.0 - lambda_b) * b;
  }
  return v;
}

RetrievedContext mmr_select(const CandidateIndex& index,
                            std::span<const double> query, std::size_t k,
                            double lambda_d, double lambda_b,
                            bool rescale_bias) {
  if (index.empty()) fail(ErrorCode::kEmptyIndex, "candidate index is empty");
  if (k < 1) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  check_weight(lambda_d, "lambda_d");

  const std::vector<double> v =
      biased_relevance(query, index, lambda_b, rescale_bias);
  const std::size_t n = index.size();
  const std::size_t picks = std::min(k, n);

  RetrievedContext out;
  out.ids.reserve(picks);
  out.positions.reserve(picks);
  out.scores.reserve(picks);

  std::vector<bool> taken(n, false);
  // max similarity of each candidate to the selected set
  std::vector<double> max_sim(n, 0.0);

  auto take = [&](std::size_t pos, double score) {
    taken[pos] = true;
    out.ids.push_back(index.id(pos));
    out.positions.push_back(pos);
    out.scores.push_back(score);
    const auto chosen = index.embedding(pos);
    const bool first = out.positions.size() == 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = dot(index.embedding(i), chosen);
      max_sim[i] = first ? s : std::max(max_sim[i], s);
    }
  };

  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (v[i] > v[best]) best = i;
  }
  take(best, v[best]);

  while (out.positions.size() < picks) {
    std::optional<std::size_t> arg;
    double arg_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double w = lambda_d * v[i] - (1.0 - lambda_d) * max_sim[i];
      if (!arg || w > arg_w) {
        arg = i;
        arg_w = w;
      }
    }
    take(*arg, arg_w);
  }
  return out;
}

RetrievedContext top_k_by_score(const CandidateIndex& index,
                                std::span<const double> scores,
                                std::size_t k) {
  if (index.empty()) fail(ErrorCode::kEmptyIndex, "candidate index is empty");
  if (scores.size() != index.size()) {
    fail(ErrorCode::kDimensionMismatch, "score count differs from index size");
  }
  std::vector<std::size_t> order(index.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  order.resize(std::min(k, order.size()));

  RetrievedContext out;
  for (std::size_t pos : order) {
    out.ids.push_back(index.id(pos));
    out.positions.push_back(pos);
    out.scores.push_back(scores[pos]);
  }
  return out;
}

RetrievedContext retrieve(const RetrieverConfig& config,
                          const CandidateIndex& index,
                          std::optional<std::span<const double>> query) {
  config.validate();
  switch (config.method) {
    case Method::kFix: {
      RetrievedContext out;
      std::unordered_set<std::string_view> seen;
      for (const auto& id : config.fixed_ids) {
        if (out.ids.size() == config.k) break;
        if (!seen.insert(id).second) continue;
        if (auto pos = index.find(id)) {
          out.ids.push_back(id);
          out.positions.push_back(*pos);
          out.scores.push_back(0.0);
        }
      }
      return out;
    }
    case Method::kBias: {
      std::vector<double> b(index.size());
      for (std::size_t i = 0; i < b.size(); ++i) b[i] = index.bias(i);
      return top_k_by_score(index, b, config.k);
    }
    default:
      break;
  }

  if (!query) {
    fail(ErrorCode::kMissingQuery,
         std::string("method ") + std::string(method_name(config.method)) +
             " requires a query embedding");
  }
  double lambda_d = 1.0;
  double lambda_b = 1.0;
  switch (config.method) {
    case Method::kRelBias:
      lambda_b = config.lambda_b;
      break;
    case Method::kRelDiv:
      lambda_d = config.lambda_d;
      break;
    case Method::kRelDivBias:
      lambda_d = config.lambda_d;
      lambda_b = config.lambda_b;
      break;
    default:
      break;
  }
  return mmr_select(index, *query, config.k, lambda_d, lambda_b,
                    config.rescale_bias);
}

}  // namespace iclr
