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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "iclr/error.hpp"
#include "iclr/retrieval.hpp"
#include "synth.hpp"

using namespace iclr;
using testing::Instance;

namespace {

CandidateIndex make_index(std::vector<std::vector<double>> rows, std::vector<double> biases) {
  std::vector<std::string> ids;
  std::vector<double> flat;
  const std::size_t d = rows.empty() ? 0 : rows[0].size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back("d" + std::to_string(i));
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
  }
  return CandidateIndex(std::move(ids), d, std::move(flat), std::move(biases));
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

const std::vector<double> kX{1.0, 0.0};

}  // namespace

TEST_CASE("biased_relevance") {
  const double r = 1.0 / std::sqrt(2.0);
  const auto idx = make_index({{1, 0}, {0, 1}, {r, r}}, {-2.0, -1.0, -4.0});
  const auto v1 = biased_relevance(kX, idx, 1.0);
  CHECK(v1[0] == 1.0);
  CHECK(v1[1] == 0.0);
  CHECK(std::abs(v1[2] - r) < 1e-15);
  const auto v0 = biased_relevance(kX, idx, 0.0);
  CHECK(v0 == std::vector<double>{-2.0, -1.0, -4.0});
  const auto v = biased_relevance(kX, idx, 0.95);
  CHECK(std::abs(v[0] - 0.85) < 1e-12);
  const std::vector<double> q3{1, 0, 0};
  CHECK(code_of([&] { biased_relevance(q3, idx, 0.5); }) == ErrorCode::kDimensionMismatch);
  const std::vector<double> not_unit{2, 0};
  CHECK(code_of([&] { biased_relevance(not_unit, idx, 0.5); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("rescaled bias maps to [0, 1]") {
  const auto idx = make_index({{1, 0}, {1, 0}, {1, 0}}, {-6.0, -2.0, -4.0});
  const auto v = biased_relevance(kX, idx, 0.0, true);
  CHECK(v == std::vector<double>{0.0, 1.0, 0.5});
}

TEST_CASE("mmr_select hand trace") {
  const auto idx = make_index({{1, 0}, {1, 0}, {0, 1}}, {0, 0, 0});
  const auto ctx = mmr_select(idx, kX, 2, 0.4, 1.0);
  CHECK(ctx.positions == std::vector<std::size_t>{0, 2});
  CHECK(ctx.ids == std::vector<std::string>{"d0", "d2"});
  CHECK(ctx.scores[0] == 1.0);
  CHECK(ctx.scores[1] == 0.0);
  const auto all = mmr_select(idx, kX, 3, 0.4, 1.0);
  CHECK(all.positions == std::vector<std::size_t>{0, 2, 1});
  const auto more = mmr_select(idx, kX, 10, 0.4, 1.0);
  CHECK(more.positions.size() == 3);
}

TEST_CASE("mmr_select errors") {
  const auto empty = make_index({}, {});
  CHECK(code_of([&] { mmr_select(empty, {}, 2, 0.5, 0.5); }) == ErrorCode::kEmptyIndex);
  const auto idx = make_index({{1, 0}}, {0});
  CHECK(code_of([&] { mmr_select(idx, kX, 0, 0.5, 0.5); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { mmr_select(idx, kX, 1, 1.5, 0.5); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { mmr_select(idx, kX, 1, 0.5, -0.1); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { make_index({{2, 0}}, {0}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { make_index({{1, 0}}, {0, 1}); }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("mmr_select equals brute-force greedy oracle") {
  std::mt19937_64 rng(2024);
  const double grid[] = {0, 0.25, 0.5, 0.75, 1};
  std::uniform_int_distribution<std::size_t> n_d(1, 12), d_d(1, 8), k_d(1, 6), g_d(0, 4);
  for (int t = 0; t < 300; ++t) {
    const Instance inst = testing::random_instance(rng, n_d(rng), d_d(rng));
    const std::size_t k = k_d(rng);
    const double ld = grid[g_d(rng)], lb = grid[g_d(rng)];
    const auto got = mmr_select(inst.index(), inst.query, k, ld, lb);
    CHECK(got.positions == testing::oracle_greedy(inst, k, ld, lb));
    const std::set<std::string> distinct(got.ids.begin(), got.ids.end());
    CHECK(distinct.size() == got.ids.size());
    CHECK(got.ids.size() == std::min(k, inst.n));
  }
}

TEST_CASE("first pick is argmax v for every lambda_d") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const Instance inst = testing::random_instance(rng, 20, 6);
    const auto idx = inst.index();
    const auto v = biased_relevance(inst.query, idx, 0.8);
    const auto best = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    for (double ld : {0.0, 0.3, 0.7, 1.0}) {
      CHECK(mmr_select(idx, inst.query, 4, ld, 0.8).positions.front() == best);
    }
  }
}

TEST_CASE("permutation equivariance") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 100; ++t) {
    const Instance inst = testing::random_instance(rng, 10, 5);
    std::vector<std::size_t> perm(inst.n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Instance p = inst;
    p.rows.clear();
    p.biases.clear();
    for (std::size_t i : perm) {
      p.rows.insert(p.rows.end(), inst.rows.begin() + static_cast<long>(i * inst.d),
                    inst.rows.begin() + static_cast<long>((i + 1) * inst.d));
      p.biases.push_back(inst.biases[i]);
    }
    const auto a = mmr_select(inst.index(), inst.query, 5, 0.6, 0.9);
    const auto b = mmr_select(p.index(), p.query, 5, 0.6, 0.9);
    REQUIRE(a.positions.size() == b.positions.size());
    for (std::size_t s = 0; s < a.positions.size(); ++s) {
      CHECK(perm[b.positions[s]] == a.positions[s]);
    }
  }
}

TEST_CASE("lambda_d = lambda_b = 1 is exhaustive top-k cosine") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const Instance inst = testing::random_instance(rng, 1 + t % 30, 1 + t % 8);
    const std::size_t k = 1 + t % 7;
    CHECK(mmr_select(inst.index(), inst.query, k, 1.0, 1.0).positions ==
          testing::oracle_top_k_cosine(inst, k));
  }
}

TEST_CASE("top_k_by_score") {
  const auto idx = make_index({{1, 0}, {1, 0}, {1, 0}}, {0, 0, 0});
  const std::vector<double> s{0.1, 0.9, 0.5};
  CHECK(top_k_by_score(idx, s, 2).positions == std::vector<std::size_t>{1, 2});
  const std::vector<double> eq{0.3, 0.3, 0.3};
  CHECK(top_k_by_score(idx, eq, 2).positions == std::vector<std::size_t>{0, 1});
  CHECK(top_k_by_score(idx, s, 9).positions.size() == 3);
  const auto empty = make_index({}, {});
  CHECK(code_of([&] { top_k_by_score(empty, {}, 1); }) == ErrorCode::kEmptyIndex);
}

TEST_CASE("retrieve dispatch") {
  std::mt19937_64 rng(8);
  const Instance inst = testing::random_instance(rng, 12, 4);
  const auto idx = inst.index();
  RetrieverConfig cfg;
  cfg.k = 4;

  cfg.method = Method::kRel;
  const auto rel = retrieve(cfg, idx, inst.query);
  cfg.method = Method::kRelDiv;
  cfg.lambda_d = 1.0;
  CHECK(retrieve(cfg, idx, inst.query).positions == rel.positions);
  CHECK(rel.positions == mmr_select(idx, inst.query, 4, 1.0, 1.0).positions);

  cfg.lambda_d = 0.6;
  cfg.lambda_b = 0.7;
  cfg.method = Method::kRelDivBias;
  CHECK(retrieve(cfg, idx, inst.query).positions ==
        mmr_select(idx, inst.query, 4, 0.6, 0.7).positions);
  cfg.method = Method::kRelBias;
  CHECK(retrieve(cfg, idx, inst.query).positions ==
        mmr_select(idx, inst.query, 4, 1.0, 0.7).positions);
  cfg.method = Method::kRelDiv;
  CHECK(retrieve(cfg, idx, inst.query).positions ==
        mmr_select(idx, inst.query, 4, 0.6, 1.0).positions);

  cfg.method = Method::kRel;
  CHECK(code_of([&] { retrieve(cfg, idx, std::nullopt); }) == ErrorCode::kMissingQuery);
}

TEST_CASE("retrieve Bias ranks by raw bias and matches lambda_b = 0") {
  const auto idx = make_index({{1, 0}, {0, 1}, {1, 0}}, {-1, -3, -2});
  RetrieverConfig cfg;
  cfg.method = Method::kBias;
  cfg.k = 2;
  const auto ctx = retrieve(cfg, idx, std::nullopt);
  CHECK(ctx.positions == std::vector<std::size_t>{0, 2});
  CHECK(mmr_select(idx, kX, 2, 1.0, 0.0).positions == ctx.positions);
}

TEST_CASE("retrieve Fix") {
  const auto idx = make_index({{1, 0}, {0, 1}, {1, 0}}, {0, 0, 0});
  RetrieverConfig cfg;
  cfg.method = Method::kFix;
  cfg.fixed_ids = {"d2", "absent", "d0", "d2"};
  const auto ctx = retrieve(cfg, idx, std::nullopt);
  CHECK(ctx.ids == std::vector<std::string>{"d2", "d0"});
  CHECK(ctx.positions == std::vector<std::size_t>{2, 0});
  cfg.k = 1;
  CHECK(retrieve(cfg, idx, std::nullopt).ids == std::vector<std::string>{"d2"});
  cfg.fixed_ids.clear();
  CHECK(code_of([&] { retrieve(cfg, idx, std::nullopt); }) == ErrorCode::kMissingFixedIds);
}

TEST_CASE("method names") {
  for (Method m : kAllMethods) CHECK(parse_method(method_name(m)) == m);
  CHECK(parse_method("rel_div_bias") == Method::kRelDivBias);
  CHECK(parse_method("RelBias") == Method::kRelBias);
  CHECK(method_name(Method::kRelDivBias) == "Rel+Div+Bias");
  CHECK(code_of([] { parse_method("knn"); }) == ErrorCode::kInvalidArgument);
  CHECK(!method_uses_query(Method::kFix));
  CHECK(!method_uses_query(Method::kBias));
  CHECK(method_uses_bias(Method::kRelDivBias));
  CHECK(!method_uses_bias(Method::kRelDiv));
}

TEST_CASE("subset keeps rows of the shared table") {
  std::mt19937_64 rng(1);
  const Instance inst = testing::random_instance(rng, 6, 3);
  const auto idx = inst.index();
  const auto sub = idx.subset({5, 1, 3});
  CHECK(sub.size() == 3);
  CHECK(sub.id(0) == "c5");
  CHECK(sub.row(2) == 3);
  CHECK(sub.find("c1") == std::optional<std::size_t>(1));
  CHECK(!sub.find("c0"));
  CHECK(code_of([&] { idx.subset({6}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("diversity decreases with lambda_d on average") {
  double low = 0.0, high = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const Instance inst = testing::random_instance(rng, 50, 8);
    const auto idx = inst.index();
    low += testing::oracle_avg_similarity(inst, mmr_select(idx, inst.query, 6, 0.0, 1.0).positions);
    high += testing::oracle_avg_similarity(inst, mmr_select(idx, inst.query, 6, 1.0, 1.0).positions);
  }
  CHECK(low < high);
}
