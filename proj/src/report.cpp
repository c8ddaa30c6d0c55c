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

#include <cstdio>

#include "iclr/metrics.hpp"
#include "json.hpp"

namespace iclr {
namespace {

nlohmann::ordered_json report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["k"] = r.k;
  j["lambda_d"] = r.lambda_d;
  j["lambda_b"] = r.lambda_b;
  j["dpo"] = r.dpo;
  j["mc1"] = r.mc1;
  j["mc2"] = r.mc2;
  j["mc3"] = r.mc3;
  j["n_examples"] = r.n_examples;
  j["n_triplets"] = r.n_triplets;
  j["n_mc_skipped"] = r.n_mc_skipped;
  j["n_dropped"] = r.n_dropped;
  j["dropped_ids"] = r.dropped_ids;
  j["mc1_standard_error"] = r.mc1_standard_error;
  return j;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string MetricsReport::to_json() const { return report_json(*this).dump(2); }

std::string to_json(std::span<const MetricsReport> reports) {
  nlohmann::ordered_json j;
  j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["reports"].push_back(report_json(r));
  return j.dump(2);
}

std::string to_markdown(std::span<const MetricsReport> reports) {
  std::string out = "| Method | DPO | MC1 | MC2 | MC3 |\n|---|---:|---:|---:|---:|\n";
  for (const auto& r : reports) {
    out += "| " + r.method + " | " + fixed(r.dpo, 2) + " | " + fixed(r.mc1, 4) +
           " | " + fixed(r.mc2, 4) + " | " + fixed(r.mc3, 4) + " |\n";
  }
  return out;
}

}  // namespace iclr
