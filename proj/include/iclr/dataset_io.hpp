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

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "iclr/core.hpp"

namespace iclr {

enum class DatasetFormat { kJsonl, kTruthfulQaCsv };

DatasetFormat parse_dataset_format(std::string_view name);

/// Guesses the format from the file extension (".csv" vs anything else).
DatasetFormat detect_dataset_format(const std::filesystem::path& path);

/// Canonical format: one {"question", "correct_answers", "incorrect_answers"}
/// object per line. Blank lines are skipped. Errors carry the line number.
std::vector<RawRecord> read_jsonl_records(std::istream& in);

/// TruthfulQA CSV. Answer lists are split on "; ". A "Best Answer" column,
/// when present, is placed first among the correct answers.
std::vector<RawRecord> read_truthfulqa_csv(std::istream& in);

std::vector<RawRecord> read_records(const std::filesystem::path& path,
                                    DatasetFormat format);

/// Serializes one record per line in canonical form. Writing the output of
/// read_jsonl_records() of a canonical file reproduces it byte for byte.
std::string to_canonical_jsonl(const std::vector<RawRecord>& records);

/// RFC 4180 CSV parsing (quoted fields, doubled quotes, embedded newlines).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace iclr
