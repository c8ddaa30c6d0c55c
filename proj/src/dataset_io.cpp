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

#include "iclr/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "iclr/error.hpp"
#include "iclr/text.hpp"
#include "json.hpp"

namespace iclr {
namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
  fail(ErrorCode::kMalformedRecord,
       "line " + std::to_string(line) + ": " + why);
}

std::vector<std::string> string_list(const ordered_json& obj,
                                     const char* key, std::size_t line,
                                     bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) malformed(line, std::string("missing \"") + key + "\"");
    return {};
  }
  if (!it->is_array()) malformed(line, std::string("\"") + key + "\" is not a list");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) {
      malformed(line, std::string("\"") + key + "\" contains a non-string");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::vector<std::string> split_answers(std::string_view field) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= field.size()) {
    std::size_t sep = field.find("; ", start);
    std::string_view piece = field.substr(
        start, sep == std::string_view::npos ? std::string_view::npos
                                             : sep - start);
    std::string t = trim(piece);
    // A trailing ';' without a following space is a list terminator.
    if (!t.empty() && t.back() == ';' && sep == std::string_view::npos) {
      t = trim(std::string_view(t).substr(0, t.size() - 1));
    }
    if (!t.empty()) out.push_back(std::move(t));
    if (sep == std::string_view::npos) break;
    start = sep + 2;
  }
  return out;
}

}  // namespace

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "jsonl") return DatasetFormat::kJsonl;
  if (name == "truthfulqa-csv" || name == "csv") {
    return DatasetFormat::kTruthfulQaCsv;
  }
  fail(ErrorCode::kInvalidArgument,
       "unknown dataset format '" + std::string(name) + "'");
}

DatasetFormat detect_dataset_format(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? DatasetFormat::kTruthfulQaCsv : DatasetFormat::kJsonl;
}

std::vector<RawRecord> read_jsonl_records(std::istream& in) {
  std::vector<RawRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ordered_json obj;
    try {
      obj = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      malformed(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) malformed(lineno, "not a JSON object");
    auto q = obj.find("question");
    if (q == obj.end() || !q->is_string()) {
      malformed(lineno, "missing string \"question\"");
    }
    RawRecord r;
    r.question = q->get<std::string>();
    r.correct_answers = string_list(obj, "correct_answers", lineno, true);
    r.incorrect_answers = string_list(obj, "incorrect_answers", lineno, false);
    if (trim(r.question).empty()) malformed(lineno, "empty question");
    if (r.correct_answers.empty()) malformed(lineno, "no correct answers");
    for (const auto& a : r.correct_answers) {
      if (trim(a).empty()) malformed(lineno, "empty correct answer");
    }
    for (const auto& a : r.incorrect_answers) {
      if (trim(a).empty()) malformed(lineno, "empty incorrect answer");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        field_started = false;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    fail(ErrorCode::kMalformedRecord,
         "line " + std::to_string(rows.size() + 1) + ": unterminated quote");
  }
  if (field_started || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RawRecord> read_truthfulqa_csv(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto rows = parse_csv(buf.str());
  if (rows.empty()) fail(ErrorCode::kMalformedRecord, "line 1: empty CSV");

  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };
  const auto q_col = column("Question");
  const auto c_col = column("Correct Answers");
  const auto i_col = column("Incorrect Answers");
  const auto b_col = column("Best Answer");
  if (q_col < 0 || c_col < 0 || i_col < 0) {
    fail(ErrorCode::kMalformedRecord,
         "line 1: header must contain Question, Correct Answers and "
         "Incorrect Answers");
  }

  std::vector<RawRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && trim(row[0]).empty()) continue;
    auto cell = [&](std::ptrdiff_t col) -> std::string_view {
      if (col < 0 || static_cast<std::size_t>(col) >= row.size()) return {};
      return row[static_cast<std::size_t>(col)];
    };
    // Row numbers count data rows, header is row 1.
    const std::size_t rowno = r + 1;
    RawRecord rec;
    rec.question = trim(cell(q_col));
    if (rec.question.empty()) malformed(rowno, "empty question");

    std::set<std::string> seen;
    if (b_col >= 0) {
      std::string best = trim(cell(b_col));
      if (!best.empty()) {
        seen.insert(normalize_text(best));
        rec.correct_answers.push_back(std::move(best));
      }
    }
    for (auto& a : split_answers(cell(c_col))) {
      if (seen.insert(normalize_text(a)).second) {
        rec.correct_answers.push_back(std::move(a));
      }
    }
    rec.incorrect_answers = split_answers(cell(i_col));
    if (rec.correct_answers.empty()) malformed(rowno, "no correct answers");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawRecord> read_records(const std::filesystem::path& path,
                                    DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  return format == DatasetFormat::kJsonl ? read_jsonl_records(in)
                                         : read_truthfulqa_csv(in);
}

std::string to_canonical_jsonl(const std::vector<RawRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json obj;
    obj["question"] = r.question;
    obj["correct_answers"] = r.correct_answers;
    obj["incorrect_answers"] = r.incorrect_answers;
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace iclr
