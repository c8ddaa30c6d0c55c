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
#include <fstream>
#include <functional>
#include <string>

#include "iclr/error.hpp"
#include "iclr/text.hpp"
#include "json.hpp"

namespace iclr::detail {

/// Calls `fn` for each non-empty line parsed as JSON. A torn final line (an
/// interrupted append) is skipped; malformed earlier lines are IoErrors.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(const nlohmann::json&)>& fn) {
  if (!std::filesystem::exists(path)) return;
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      fail(ErrorCode::kIoError, path.string() + ":" + std::to_string(lineno) +
                                    ": " + e.what());
    }
  }
}

/// Opens for appending. A torn final line is truncated away first.
inline std::ofstream open_append(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
    const std::string body = read_file(path);
    if (body.back() != '\n') {
      const auto nl = body.rfind('\n');
      std::filesystem::resize_file(path, nl == std::string::npos ? 0 : nl + 1);
    }
  }
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

}  // namespace iclr::detail
