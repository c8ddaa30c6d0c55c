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
#include <string>
#include <string_view>

namespace iclr {

/// Strips leading and trailing ASCII/Unicode whitespace.
std::string trim(std::string_view text);

/// Canonical form used for every text-equality decision in the library:
/// Unicode NFC followed by whitespace trim. Input must be valid UTF-8.
std::string normalize_text(std::string_view text);

/// Lowercase hex SHA-256 of the raw bytes.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of the canonical form of `text`. Used as the embedding key.
std::string text_hash(std::string_view text);

std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace iclr
