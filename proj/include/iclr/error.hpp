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

#include <stdexcept>
#include <string>
#include <string_view>

namespace iclr {

// Numeric values are part of the C ABI (see iclr.h) and must not change.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kZeroVector = 2,
  kDimensionMismatch = 3,
  kMalformedRecord = 4,
  kEmptyIndex = 5,
  kMissingQuery = 6,
  kMissingFixedIds = 7,
  kBackendUnavailable = 8,
  kBackendRejected = 9,
  kTokenizationMismatch = 10,
  kEmptyInput = 11,
  kTooFewItems = 12,
  kMissingEmbedding = 13,
  kMissingBias = 14,
  kEmbeddingSourceError = 15,
  kIoError = 16,
  kLeaveOneOutViolation = 17,
  kInternal = 99,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures a caller may retry (transport-level backend errors).
  bool retryable() const noexcept {
    return code_ == ErrorCode::kBackendUnavailable;
  }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace iclr
