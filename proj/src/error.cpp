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

#include "iclr/error.hpp"

namespace iclr {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kMissingQuery: return "MissingQuery";
    case ErrorCode::kMissingFixedIds: return "MissingFixedIds";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kBackendRejected: return "BackendRejected";
    case ErrorCode::kTokenizationMismatch: return "TokenizationMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kTooFewItems: return "TooFewItems";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kMissingBias: return "MissingBias";
    case ErrorCode::kEmbeddingSourceError: return "EmbeddingSourceError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kLeaveOneOutViolation: return "LeaveOneOutViolation";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace iclr
