// Copyright 2026 The qoda Authors
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

namespace qoda {

enum class ErrorCode {
  // levels
  kEmptySequence,
  kBadEndpoints,
  kNotSorted,
  kBadFamily,
  // quantizer
  kOutOfRange,
  kDimensionMismatch,
  kNonFinite,
  kIndexOutOfRange,
  // codec
  kInvalidHistogram,
  kInvalidCdf,
  kEmptyAlphabet,
  kCodeTooLong,
  kMissingCodeword,
  kTruncatedMessage,
  kInvalidCodeword,
  kTrailingBits,
  // adapt
  kAllZeroSamples,
  kBudgetTooLarge,
  kDegenerateSample,
  // vi
  kBadDimension,
  kNotMonotone,
  kBadConstant,
  // solver
  kBadQHat,
  // runner
  kParseError,
  kUnknownPreset,
  kIncomparableConfigs,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptySequence: return "EmptySequence";
    case ErrorCode::kBadEndpoints: return "BadEndpoints";
    case ErrorCode::kNotSorted: return "NotSorted";
    case ErrorCode::kBadFamily: return "BadFamily";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidHistogram: return "InvalidHistogram";
    case ErrorCode::kInvalidCdf: return "InvalidCdf";
    case ErrorCode::kEmptyAlphabet: return "EmptyAlphabet";
    case ErrorCode::kCodeTooLong: return "CodeTooLong";
    case ErrorCode::kMissingCodeword: return "MissingCodeword";
    case ErrorCode::kTruncatedMessage: return "TruncatedMessage";
    case ErrorCode::kInvalidCodeword: return "InvalidCodeword";
    case ErrorCode::kTrailingBits: return "TrailingBits";
    case ErrorCode::kAllZeroSamples: return "AllZeroSamples";
    case ErrorCode::kBudgetTooLarge: return "BudgetTooLarge";
    case ErrorCode::kDegenerateSample: return "DegenerateSample";
    case ErrorCode::kBadDimension: return "BadDimension";
    case ErrorCode::kNotMonotone: return "NotMonotone";
    case ErrorCode::kBadConstant: return "BadConstant";
    case ErrorCode::kBadQHat: return "BadQHat";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnknownPreset: return "UnknownPreset";
    case ErrorCode::kIncomparableConfigs: return "IncomparableConfigs";
  }
  return "Unknown";
}

/// Every failure in the library surfaces as this exception; `code()` is the
/// stable, testable part and `what()` carries a human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace qoda
