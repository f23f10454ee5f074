// Copyright 2026 The RefSeg Toolkit Authors.
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

#ifndef REFSEG_ERROR_H_
#define REFSEG_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace refseg {

// Every failure the library reports carries one of these codes so callers
// (CLI exit codes, HTTP status mapping, tests) can branch without parsing
// messages.
enum class ErrorCode {
  kDecodeError,
  kUnknownClassId,
  kEmptyIdSet,
  kWindowTooLarge,
  kNonSquareInput,
  kInvalidArgument,
  kIoError,
  kParseError,
  kDanglingClassId,
  kEmptyCategory,
  kConnectiveKindMismatch,
  kInvalidTaxonomy,
  kUnknownCategory,
  kUnknownAttribute,
  kUnknownRelation,
  kAttributeCategoryMismatch,
  kInvalidCombination,
  kUnrecognizedCategory,
  kUnrecognizedPhrase,
  kAmbiguousParse,
  kTooFewScenes,
  kUnknownTripletId,
  kDuplicateTripletId,
  kSplitOverlap,
  kMissingMaskFile,
  kDimMismatch,
  kEmptySampleSet,
  kMissingPrediction,
  kShapeMismatch,
  kNonFinite,
  kHeadDivisibility,
  kPatchDivisibility,
  kTooShort,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace refseg

#endif  // REFSEG_ERROR_H_
