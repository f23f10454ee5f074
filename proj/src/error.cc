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

#include "refseg/error.h"

namespace refseg {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDecodeError: return "DecodeError";
    case ErrorCode::kUnknownClassId: return "UnknownClassId";
    case ErrorCode::kEmptyIdSet: return "EmptyIdSet";
    case ErrorCode::kWindowTooLarge: return "WindowTooLarge";
    case ErrorCode::kNonSquareInput: return "NonSquareInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDanglingClassId: return "DanglingClassId";
    case ErrorCode::kEmptyCategory: return "EmptyCategory";
    case ErrorCode::kConnectiveKindMismatch: return "ConnectiveKindMismatch";
    case ErrorCode::kInvalidTaxonomy: return "InvalidTaxonomy";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kUnknownAttribute: return "UnknownAttribute";
    case ErrorCode::kUnknownRelation: return "UnknownRelation";
    case ErrorCode::kAttributeCategoryMismatch:
      return "AttributeCategoryMismatch";
    case ErrorCode::kInvalidCombination: return "InvalidCombination";
    case ErrorCode::kUnrecognizedCategory: return "UnrecognizedCategory";
    case ErrorCode::kUnrecognizedPhrase: return "UnrecognizedPhrase";
    case ErrorCode::kAmbiguousParse: return "AmbiguousParse";
    case ErrorCode::kTooFewScenes: return "TooFewScenes";
    case ErrorCode::kUnknownTripletId: return "UnknownTripletId";
    case ErrorCode::kDuplicateTripletId: return "DuplicateTripletId";
    case ErrorCode::kSplitOverlap: return "SplitOverlap";
    case ErrorCode::kMissingMaskFile: return "MissingMaskFile";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kEmptySampleSet: return "EmptySampleSet";
    case ErrorCode::kMissingPrediction: return "MissingPrediction";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kHeadDivisibility: return "HeadDivisibility";
    case ErrorCode::kPatchDivisibility: return "PatchDivisibility";
    case ErrorCode::kTooShort: return "TooShort";
  }
  return "Unknown";
}

}  // namespace refseg
