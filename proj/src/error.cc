// Copyright 2026 The OutlierNet Authors.
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

#include "outliernet/error.h"

namespace outliernet {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kUnsupportedEncoding: return "unsupported-encoding";
    case ErrorCode::kSampleRateMismatch: return "sample-rate-mismatch";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kDegenerateStats: return "degenerate-stats";
    case ErrorCode::kTrainingDiverged: return "training-diverged";
    case ErrorCode::kSingleClass: return "single-class";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kWeightCountMismatch: return "weight-count-mismatch";
    case ErrorCode::kSearchExhausted: return "search-exhausted";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace outliernet
