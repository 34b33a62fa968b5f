// Copyright 2026 The ECAvg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "ecavg/error.h"

namespace ecavg {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArchitecture: return "invalid-architecture";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kLabel: return "label";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kConsistency: return "consistency";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kSpec: return "split-spec";
    case ErrorCode::kNotImplemented: return "not-implemented";
    case ErrorCode::kIncompatibleModels: return "incompatible-models";
    case ErrorCode::kArity: return "arity";
    case ErrorCode::kSurgery: return "surgery";
    case ErrorCode::kEvaluation: return "evaluation";
    case ErrorCode::kEmptyEvaluation: return "empty-evaluation";
    case ErrorCode::kFrame: return "frame";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kReport: return "report";
  }
  return "unknown";
}

void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ecavg
