/*
 * Copyright 2026 The fairscl Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fairscl/error.hpp"

namespace fairscl {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kUndefinedMetric: return "undefined-metric";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kNanGuard: return "nan-guard";
    case ErrorKind::kPretrainingInfeasible: return "pretraining-infeasible";
    case ErrorKind::kBootstrapInfeasible: return "bootstrap-infeasible";
    case ErrorKind::kSeparation: return "separation";
    case ErrorKind::kRank: return "rank";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kSchema:
    case ErrorKind::kValidation:
    case ErrorKind::kParse:
      return kExitData;
    case ErrorKind::kUndefinedMetric:
    case ErrorKind::kNanGuard:
    case ErrorKind::kPretrainingInfeasible:
    case ErrorKind::kBootstrapInfeasible:
    case ErrorKind::kSeparation:
    case ErrorKind::kRank:
      return kExitTraining;
    case ErrorKind::kIo:
      return kExitIo;
    case ErrorKind::kContract:
    case ErrorKind::kShape:
      return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace fairscl
