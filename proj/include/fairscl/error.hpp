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

#ifndef FAIRSCL_ERROR_HPP_
#define FAIRSCL_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairscl {

enum class ErrorKind {
  kConfig,
  kSchema,
  kValidation,
  kParse,
  kUndefinedMetric,
  kContract,
  kShape,
  kNanGuard,
  kPretrainingInfeasible,
  kBootstrapInfeasible,
  kSeparation,
  kRank,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

// Every failure raised by the library. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit codes used by the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitTraining = 4,
  kExitIo = 5,
};

int ExitCodeFor(ErrorKind kind);

}  // namespace fairscl

#endif  // FAIRSCL_ERROR_HPP_
