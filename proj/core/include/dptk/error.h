// Copyright 2026 The dp_toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPTK_ERROR_H_
#define DPTK_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dptk {

enum class ErrorCode {
  kDomainError,
  kInvalidOrder,
  kNonFiniteIntegrand,
  kQuadratureFailure,
  kEmptyLedger,
  kUnachievable,
  kMonotonicityViolation,
  kNonFiniteInput,
  kShapeMismatch,
  kEmptyDataset,
  kEmptySample,
  kConfigError,
  kBadMagic,
  kCountMismatch,
  kTruncatedFile,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// All toolkit failures are reported as an Error carrying a machine-readable
// code; what() is "<CodeName>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace dptk

#endif  // DPTK_ERROR_H_
