// Copyright 2026 The kqpd Authors
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

namespace kqpd {

enum class ErrorCode {
  NotHermitian,
  NotUnitary,
  NotDensityMatrix,
  NotTracePreserving,
  NumericalFailure,
  DimMismatch,
  InvalidArgument,
  ScenarioTooLarge,
  ToleranceExceeded,
  NegativeDensity,
  GridTooCoarse,
  OverlapTooSmall,
  AliasingDetected,
  ZeroProbability,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NotUnitary: return "NotUnitary";
    case ErrorCode::NotDensityMatrix: return "NotDensityMatrix";
    case ErrorCode::NotTracePreserving: return "NotTracePreserving";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ScenarioTooLarge: return "ScenarioTooLarge";
    case ErrorCode::ToleranceExceeded: return "ToleranceExceeded";
    case ErrorCode::NegativeDensity: return "NegativeDensity";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::OverlapTooSmall: return "OverlapTooSmall";
    case ErrorCode::AliasingDetected: return "AliasingDetected";
    case ErrorCode::ZeroProbability: return "ZeroProbability";
  }
  return "Unknown";
}

/// Budget and tolerance failures are reported separately from malformed
/// input; the CLI maps them onto different exit codes.
constexpr bool is_budget_error(ErrorCode code) {
  return code == ErrorCode::ScenarioTooLarge || code == ErrorCode::ToleranceExceeded ||
         code == ErrorCode::AliasingDetected || code == ErrorCode::GridTooCoarse;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace kqpd
