// Copyright 2026 The Trayguard Authors
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

namespace trayguard {

enum class ErrorCode {
  kInvalidGeometry,
  kInvalidParameter,
  kInvalidProblem,
  kConfig,
  kNoData,
  kPlannerStuck,
  kIkFailure,
  kStitch,
  kIo,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidGeometry: return "invalid-geometry";
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kInvalidProblem: return "invalid-problem";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kNoData: return "no-data";
    case ErrorCode::kPlannerStuck: return "planner-stuck";
    case ErrorCode::kIkFailure: return "ik-failure";
    case ErrorCode::kStitch: return "stitch-error";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

// Thrown for contract violations and unrecoverable configuration problems.
// Solver outcomes (infeasible, iteration cap) are reported through status
// enums instead.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace trayguard
