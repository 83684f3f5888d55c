/*
 * Copyright (C) 2026 The sadprof Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SADPROF_ERROR_HPP_
#define SADPROF_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sadprof {

// Every failure raised by the library carries one of these codes. The CLI
// prints the code name so scripts can match on it.
enum class ErrorCode {
  // Trace files.
  kMalformedHeader,
  kMalformedRecord,
  kNonMonotonicSeq,
  kEmptyTrace,
  // Catalog files.
  kUnknownCategory,
  kDuplicateConflictingEntry,
  kMalformedLine,
  // Forest training and model files.
  kSingleClassTrainingSet,
  kEmptySamples,
  kUnsupportedVersion,
  kCorruptModel,
  // Evaluation.
  kTooFewSamples,
  kGroupTooSmall,
  // Synthetic corpora.
  kInconsistentTemplate,
  kMalformedSpec,
  // Shared plumbing.
  kMalformedCsv,
  kIoError,
};

constexpr std::string_view ErrorName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedHeader:
      return "MalformedHeader";
    case ErrorCode::kMalformedRecord:
      return "MalformedRecord";
    case ErrorCode::kNonMonotonicSeq:
      return "NonMonotonicSeq";
    case ErrorCode::kEmptyTrace:
      return "EmptyTrace";
    case ErrorCode::kUnknownCategory:
      return "UnknownCategory";
    case ErrorCode::kDuplicateConflictingEntry:
      return "DuplicateConflictingEntry";
    case ErrorCode::kMalformedLine:
      return "MalformedLine";
    case ErrorCode::kSingleClassTrainingSet:
      return "SingleClassTrainingSet";
    case ErrorCode::kEmptySamples:
      return "EmptySamples";
    case ErrorCode::kUnsupportedVersion:
      return "UnsupportedVersion";
    case ErrorCode::kCorruptModel:
      return "CorruptModel";
    case ErrorCode::kTooFewSamples:
      return "TooFewSamples";
    case ErrorCode::kGroupTooSmall:
      return "GroupTooSmall";
    case ErrorCode::kInconsistentTemplate:
      return "InconsistentTemplate";
    case ErrorCode::kMalformedSpec:
      return "MalformedSpec";
    case ErrorCode::kMalformedCsv:
      return "MalformedCsv";
    case ErrorCode::kIoError:
      return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return ErrorName(code_); }

 private:
  ErrorCode code_;
};

}  // namespace sadprof

#endif  // SADPROF_ERROR_HPP_
