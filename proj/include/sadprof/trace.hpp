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

// Method-call execution traces and the .trc wire format:
//
//   APP <app_id> <BENIGN|MALICIOUS|UNLABELED> <year>
//   CALL <seq> <caller_sig> <site_index> <callee_sig>
//   ...
//
// Fields are separated by exactly one space. Lines starting with '#' and
// blank lines are ignored.

#ifndef SADPROF_TRACE_HPP_
#define SADPROF_TRACE_HPP_

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sadprof/error.hpp"
#include "sadprof/text.hpp"

namespace sadprof {

// Canonical method signature, e.g. "pkg.Cls.method(int)void". Construction
// does not validate; use IsValid() or ValidateTrace().
class MethodSig {
 public:
  MethodSig() = default;
  explicit MethodSig(std::string value) : value_(std::move(value)) {}

  const std::string& str() const noexcept { return value_; }
  bool IsValid() const noexcept {
    return !value_.empty() && !text::HasWhitespace(value_);
  }

  friend auto operator<=>(const MethodSig&, const MethodSig&) = default;

 private:
  std::string value_;
};

enum class Label { kBenign, kMalicious, kUnlabeled };

constexpr std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kBenign:
      return "BENIGN";
    case Label::kMalicious:
      return "MALICIOUS";
    case Label::kUnlabeled:
      return "UNLABELED";
  }
  return "UNLABELED";
}

inline std::optional<Label> ParseLabel(std::string_view s) {
  if (s == "BENIGN")
    return Label::kBenign;
  if (s == "MALICIOUS")
    return Label::kMalicious;
  if (s == "UNLABELED")
    return Label::kUnlabeled;
  return std::nullopt;
}

struct CallRecord {
  std::uint64_t seq = 0;
  MethodSig caller;
  std::uint64_t site_index = 0;
  MethodSig callee;

  friend bool operator==(const CallRecord&, const CallRecord&) = default;
};

struct Trace {
  std::string app_id;
  Label label = Label::kUnlabeled;
  int year = 0;
  std::vector<CallRecord> records;

  friend bool operator==(const Trace&, const Trace&) = default;
};

inline Trace ParseTrace(std::string_view input) {
  Trace trace;
  bool have_header = false;
  size_t line_no = 0;
  for (std::string_view line : text::SplitLines(input)) {
    ++line_no;
    if (text::IsCommentOrBlank(line))
      continue;
    auto fields = text::Split(line, ' ');
    const std::string where = "line " + std::to_string(line_no);
    if (!have_header) {
      if (fields.size() != 4 || fields[0] != "APP" || fields[1].empty() ||
          text::HasWhitespace(fields[1]))
        throw Error(ErrorCode::kMalformedHeader,
                    where + ": expected 'APP <app_id> <label> <year>'");
      auto label = ParseLabel(fields[2]);
      if (!label)
        throw Error(ErrorCode::kMalformedHeader,
                    where + ": unknown label '" + std::string(fields[2]) + "'");
      auto year = text::ParseInt<int>(fields[3]);
      if (!year)
        throw Error(ErrorCode::kMalformedHeader,
                    where + ": year is not an integer");
      trace.app_id = std::string(fields[1]);
      trace.label = *label;
      trace.year = *year;
      have_header = true;
      continue;
    }
    if (fields.size() != 5 || fields[0] != "CALL")
      throw Error(ErrorCode::kMalformedRecord,
                  where + ": expected 'CALL <seq> <caller> <site> <callee>'");
    auto seq = text::ParseInt<std::uint64_t>(fields[1]);
    auto site = text::ParseInt<std::uint64_t>(fields[3]);
    if (!seq || *seq == 0)
      throw Error(ErrorCode::kMalformedRecord,
                  where + ": seq must be a positive integer");
    if (!site)
      throw Error(ErrorCode::kMalformedRecord,
                  where + ": site_index must be a non-negative integer");
    if (fields[2].empty() || fields[4].empty() ||
        text::HasWhitespace(fields[2]) || text::HasWhitespace(fields[4]))
      throw Error(ErrorCode::kMalformedRecord,
                  where + ": empty or malformed method signature");
    if (!trace.records.empty() && *seq <= trace.records.back().seq)
      throw Error(ErrorCode::kNonMonotonicSeq,
                  where + ": seq " + std::to_string(*seq) + " after " +
                      std::to_string(trace.records.back().seq));
    trace.records.push_back(CallRecord{*seq, MethodSig(std::string(fields[2])),
                                       *site,
                                       MethodSig(std::string(fields[4]))});
  }
  if (!have_header)
    throw Error(ErrorCode::kMalformedHeader, "missing APP header");
  if (trace.records.empty())
    throw Error(ErrorCode::kEmptyTrace,
                "trace '" + trace.app_id + "' has no CALL records");
  return trace;
}

inline std::string SerializeTrace(const Trace& trace) {
  std::string out;
  out += "APP " + trace.app_id + " " + std::string(LabelName(trace.label)) +
         " " + std::to_string(trace.year) + "\n";
  for (const CallRecord& r : trace.records) {
    out += "CALL ";
    out += std::to_string(r.seq);
    out += ' ';
    out += r.caller.str();
    out += ' ';
    out += std::to_string(r.site_index);
    out += ' ';
    out += r.callee.str();
    out += '\n';
  }
  return out;
}

struct Finding {
  std::uint64_t seq = 0;  // 0 when the finding concerns the whole trace.
  std::string message;
};

// Lint pass over an in-memory trace. Returns no findings iff every trace
// invariant holds.
inline std::vector<Finding> ValidateTrace(const Trace& trace) {
  std::vector<Finding> findings;
  if (trace.app_id.empty() || text::HasWhitespace(trace.app_id))
    findings.push_back({0, "app_id is empty or contains whitespace"});
  if (trace.records.empty())
    findings.push_back({0, "trace has no records"});
  std::unordered_set<std::uint64_t> seen;
  std::optional<std::uint64_t> prev;
  for (const CallRecord& r : trace.records) {
    const std::string at = "seq " + std::to_string(r.seq);
    if (r.seq == 0)
      findings.push_back({r.seq, "seq must be positive"});
    if (!seen.insert(r.seq).second)
      findings.push_back({r.seq, "duplicate " + at});
    else if (prev && r.seq < *prev)
      findings.push_back({r.seq, at + " is out of order"});
    if (!r.caller.IsValid())
      findings.push_back({r.seq, at + ": caller signature is empty or has "
                                      "whitespace"});
    if (!r.callee.IsValid())
      findings.push_back({r.seq, at + ": callee signature is empty or has "
                                      "whitespace"});
    prev = r.seq;
  }
  return findings;
}

}  // namespace sadprof

template <>
struct std::hash<sadprof::MethodSig> {
  size_t operator()(const sadprof::MethodSig& m) const noexcept {
    return std::hash<std::string>()(m.str());
  }
};

#endif  // SADPROF_TRACE_HPP_
