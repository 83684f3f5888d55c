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

// Categorized source/sink API lists (.ssl files):
//
//   SOURCE <category> <signature>
//   SINK <category> <signature>
//
// Lookups are exact signature matches.

#ifndef SADPROF_CATALOG_HPP_
#define SADPROF_CATALOG_HPP_

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sadprof/error.hpp"
#include "sadprof/text.hpp"
#include "sadprof/trace.hpp"

namespace sadprof {

// Enumerator order is the canonical feature order.
enum class SourceCategory {
  kAccount,
  kCalendar,
  kLocation,
  kNetworkInfo,
  kSystemConfig,
};

enum class SinkCategory {
  kAccountSetting,
  kFileOperation,
  kLogging,
  kNetworkAccess,
  kMessaging,
  kSystemSetting,
};

inline constexpr size_t kNumSourceCategories = 5;
inline constexpr size_t kNumSinkCategories = 6;

inline constexpr std::array<std::string_view, kNumSourceCategories>
    kSourceCategoryNames = {"Account", "Calendar", "Location", "NetworkInfo",
                            "SystemConfig"};
inline constexpr std::array<std::string_view, kNumSinkCategories>
    kSinkCategoryNames = {"AccountSetting", "FileOperation", "Logging",
                          "NetworkAccess",  "Messaging",     "SystemSetting"};

enum class ApiRole { kNeither, kSource, kSink };

// Result of a catalog lookup. `category` indexes kSourceCategoryNames or
// kSinkCategoryNames depending on `role`; it is 0 for kNeither.
struct ApiClass {
  ApiRole role = ApiRole::kNeither;
  size_t category = 0;

  static ApiClass Source(SourceCategory c) {
    return {ApiRole::kSource, static_cast<size_t>(c)};
  }
  static ApiClass Sink(SinkCategory c) {
    return {ApiRole::kSink, static_cast<size_t>(c)};
  }

  bool is_source() const { return role == ApiRole::kSource; }
  bool is_sink() const { return role == ApiRole::kSink; }

  friend bool operator==(const ApiClass&, const ApiClass&) = default;
};

inline std::optional<SourceCategory> ParseSourceCategory(std::string_view s) {
  for (size_t i = 0; i < kSourceCategoryNames.size(); ++i) {
    if (kSourceCategoryNames[i] == s)
      return static_cast<SourceCategory>(i);
  }
  return std::nullopt;
}

inline std::optional<SinkCategory> ParseSinkCategory(std::string_view s) {
  for (size_t i = 0; i < kSinkCategoryNames.size(); ++i) {
    if (kSinkCategoryNames[i] == s)
      return static_cast<SinkCategory>(i);
  }
  return std::nullopt;
}

// Immutable once built. A signature maps to at most one role, which makes the
// source/sink/neither partition hold by construction.
class SourceSinkCatalog {
 public:
  // Re-adding an identical entry is a no-op; a conflicting one throws
  // DuplicateConflictingEntry.
  void Add(const MethodSig& sig, ApiClass cls) {
    auto [it, inserted] = entries_.emplace(sig.str(), cls);
    if (!inserted && !(it->second == cls))
      throw Error(ErrorCode::kDuplicateConflictingEntry,
                  "'" + sig.str() + "' listed with conflicting role/category");
    if (inserted)
      ++(cls.is_source() ? num_sources_ : num_sinks_);
  }
  void AddSource(std::string sig, SourceCategory c) {
    Add(MethodSig(std::move(sig)), ApiClass::Source(c));
  }
  void AddSink(std::string sig, SinkCategory c) {
    Add(MethodSig(std::move(sig)), ApiClass::Sink(c));
  }

  ApiClass Classify(const MethodSig& callee) const {
    auto it = entries_.find(callee.str());
    return it == entries_.end() ? ApiClass{} : it->second;
  }

  size_t num_sources() const { return num_sources_; }
  size_t num_sinks() const { return num_sinks_; }
  const std::unordered_map<std::string, ApiClass>& entries() const {
    return entries_;
  }

 private:
  std::unordered_map<std::string, ApiClass> entries_;
  size_t num_sources_ = 0;
  size_t num_sinks_ = 0;
};

inline SourceSinkCatalog ParseCatalog(std::string_view input) {
  SourceSinkCatalog catalog;
  size_t line_no = 0;
  for (std::string_view line : text::SplitLines(input)) {
    ++line_no;
    if (text::IsCommentOrBlank(line))
      continue;
    const std::string where = "line " + std::to_string(line_no);
    auto fields = text::Tokenize(line);
    if (fields.size() != 3 || (fields[0] != "SOURCE" && fields[0] != "SINK"))
      throw Error(ErrorCode::kMalformedLine,
                  where + ": expected 'SOURCE|SINK <category> <signature>'");
    MethodSig sig{std::string(fields[2])};
    if (fields[0] == "SOURCE") {
      auto cat = ParseSourceCategory(fields[1]);
      if (!cat)
        throw Error(ErrorCode::kUnknownCategory,
                    where + ": unknown source category '" +
                        std::string(fields[1]) + "'");
      catalog.Add(sig, ApiClass::Source(*cat));
    } else {
      auto cat = ParseSinkCategory(fields[1]);
      if (!cat)
        throw Error(
            ErrorCode::kUnknownCategory,
            where + ": unknown sink category '" + std::string(fields[1]) + "'");
      catalog.Add(sig, ApiClass::Sink(*cat));
    }
  }
  return catalog;
}

// Entries are emitted sorted by role, category, then signature so the output
// is stable.
inline std::string SerializeCatalog(const SourceSinkCatalog& catalog) {
  std::vector<std::pair<ApiClass, std::string>> rows;
  rows.reserve(catalog.entries().size());
  for (const auto& [sig, cls] : catalog.entries())
    rows.emplace_back(cls, sig);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first.role != b.first.role)
      return a.first.role < b.first.role;
    if (a.first.category != b.first.category)
      return a.first.category < b.first.category;
    return a.second < b.second;
  });
  std::string out;
  for (const auto& [cls, sig] : rows) {
    if (cls.is_source()) {
      out += "SOURCE ";
      out += kSourceCategoryNames[cls.category];
    } else {
      out += "SINK ";
      out += kSinkCategoryNames[cls.category];
    }
    out += ' ';
    out += sig;
    out += '\n';
  }
  return out;
}

}  // namespace sadprof

#endif  // SADPROF_CATALOG_HPP_
