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

// Sensitive Access Distribution (SAD) profiles: 52 relative statistics over
// the source/sink callsites and call instances of one trace.
//
// Feature layout (1-based, as printed in profile CSV headers):
//
//   f1  f2     source / sink callsites over all callsites
//   f3  f4     source / sink instances over all instances
//   f5..f9     source callsites per category over source callsites
//   f10..f15   sink callsites per category over sink callsites
//   f16..f20   source instances per category over source instances
//   f21..f26   sink instances per category over sink instances
//   f27 f28    vulnerable source / sink callsites over source / sink callsites
//   f29 f30    vulnerable source / sink instances over source / sink instances
//   f31..f35   vulnerable source callsites per category over vulnerable
//              source callsites
//   f36..f41   vulnerable sink callsites per category over vulnerable sink
//              callsites
//   f42..f46   vulnerable source instances per category over all source
//              instances (or vulnerable source instances, see
//              VulnInstanceDenominator)
//   f47..f52   same for sinks
//
// Every feature is an integer ratio, evaluated once at the end as a single
// double division. A zero denominator yields 0.

#ifndef SADPROF_SAD_PROFILE_HPP_
#define SADPROF_SAD_PROFILE_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sadprof/call_graph.hpp"
#include "sadprof/catalog.hpp"
#include "sadprof/error.hpp"
#include "sadprof/text.hpp"
#include "sadprof/trace.hpp"

namespace sadprof {

inline constexpr size_t kNumFeatures = 52;

using FeatureVector = std::array<double, kNumFeatures>;

// 0-based offsets of each feature group.
namespace feature {
inline constexpr size_t kSourceCallsites = 0;
inline constexpr size_t kSinkCallsites = 1;
inline constexpr size_t kSourceInstances = 2;
inline constexpr size_t kSinkInstances = 3;
inline constexpr size_t kSourceCallsiteShare = 4;
inline constexpr size_t kSinkCallsiteShare = 9;
inline constexpr size_t kSourceInstanceShare = 15;
inline constexpr size_t kSinkInstanceShare = 20;
inline constexpr size_t kVulnSourceCallsites = 26;
inline constexpr size_t kVulnSinkCallsites = 27;
inline constexpr size_t kVulnSourceInstances = 28;
inline constexpr size_t kVulnSinkInstances = 29;
inline constexpr size_t kVulnSourceCallsiteShare = 30;
inline constexpr size_t kVulnSinkCallsiteShare = 35;
inline constexpr size_t kVulnSourceInstanceShare = 41;
inline constexpr size_t kVulnSinkInstanceShare = 46;
}  // namespace feature

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 0;

  double value() const {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  }
  // Exact rational equality; all zero-denominator ratios equal 0/1.
  friend bool operator==(const Ratio& a, const Ratio& b) {
    const bool za = a.den == 0 || a.num == 0;
    const bool zb = b.den == 0 || b.num == 0;
    if (za || zb)
      return za == zb;
    return static_cast<unsigned __int128>(a.num) * b.den ==
           static_cast<unsigned __int128>(b.num) * a.den;
  }
};

// Per-role counts, split by category.
template <size_t N>
struct RoleCounts {
  std::array<std::uint64_t, N> callsites{};
  std::array<std::uint64_t, N> instances{};
  std::array<std::uint64_t, N> vuln_callsites{};
  std::array<std::uint64_t, N> vuln_instances{};

  static std::uint64_t Sum(const std::array<std::uint64_t, N>& a) {
    std::uint64_t s = 0;
    for (auto v : a)
      s += v;
    return s;
  }
  std::uint64_t total_callsites() const { return Sum(callsites); }
  std::uint64_t total_instances() const { return Sum(instances); }
  std::uint64_t total_vuln_callsites() const { return Sum(vuln_callsites); }
  std::uint64_t total_vuln_instances() const { return Sum(vuln_instances); }

  friend bool operator==(const RoleCounts&, const RoleCounts&) = default;
};

// All integer counts the 52 features are ratios of.
struct SadCounts {
  std::uint64_t callsites = 0;
  std::uint64_t instances = 0;
  RoleCounts<kNumSourceCategories> source;
  RoleCounts<kNumSinkCategories> sink;

  friend bool operator==(const SadCounts&, const SadCounts&) = default;
};

enum class VulnInstanceDenominator {
  // f42..f52 divide by all source (sink) instances.
  kAllInstances,
  // f42..f52 divide by vulnerable source (sink) instances only.
  kVulnerableInstances,
};

struct ExtractOptions {
  ReachabilityMode reachability = ReachabilityMode::kTemporal;
  VulnInstanceDenominator vuln_instance_denominator =
      VulnInstanceDenominator::kAllInstances;
};

inline std::array<Ratio, kNumFeatures> FeatureRatios(
    const SadCounts& c,
    VulnInstanceDenominator denominator =
        VulnInstanceDenominator::kAllInstances) {
  namespace f = feature;
  std::array<Ratio, kNumFeatures> r{};
  const auto src_cs = c.source.total_callsites();
  const auto snk_cs = c.sink.total_callsites();
  const auto src_in = c.source.total_instances();
  const auto snk_in = c.sink.total_instances();
  const auto vsrc_cs = c.source.total_vuln_callsites();
  const auto vsnk_cs = c.sink.total_vuln_callsites();
  const auto vsrc_in = c.source.total_vuln_instances();
  const auto vsnk_in = c.sink.total_vuln_instances();
  const bool literal = denominator == VulnInstanceDenominator::kAllInstances;

  r[f::kSourceCallsites] = {src_cs, c.callsites};
  r[f::kSinkCallsites] = {snk_cs, c.callsites};
  r[f::kSourceInstances] = {src_in, c.instances};
  r[f::kSinkInstances] = {snk_in, c.instances};
  r[f::kVulnSourceCallsites] = {vsrc_cs, src_cs};
  r[f::kVulnSinkCallsites] = {vsnk_cs, snk_cs};
  r[f::kVulnSourceInstances] = {vsrc_in, src_in};
  r[f::kVulnSinkInstances] = {vsnk_in, snk_in};
  for (size_t k = 0; k < kNumSourceCategories; ++k) {
    r[f::kSourceCallsiteShare + k] = {c.source.callsites[k], src_cs};
    r[f::kSourceInstanceShare + k] = {c.source.instances[k], src_in};
    r[f::kVulnSourceCallsiteShare + k] = {c.source.vuln_callsites[k], vsrc_cs};
    r[f::kVulnSourceInstanceShare + k] = {c.source.vuln_instances[k],
                                          literal ? src_in : vsrc_in};
  }
  for (size_t k = 0; k < kNumSinkCategories; ++k) {
    r[f::kSinkCallsiteShare + k] = {c.sink.callsites[k], snk_cs};
    r[f::kSinkInstanceShare + k] = {c.sink.instances[k], snk_in};
    r[f::kVulnSinkCallsiteShare + k] = {c.sink.vuln_callsites[k], vsnk_cs};
    r[f::kVulnSinkInstanceShare + k] = {c.sink.vuln_instances[k],
                                        literal ? snk_in : vsnk_in};
  }
  return r;
}

inline FeatureVector FeaturesFromCounts(
    const SadCounts& counts,
    VulnInstanceDenominator denominator =
        VulnInstanceDenominator::kAllInstances) {
  FeatureVector out{};
  const auto ratios = FeatureRatios(counts, denominator);
  for (size_t i = 0; i < kNumFeatures; ++i)
    out[i] = ratios[i].value();
  return out;
}

inline SadCounts CountSensitiveCalls(
    const DynamicCallGraph& g,
    const SourceSinkCatalog& catalog,
    ReachabilityMode mode = ReachabilityMode::kTemporal) {
  SadCounts counts;
  const auto& callsites = g.callsites();
  counts.callsites = callsites.size();
  counts.instances = g.total_instances();
  const VulnerabilityMarking marking = MarkVulnerable(g, catalog, mode);
  std::vector<bool> vulnerable(callsites.size(), false);
  for (size_t i : marking.vulnerable_sources)
    vulnerable[i] = true;
  for (size_t i : marking.vulnerable_sinks)
    vulnerable[i] = true;

  auto tally = [&](auto& role, size_t cat, size_t i) {
    role.callsites[cat] += 1;
    role.instances[cat] += callsites[i].instance_count;
    if (vulnerable[i]) {
      role.vuln_callsites[cat] += 1;
      role.vuln_instances[cat] += callsites[i].instance_count;
    }
  };
  for (size_t i = 0; i < callsites.size(); ++i) {
    const ApiClass cls = catalog.Classify(g.sig(callsites[i].callee));
    if (cls.is_source())
      tally(counts.source, cls.category, i);
    else if (cls.is_sink())
      tally(counts.sink, cls.category, i);
  }
  return counts;
}

struct SadProfile {
  std::string app_id;
  Label label = Label::kUnlabeled;
  int year = 0;
  FeatureVector features{};
};

inline SadCounts CountTrace(
    const Trace& trace,
    const SourceSinkCatalog& catalog,
    ReachabilityMode mode = ReachabilityMode::kTemporal) {
  if (trace.records.empty())
    throw Error(ErrorCode::kEmptyTrace,
                "trace '" + trace.app_id + "' has no records");
  return CountSensitiveCalls(BuildCallGraph(trace), catalog, mode);
}

inline SadProfile ExtractProfile(const Trace& trace,
                                 const SourceSinkCatalog& catalog,
                                 const ExtractOptions& options = {}) {
  SadProfile profile;
  profile.app_id = trace.app_id;
  profile.label = trace.label;
  profile.year = trace.year;
  profile.features =
      FeaturesFromCounts(CountTrace(trace, catalog, options.reachability),
                         options.vuln_instance_denominator);
  return profile;
}

// ---------------------------------------------------------------------------
// Profile CSV: app_id,label,year,f1,...,f52 with 9 significant digits.

inline std::string ProfileCsvHeader() {
  std::string h = "app_id,label,year";
  for (size_t i = 1; i <= kNumFeatures; ++i)
    h += ",f" + std::to_string(i);
  return h;
}

inline std::string ProfileCsvRow(const SadProfile& p) {
  std::string row = p.app_id;
  row += ',';
  row += LabelName(p.label);
  row += ',';
  row += std::to_string(p.year);
  for (double v : p.features) {
    row += ',';
    row += text::FormatG9(v);
  }
  return row;
}

inline std::string WriteProfileCsv(const std::vector<SadProfile>& profiles) {
  std::string out = ProfileCsvHeader() + "\n";
  for (const SadProfile& p : profiles)
    out += ProfileCsvRow(p) + "\n";
  return out;
}

inline std::vector<SadProfile> ReadProfileCsv(std::string_view input) {
  std::vector<SadProfile> profiles;
  auto lines = text::SplitLines(input);
  if (lines.empty() || lines.front() != ProfileCsvHeader())
    throw Error(ErrorCode::kMalformedCsv, "missing or unexpected header");
  for (size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty())
      continue;
    const std::string where = "row " + std::to_string(n + 1);
    auto cells = text::Split(lines[n], ',');
    if (cells.size() != 3 + kNumFeatures)
      throw Error(ErrorCode::kMalformedCsv, where + ": wrong column count");
    SadProfile p;
    p.app_id = std::string(cells[0]);
    auto label = ParseLabel(cells[1]);
    auto year = text::ParseInt<int>(cells[2]);
    if (p.app_id.empty() || !label || !year)
      throw Error(ErrorCode::kMalformedCsv, where + ": bad id, label or year");
    p.label = *label;
    p.year = *year;
    for (size_t i = 0; i < kNumFeatures; ++i) {
      auto v = text::ParseDouble(cells[3 + i]);
      if (!v || !(*v >= 0.0 && *v <= 1.0))
        throw Error(ErrorCode::kMalformedCsv, where + ": f" +
                                                  std::to_string(i + 1) +
                                                  " is not a number in [0,1]");
      p.features[i] = *v;
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

}  // namespace sadprof

#endif  // SADPROF_SAD_PROFILE_HPP_
