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

// Synthetic trace corpora. A CountTemplate fixes every integer count a SAD
// profile is computed from; SynthesizeTrace emits a trace whose extracted
// counts equal the template exactly.
//
// Trace layout. Five app methods act as callers:
//
//   kMainMethod      calls helpers (plain, non-sensitive callsites)
//   kCollectMethod   vulnerable sources; calls kUploadMethod once (if any
//                    plain callsite is available) which holds the vulnerable
//                    sinks, otherwise holds them itself
//   kProbeMethod     non-vulnerable sources; calls nothing that reaches a sink
//   kReportMethod    non-vulnerable sinks; nothing that reaches it calls a
//                    source
//
// Among the vulnerable callsites, the earliest record is a source instance and
// the latest is a sink instance, which gives every vulnerable callsite its
// ordering witness. Vulnerability is therefore decided by the graph shape
// alone and comes out the same in temporal and graph-only modes.

#ifndef SADPROF_SYNTH_HPP_
#define SADPROF_SYNTH_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sadprof/catalog.hpp"
#include "sadprof/error.hpp"
#include "sadprof/random.hpp"
#include "sadprof/sad_profile.hpp"
#include "sadprof/text.hpp"
#include "sadprof/trace.hpp"

namespace sadprof {

struct CountTemplate {
  std::uint64_t neither_callsites = 0;
  std::uint64_t neither_instances = 0;
  RoleCounts<kNumSourceCategories> source;
  RoleCounts<kNumSinkCategories> sink;

  friend bool operator==(const CountTemplate&, const CountTemplate&) = default;
};

// The SadCounts a trace synthesized from `t` must extract to.
inline SadCounts ImpliedCounts(const CountTemplate& t) {
  SadCounts c;
  c.source = t.source;
  c.sink = t.sink;
  c.callsites = t.neither_callsites + t.source.total_callsites() +
                t.sink.total_callsites();
  c.instances = t.neither_instances + t.source.total_instances() +
                t.sink.total_instances();
  return c;
}

namespace internal {

template <size_t N>
std::optional<std::string> CheckRole(const RoleCounts<N>& r,
                                     std::string_view role) {
  for (size_t k = 0; k < N; ++k) {
    const auto cs = r.callsites[k], in = r.instances[k];
    const auto vcs = r.vuln_callsites[k], vin = r.vuln_instances[k];
    const std::string where =
        std::string(role) + " category " + std::to_string(k) + ": ";
    if (vcs > cs)
      return where + "more vulnerable callsites than callsites";
    if (vin > in)
      return where + "more vulnerable instances than instances";
    if (vin < vcs || (vcs == 0 && vin != 0))
      return where + "vulnerable instances must cover vulnerable callsites";
    const auto pcs = cs - vcs, pin = in - vin;
    if (pin < pcs || (pcs == 0 && pin != 0))
      return where + "instances must cover callsites";
  }
  return std::nullopt;
}

}  // namespace internal

// Returns a reason string when the template cannot be realized.
inline std::optional<std::string> CheckTemplate(const CountTemplate& t) {
  if (auto why = internal::CheckRole(t.source, "source"))
    return why;
  if (auto why = internal::CheckRole(t.sink, "sink"))
    return why;
  if (t.neither_instances < t.neither_callsites ||
      (t.neither_callsites == 0 && t.neither_instances != 0))
    return std::string("neither instances must cover neither callsites");
  if ((t.source.total_vuln_callsites() == 0) !=
      (t.sink.total_vuln_callsites() == 0))
    return std::string(
        "vulnerable sources and vulnerable sinks must both be present or "
        "both absent");
  if (ImpliedCounts(t).callsites == 0)
    return std::string("template has no callsites");
  return std::nullopt;
}

inline constexpr std::string_view kMainMethod = "synth.App.main()void";
inline constexpr std::string_view kCollectMethod = "synth.App.collect()void";
inline constexpr std::string_view kUploadMethod = "synth.App.upload()void";
inline constexpr std::string_view kProbeMethod = "synth.App.probe()void";
inline constexpr std::string_view kReportMethod = "synth.App.report()void";
inline constexpr size_t kApisPerCategory = 3;

inline std::string SyntheticSourceApi(size_t category, size_t variant) {
  return "synth.src." + std::string(kSourceCategoryNames[category]) + ".get" +
         std::to_string(variant) + "()java.lang.Object";
}
inline std::string SyntheticSinkApi(size_t category, size_t variant) {
  return "synth.snk." + std::string(kSinkCategoryNames[category]) + ".put" +
         std::to_string(variant) + "(java.lang.Object)void";
}
inline std::string SyntheticHelper(size_t variant) {
  return "synth.Util.helper" + std::to_string(variant) + "()void";
}

// Catalog covering every API SynthesizeTrace may call.
inline SourceSinkCatalog SyntheticCatalog() {
  SourceSinkCatalog c;
  for (size_t k = 0; k < kNumSourceCategories; ++k) {
    for (size_t v = 0; v < kApisPerCategory; ++v)
      c.AddSource(SyntheticSourceApi(k, v), static_cast<SourceCategory>(k));
  }
  for (size_t k = 0; k < kNumSinkCategories; ++k) {
    for (size_t v = 0; v < kApisPerCategory; ++v)
      c.AddSink(SyntheticSinkApi(k, v), static_cast<SinkCategory>(k));
  }
  return c;
}

struct TraceMeta {
  std::string app_id = "synth";
  Label label = Label::kUnlabeled;
  int year = 0;
};

inline Trace SynthesizeTrace(const CountTemplate& t,
                             std::uint64_t seed,
                             const TraceMeta& meta = {}) {
  if (auto why = CheckTemplate(t))
    throw Error(ErrorCode::kInconsistentTemplate, *why);
  std::mt19937_64 rng(SplitMix64(seed));

  enum Zone : std::uint8_t { kPlain, kVulnSource, kVulnSink };
  struct Site {
    std::string caller;
    std::uint64_t site_index;
    std::string callee;
    Zone zone;
  };
  std::vector<Site> sites;
  std::vector<std::uint32_t> events;  // one entry per instance, site index
  std::map<std::string, std::uint64_t> next_site;

  // Adds `callsites` callsites sharing `instances` instances: one each, the
  // remainder spread at random.
  auto add_group = [&](std::string_view caller, std::uint64_t callsites,
                       std::uint64_t instances, Zone zone, auto callee_for) {
    if (callsites == 0)
      return;
    const size_t first = sites.size();
    for (std::uint64_t i = 0; i < callsites; ++i) {
      const std::uint64_t site = next_site[std::string(caller)]++;
      sites.push_back({std::string(caller), site, callee_for(), zone});
      events.push_back(static_cast<std::uint32_t>(sites.size() - 1));
    }
    for (std::uint64_t extra = callsites; extra < instances; ++extra)
      events.push_back(
          static_cast<std::uint32_t>(first + UniformIndex(rng, callsites)));
  };

  const bool has_vuln = t.source.total_vuln_callsites() > 0;
  std::uint64_t plain_cs = t.neither_callsites;
  std::uint64_t plain_in = t.neither_instances;
  std::string_view vuln_sink_caller = kCollectMethod;
  if (has_vuln && plain_cs > 0) {
    // One plain callsite is the collect -> upload edge; it takes its share of
    // the plain instances like any other.
    vuln_sink_caller = kUploadMethod;
    const std::uint64_t edge_instances = 1 + (plain_cs == 1 ? plain_in - 1 : 0);
    add_group(kCollectMethod, 1, edge_instances, kPlain,
              [] { return std::string(kUploadMethod); });
    plain_cs -= 1;
    plain_in -= edge_instances;
  }
  add_group(kMainMethod, plain_cs, plain_in, kPlain,
            [&] { return SyntheticHelper(UniformIndex(rng, 8)); });

  for (size_t k = 0; k < kNumSourceCategories; ++k) {
    auto api = [&, k] {
      return SyntheticSourceApi(k, UniformIndex(rng, kApisPerCategory));
    };
    const auto vcs = t.source.vuln_callsites[k];
    const auto vin = t.source.vuln_instances[k];
    add_group(kCollectMethod, vcs, vin, kVulnSource, api);
    add_group(kProbeMethod, t.source.callsites[k] - vcs,
              t.source.instances[k] - vin, kPlain, api);
  }
  for (size_t k = 0; k < kNumSinkCategories; ++k) {
    auto api = [&, k] {
      return SyntheticSinkApi(k, UniformIndex(rng, kApisPerCategory));
    };
    const auto vcs = t.sink.vuln_callsites[k];
    const auto vin = t.sink.vuln_instances[k];
    add_group(vuln_sink_caller, vcs, vin, kVulnSink, api);
    add_group(kReportMethod, t.sink.callsites[k] - vcs,
              t.sink.instances[k] - vin, kPlain, api);
  }

  Shuffle(events, rng);

  if (has_vuln) {
    // Put a vulnerable source first and a vulnerable sink last among the
    // vulnerable-zone records.
    std::vector<size_t> pos;
    for (size_t i = 0; i < events.size(); ++i) {
      if (sites[events[i]].zone != kPlain)
        pos.push_back(i);
    }
    for (size_t p : pos) {
      if (sites[events[p]].zone == kVulnSource) {
        std::swap(events[p], events[pos.front()]);
        break;
      }
    }
    for (size_t j = pos.size(); j-- > 1;) {
      if (sites[events[pos[j]]].zone == kVulnSink) {
        std::swap(events[pos[j]], events[pos.back()]);
        break;
      }
    }
  }

  Trace trace;
  trace.app_id = meta.app_id;
  trace.label = meta.label;
  trace.year = meta.year;
  trace.records.reserve(events.size());
  std::uint64_t seq = 0;
  for (std::uint32_t e : events) {
    const Site& s = sites[e];
    trace.records.push_back(CallRecord{++seq, MethodSig(s.caller), s.site_index,
                                       MethodSig(s.callee)});
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Per-app jitter.
//
// Each count is first rewritten in a parameterization where every
// combination of non-negative values is consistent: per category the
// vulnerable callsites, extra vulnerable instances, plain callsites and extra
// plain instances. Each of those values v moves by a uniform integer in
// [-min(j, v), +min(j, v)], which keeps it non-negative and keeps zeros at
// zero. Afterwards, if only one side has vulnerable callsites, they are
// turned into plain ones.

namespace internal {

inline std::uint64_t Jiggle(std::uint64_t v,
                            std::uint64_t jitter,
                            std::mt19937_64& rng) {
  const std::uint64_t spread = std::min(v, jitter);
  if (spread == 0)
    return v;
  return v - spread + UniformIndex(rng, 2 * spread + 1);
}

template <size_t N>
void JiggleRole(RoleCounts<N>& r, std::uint64_t j, std::mt19937_64& rng) {
  for (size_t k = 0; k < N; ++k) {
    const auto vcs = r.vuln_callsites[k];
    const auto vextra = r.vuln_instances[k] - vcs;
    const auto pcs = r.callsites[k] - vcs;
    const auto pextra = (r.instances[k] - r.vuln_instances[k]) - pcs;
    const auto nvcs = Jiggle(vcs, j, rng);
    auto nvextra = Jiggle(vextra, j, rng);
    const auto npcs = Jiggle(pcs, j, rng);
    auto npextra = Jiggle(pextra, j, rng);
    if (nvcs == 0)
      nvextra = 0;
    if (npcs == 0)
      npextra = 0;
    r.vuln_callsites[k] = nvcs;
    r.vuln_instances[k] = nvcs + nvextra;
    r.callsites[k] = nvcs + npcs;
    r.instances[k] = nvcs + nvextra + npcs + npextra;
  }
}

template <size_t N>
void ClearVulnerable(RoleCounts<N>& r) {
  r.vuln_callsites.fill(0);
  r.vuln_instances.fill(0);
}

}  // namespace internal

inline CountTemplate JitterTemplate(const CountTemplate& base,
                                    std::uint64_t jitter,
                                    std::mt19937_64& rng) {
  if (auto why = CheckTemplate(base))
    throw Error(ErrorCode::kInconsistentTemplate, *why);
  if (jitter == 0)
    return base;
  CountTemplate t = base;
  const auto ncs = internal::Jiggle(t.neither_callsites, jitter, rng);
  auto nextra =
      internal::Jiggle(t.neither_instances - t.neither_callsites, jitter, rng);
  if (ncs == 0)
    nextra = 0;
  t.neither_callsites = ncs;
  t.neither_instances = ncs + nextra;
  internal::JiggleRole(t.source, jitter, rng);
  internal::JiggleRole(t.sink, jitter, rng);
  if ((t.source.total_vuln_callsites() == 0) !=
      (t.sink.total_vuln_callsites() == 0)) {
    internal::ClearVulnerable(t.source);
    internal::ClearVulnerable(t.sink);
  }
  if (ImpliedCounts(t).callsites == 0) {
    t.neither_callsites = 1;
    t.neither_instances = 1;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Corpora.

struct CorpusGroup {
  std::string tag;
  Label label = Label::kUnlabeled;
  int year = 0;
  std::uint32_t n_apps = 0;
  CountTemplate counts;
  std::uint64_t jitter = 0;
  std::optional<std::uint64_t> seed;  // derived from the corpus seed if empty
};

struct CorpusSpec {
  std::uint64_t seed = 0;
  std::vector<CorpusGroup> groups;
};

struct CorpusEntry {
  Trace trace;
  std::string group_tag;
};

inline std::uint64_t GroupSeed(const CorpusSpec& spec, size_t group_index) {
  const auto& g = spec.groups[group_index];
  return g.seed ? *g.seed : DeriveSeed(spec.seed, group_index);
}

inline std::string AppId(std::string_view tag, std::uint32_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05u", index);
  return std::string(tag) + "-" + buf;
}

// Per app i of group g: app seed = DeriveSeed(GroupSeed(g), i); the jitter
// engine is seeded with SplitMix64(app seed) and the trace with the app seed
// itself.
inline std::vector<CorpusEntry> SynthesizeCorpus(const CorpusSpec& spec) {
  std::vector<CorpusEntry> out;
  for (size_t g = 0; g < spec.groups.size(); ++g) {
    const CorpusGroup& group = spec.groups[g];
    if (auto why = CheckTemplate(group.counts))
      throw Error(ErrorCode::kInconsistentTemplate,
                  "group '" + group.tag + "': " + *why);
    const std::uint64_t gseed = GroupSeed(spec, g);
    for (std::uint32_t i = 0; i < group.n_apps; ++i) {
      const std::uint64_t app_seed = DeriveSeed(gseed, i);
      std::mt19937_64 rng(SplitMix64(app_seed));
      const CountTemplate counts =
          JitterTemplate(group.counts, group.jitter, rng);
      TraceMeta meta{AppId(group.tag, i), group.label, group.year};
      out.push_back({SynthesizeTrace(counts, app_seed, meta), group.tag});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus spec files. Key-value text, '#' comments:
//
//   seed = 7
//
//   [group mal-2012]
//   label = MALICIOUS
//   year = 2012
//   apps = 1000
//   jitter = 3
//   seed = 99                      # optional
//   neither = <callsites> <instances>
//   source.<Category> = <callsites> <instances> <vuln_callsites>
//   <vuln_instances> sink.<Category> = <callsites> <instances> <vuln_callsites>
//   <vuln_instances>
//
// Categories not listed are zero.

inline CorpusSpec ParseCorpusSpec(std::string_view input) {
  CorpusSpec spec;
  size_t line_no = 0;
  auto fail = [&line_no](const std::string& why) {
    return Error(ErrorCode::kMalformedSpec,
                 "line " + std::to_string(line_no) + ": " + why);
  };
  auto parse_u64s = [&](std::string_view value, size_t expected) {
    auto toks = text::Tokenize(value);
    if (toks.size() != expected)
      throw fail("expected " + std::to_string(expected) + " integers");
    std::vector<std::uint64_t> out;
    for (auto tok : toks) {
      auto v = text::ParseInt<std::uint64_t>(tok);
      if (!v)
        throw fail("'" + std::string(tok) + "' is not a non-negative integer");
      out.push_back(*v);
    }
    return out;
  };
  auto set_role = [](auto& role, size_t k,
                     const std::vector<std::uint64_t>& v) {
    role.callsites[k] = v[0];
    role.instances[k] = v[1];
    role.vuln_callsites[k] = v[2];
    role.vuln_instances[k] = v[3];
  };

  CorpusGroup* group = nullptr;
  for (std::string_view raw : text::SplitLines(input)) {
    ++line_no;
    std::string_view line = raw.substr(0, raw.find('#'));
    line = text::Trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw fail("unterminated section header");
      auto toks = text::Tokenize(line.substr(1, line.size() - 2));
      if (toks.size() != 2 || toks[0] != "group" ||
          text::HasWhitespace(toks[1]))
        throw fail("expected '[group <tag>]'");
      spec.groups.emplace_back();
      group = &spec.groups.back();
      group->tag = std::string(toks[1]);
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw fail("expected 'key = value'");
    const std::string_view key = text::Trim(line.substr(0, eq));
    const std::string_view value = text::Trim(line.substr(eq + 1));
    if (!group) {
      if (key != "seed")
        throw fail("only 'seed' may appear before the first group");
      spec.seed = parse_u64s(value, 1)[0];
      continue;
    }
    if (key == "label") {
      auto label = ParseLabel(value);
      if (!label)
        throw fail("unknown label");
      group->label = *label;
    } else if (key == "year") {
      auto year = text::ParseInt<int>(value);
      if (!year)
        throw fail("year is not an integer");
      group->year = *year;
    } else if (key == "apps") {
      group->n_apps = static_cast<std::uint32_t>(parse_u64s(value, 1)[0]);
    } else if (key == "jitter") {
      group->jitter = parse_u64s(value, 1)[0];
    } else if (key == "seed") {
      group->seed = parse_u64s(value, 1)[0];
    } else if (key == "neither") {
      auto v = parse_u64s(value, 2);
      group->counts.neither_callsites = v[0];
      group->counts.neither_instances = v[1];
    } else if (key.starts_with("source.")) {
      auto cat = ParseSourceCategory(key.substr(7));
      if (!cat)
        throw fail("unknown source category");
      set_role(group->counts.source, static_cast<size_t>(*cat),
               parse_u64s(value, 4));
    } else if (key.starts_with("sink.")) {
      auto cat = ParseSinkCategory(key.substr(5));
      if (!cat)
        throw fail("unknown sink category");
      set_role(group->counts.sink, static_cast<size_t>(*cat),
               parse_u64s(value, 4));
    } else {
      throw fail("unknown key '" + std::string(key) + "'");
    }
  }
  for (const CorpusGroup& g : spec.groups) {
    if (g.n_apps == 0)
      throw Error(ErrorCode::kMalformedSpec,
                  "group '" + g.tag + "' needs apps > 0");
    if (auto why = CheckTemplate(g.counts))
      throw Error(ErrorCode::kInconsistentTemplate,
                  "group '" + g.tag + "': " + *why);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Manifest CSV: app_id,label,year,group_tag.

struct ManifestEntry {
  std::string app_id;
  Label label = Label::kUnlabeled;
  int year = 0;
  std::string group_tag;
};

inline std::string WriteManifestCsv(const std::vector<CorpusEntry>& corpus) {
  std::string out = "app_id,label,year,group_tag\n";
  for (const CorpusEntry& e : corpus) {
    out += e.trace.app_id + ',' + std::string(LabelName(e.trace.label)) + ',' +
           std::to_string(e.trace.year) + ',' + e.group_tag + '\n';
  }
  return out;
}

inline std::vector<ManifestEntry> ReadManifestCsv(std::string_view input) {
  auto lines = text::SplitLines(input);
  if (lines.empty() || lines.front() != "app_id,label,year,group_tag")
    throw Error(ErrorCode::kMalformedCsv, "missing manifest header");
  std::vector<ManifestEntry> out;
  for (size_t n = 1; n < lines.size(); ++n) {
    if (lines[n].empty())
      continue;
    auto cells = text::Split(lines[n], ',');
    auto label = cells.size() == 4 ? ParseLabel(cells[1]) : std::nullopt;
    auto year =
        cells.size() == 4 ? text::ParseInt<int>(cells[2]) : std::nullopt;
    if (!label || !year || cells[0].empty())
      throw Error(ErrorCode::kMalformedCsv,
                  "manifest row " + std::to_string(n + 1) + " is malformed");
    out.push_back(
        {std::string(cells[0]), *label, *year, std::string(cells[3])});
  }
  return out;
}

}  // namespace sadprof

#endif  // SADPROF_SYNTH_HPP_
