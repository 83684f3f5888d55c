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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "test_support.hpp"

#ifndef SADPROF_DATA_DIR
#define SADPROF_DATA_DIR "data"
#endif

namespace sadprof {
namespace {

namespace fs = std::filesystem;
using namespace sadprof::testing;

// Every profile produced below with the tolerance it is checked at by
// criterion 8: exact extraction output, or values read back from CSV.
inline constexpr double kExactTolerance = 1e-12;
inline constexpr double kCsvTolerance = 1e-8;

std::vector<std::pair<FeatureVector, double>>& ProducedProfiles() {
  static std::vector<std::pair<FeatureVector, double>> all;
  return all;
}

SadProfile Produce(const Trace& t,
                   const SourceSinkCatalog& catalog,
                   const ExtractOptions& options = {}) {
  SadProfile p = ExtractProfile(t, catalog, options);
  ProducedProfiles().emplace_back(p.features, kExactTolerance);
  return p;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // <= 0: no limit
  std::function<Outcome()> check;
};

std::string Fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// --------------------------------------------------------------------------

Outcome MicroGolden() {
  // Exact expected ratios (1-based feature -> num/den); others are zero.
  const std::map<int, Ratio> want = {
      {1, {2, 7}},  {2, {2, 7}},  {3, {3, 8}},  {4, {2, 8}},  {7, {1, 2}},
      {8, {1, 2}},  {12, {1, 2}}, {14, {1, 2}}, {18, {2, 3}}, {19, {1, 3}},
      {23, {1, 2}}, {25, {1, 2}}, {27, {1, 2}}, {28, {1, 2}}, {29, {2, 3}},
      {30, {1, 2}}, {33, {1, 1}}, {40, {1, 1}}, {44, {2, 3}}, {51, {1, 2}},
  };
  const Trace t = MicroTrace();
  const auto catalog = MicroCatalog();
  const auto ratios = FeatureRatios(CountTrace(t, catalog));
  const auto profile = Produce(t, catalog);
  int wrong = 0;
  std::string first;
  for (int i = 1; i <= static_cast<int>(kNumFeatures); ++i) {
    auto it = want.find(i);
    const Ratio w = it == want.end() ? Ratio{0, 1} : it->second;
    if (!(ratios[i - 1] == w) || profile.features[i - 1] != w.value()) {
      if (wrong++ == 0)
        first = "f" + std::to_string(i);
    }
  }
  return {wrong == 0, wrong == 0 ? "52/52 features exact"
                                 : std::to_string(wrong) +
                                       " features differ, first " + first};
}

Outcome ReachabilityOracle() {
  std::mt19937_64 rng(20240601);
  const auto catalog = RandomTestCatalog();
  int mismatches = 0;
  size_t callsites = 0;
  for (int i = 0; i < 1000; ++i) {
    // 25 callee APIs and helpers plus up to 25 app methods: at most 50.
    const Trace t = RandomTrace(rng, catalog, 1 + UniformIndex(rng, 25),
                                1 + UniformIndex(rng, 200));
    const auto g = BuildCallGraph(t);
    callsites += g.callsites().size();
    const auto got = ToKeys(g, MarkVulnerable(g, catalog));
    const auto want =
        BruteForceVulnerable(t, catalog, ReachabilityMode::kTemporal);
    if (got.sources != want.sources || got.sinks != want.sinks)
      ++mismatches;
    Produce(t, catalog);
  }
  return {mismatches == 0, std::to_string(mismatches) +
                               " of 1000 traces disagree (" +
                               std::to_string(callsites) + " callsites)"};
}

Outcome GeneratorRoundTrip() {
  std::mt19937_64 rng(77);
  const auto catalog = SyntheticCatalog();
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const CountTemplate c = RandomTemplate(rng);
    const Trace t = SynthesizeTrace(c, static_cast<std::uint64_t>(i));
    const auto want = FeatureRatios(ImpliedCounts(c));
    const auto got = FeatureRatios(CountTrace(t, catalog));
    const auto profile = Produce(t, catalog);
    bool ok = got == want;
    for (size_t k = 0; k < kNumFeatures; ++k)
      ok = ok && profile.features[k] == want[k].value();
    mismatches += !ok;
  }
  return {mismatches == 0,
          std::to_string(mismatches) + " of 200 templates differ"};
}

Outcome MetricArithmetic() {
  const double a = MetricsFromPR(0.999, 0.709).f1;
  const double b = MetricsFromPR(0.937, 0.937).f1;
  const bool pa = std::abs(a - 0.830) <= 0.0005;
  const bool pb = std::abs(b - 0.937) <= 0.0005;
  return {pa && pb, Fmt("F1(0.999,0.709)=%.6f vs 0.830 (|d|=%.6f); ", a,
                        std::abs(a - 0.830)) +
                        Fmt("F1(0.937,0.937)=%.6f vs 0.937", b)};
}

// The default corpus, generated once and shared by criteria 5 and 6.
struct DefaultCorpus {
  std::vector<LabeledSample> year0;
  std::map<int, std::vector<LabeledSample>> later;  // by year
};

const DefaultCorpus& Corpus() {
  static const DefaultCorpus corpus = [] {
    DefaultCorpus c;
    const auto spec = ParseCorpusSpec(
        text::ReadFile(std::string(SADPROF_DATA_DIR) + "/default_corpus.spec"));
    const auto catalog = SyntheticCatalog();
    int first_year = INT32_MAX;
    for (const auto& g : spec.groups)
      first_year = std::min(first_year, g.year);
    for (const CorpusEntry& e : SynthesizeCorpus(spec)) {
      LabeledSample s = ToSample(Produce(e.trace, catalog));
      if (s.year == first_year)
        c.year0.push_back(std::move(s));
      else
        c.later[s.year].push_back(std::move(s));
    }
    return c;
  }();
  return corpus;
}

ForestParams AcceptanceForest() {
  ForestParams p;
  p.seed = 2012;
  return p;
}

Outcome SamePeriodDetection() {
  const auto& y0 = Corpus().year0;
  const auto cv = CrossValidate(y0, AcceptanceForest(), 10, 1);
  const auto ho = HoldoutEvaluate(y0, AcceptanceForest(), 0.30, 1);
  const double cv_f1 = cv.rows[0].metrics.f1;
  const double ho_f1 = ho.rows[0].metrics.f1;
  return {cv_f1 >= 0.95 && ho_f1 >= 0.95,
          std::to_string(y0.size()) + " apps; " +
              Fmt("10-fold CV F1=%.4f, 70/30 holdout F1=%.4f", cv_f1, ho_f1)};
}

Outcome SustainabilityShape() {
  const auto& corpus = Corpus();
  std::vector<TestSet> tests;
  for (const auto& [year, samples] : corpus.later)
    tests.push_back({"y" + std::to_string(year),
                     SpanYears(corpus.year0, samples), samples});
  const auto report = SpanEvaluate(corpus.year0, tests, AcceptanceForest());
  std::string detail = "F1 by span:";
  bool ok = report.rows.size() == 5;
  for (size_t i = 0; i < report.rows.size(); ++i) {
    detail +=
        Fmt(" %.0f:%.3f", report.rows[i].span_years, report.rows[i].metrics.f1);
    ok = ok && report.rows[i].span_years == static_cast<int>(i) + 1;
    if (i > 0)
      ok = ok &&
           report.rows[i].metrics.f1 <= report.rows[i - 1].metrics.f1 + 0.02;
  }
  if (report.rows.size() == 5) {
    const double drop = report.rows[0].metrics.f1 - report.rows[4].metrics.f1;
    ok = ok && drop >= 0.10;
    detail += Fmt("; drop %.3f", drop);
  }
  return {ok, detail};
}

// Runs the CLI twice per pipeline and compares every output byte.
Outcome Determinism() {
  const fs::path dir = fs::temp_directory_path() / "sadprof_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [](std::vector<std::string> args) {
    args.insert(args.begin(), "sadprof");
    std::vector<const char*> argv;
    for (const auto& a : args)
      argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::Run(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  auto same_tree = [](const fs::path& a, const fs::path& b) {
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::directory_iterator(a))
      fa.push_back(e.path().filename());
    for (const auto& e : fs::directory_iterator(b))
      fb.push_back(e.path().filename());
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    if (fa != fb)
      return false;
    for (const auto& f : fa) {
      if (text::ReadFile(a / f) != text::ReadFile(b / f))
        return false;
    }
    return true;
  };

  const std::string spec =
      std::string(SADPROF_DATA_DIR) + "/default_corpus.spec";
  std::vector<std::string> failed;
  int rc = run({"synth", spec, "--seed", "5", "-o", p("c1")});
  rc |= run({"synth", spec, "--seed", "5", "-o", p("c2")});
  if (rc != 0 || !same_tree(p("c1"), p("c2")))
    failed.push_back("synth");

  // Profiles of the first 300 traces of each class from the synthesized
  // corpus keep the training runs short.
  std::vector<std::string> traces;
  for (const char* prefix : {"ben-y0-", "mal-y0-"}) {
    for (int i = 0; i < 300; ++i)
      traces.push_back(p("c1/") + AppId(std::string(prefix).substr(0, 6), i) +
                       ".trc");
  }
  std::vector<std::string> extract = {"extract", "--catalog",
                                      p("c1/catalog.ssl"), "-o", p("y0.csv")};
  extract.insert(extract.end(), traces.begin(), traces.end());
  rc = run(extract);
  for (const auto& row : ReadProfileCsv(text::ReadFile(p("y0.csv"))))
    ProducedProfiles().emplace_back(row.features, kCsvTolerance);

  const std::vector<std::pair<std::string, std::vector<std::string>>>
      pipelines = {
          {"train", {"train", p("y0.csv"), "--seed", "5", "-o"}},
          {"crossval", {"crossval", p("y0.csv"), "--seed", "5", "-o"}},
          {"holdout", {"holdout", p("y0.csv"), "--seed", "5", "-o"}},
  };
  for (const auto& [name, args] : pipelines) {
    auto a = args, b = args;
    a.push_back(p(name + ".1"));
    b.push_back(p(name + ".2"));
    const int r = rc | run(a) | run(b);
    if (r != 0 ||
        text::ReadFile(p(name + ".1")) != text::ReadFile(p(name + ".2")))
      failed.push_back(name);
  }
  fs::remove_all(dir);
  std::string detail = "synth, train, crossval, holdout";
  if (failed.empty())
    return {true, detail + " byte-identical across two runs"};
  detail = "not reproducible:";
  for (const auto& f : failed)
    detail += " " + f;
  return {false, detail};
}

Outcome FeatureInvariants() {
  size_t bad = 0;
  std::string first;
  for (const auto& [f, tolerance] : ProducedProfiles()) {
    const auto v = ProfileInvariantViolations(f, tolerance);
    if (!v.empty() && bad++ == 0)
      first = v.front();
  }
  return {bad == 0 && !ProducedProfiles().empty(),
          std::to_string(ProducedProfiles().size()) + " profiles checked, " +
              std::to_string(bad) + " violate" +
              (first.empty() ? "" : " (" + first + ")")};
}

Outcome SummaryStatistics() {
  const std::vector<double> v = {0.1, 0.2, 0.3};
  const SummaryStat s = SummarizeValues(v);
  const double half = s.ci_high - s.mean;
  const bool ok = std::abs(s.mean - 0.2) <= 1e-12 &&
                  std::abs(half - 0.2484) <= 0.001 &&
                  std::abs((s.mean - s.ci_low) - half) <= 1e-12;
  return {ok, Fmt("mean=%.6f half-width=%.6f t(0.975,2)=%.6f", s.mean, half,
                  StudentTQuantile(0.975, 2))};
}

}  // namespace
}  // namespace sadprof

int main() {
  using namespace sadprof;
  // Criterion 8 runs last so it sees every profile the others produced.
  const std::vector<Criterion> criteria = {
      {1, "micro-trace golden vector", 1, MicroGolden},
      {2, "reachability oracle on 1000 random traces", 30, ReachabilityOracle},
      {3, "generator round-trip on 200 templates", 30, GeneratorRoundTrip},
      {4, "F1 arithmetic on reference precision/recall pairs", 0, MetricArithmetic},
      {5, "same-period detection on the default corpus", 120,
       SamePeriodDetection},
      {6, "sustainability shape over spans 1-5", 300, SustainabilityShape},
      {7, "determinism of randomized pipelines", 0, Determinism},
      {9, "summary statistics on {0.1,0.2,0.3}", 0, SummaryStatistics},
      {8, "feature-vector invariants on all profiles", 0, FeatureInvariants},
  };
  std::map<int, std::string> lines;
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += "; over the time limit";
    }
    failures += !o.pass;
    char head[160];
    std::snprintf(head, sizeof head, "%s criterion %d: %s (%.2f s",
                  o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs);
    std::string line = head;
    if (c.time_limit_s > 0)
      line += Fmt(", limit %.0f s", c.time_limit_s);
    line += ") -- " + o.detail;
    lines[c.id] = line;
  }
  for (const auto& [id, line] : lines)
    std::printf("%s\n", line.c_str());
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
