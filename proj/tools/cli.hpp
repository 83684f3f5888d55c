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

// The sadprof command line. Each subcommand reads its inputs, calls one
// library operation and writes the result with the library's own writer.

#ifndef SADPROF_TOOLS_CLI_HPP_
#define SADPROF_TOOLS_CLI_HPP_

#include <algorithm>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sadprof/sadprof.hpp"

namespace sadprof::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

// Flags shared by several subcommands.
struct CliConfig {
  std::vector<std::string> inputs;
  std::string out;
  std::string catalog;
  std::string manifest;
  std::string model;
  std::string profiles;
  std::string train;
  std::vector<std::string> tests;
  std::string reachability = "temporal";
  std::string denominator = "literal-table";
  std::uint64_t seed = 0;
  bool seed_given = false;
  ForestParams forest;
  std::uint32_t max_depth = 0;  // 0 = unlimited
  bool no_bootstrap = false;
  std::uint32_t folds = 10;
  double test_fraction = 0.30;
  bool by_year = false;
  std::string dataset = "year";
};

inline ExtractOptions ExtractOptionsFrom(const CliConfig& c) {
  ExtractOptions o;
  o.reachability = c.reachability == "graph-only" ? ReachabilityMode::kGraphOnly
                                                  : ReachabilityMode::kTemporal;
  o.vuln_instance_denominator =
      c.denominator == "vulnerable-only"
          ? VulnInstanceDenominator::kVulnerableInstances
          : VulnInstanceDenominator::kAllInstances;
  return o;
}

inline ForestParams ForestParamsFrom(const CliConfig& c) {
  ForestParams p = c.forest;
  p.seed = c.seed;
  p.bootstrap = !c.no_bootstrap;
  if (c.max_depth > 0)
    p.max_depth = c.max_depth;
  return p;
}

// Expands directories to the .trc files they contain, sorted by name.
inline std::vector<fs::path> TraceFiles(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const std::string& a : args) {
    if (fs::is_directory(a)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(a)) {
        if (e.is_regular_file() && e.path().extension() == ".trc")
          found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(a);
    }
  }
  return out;
}

inline std::map<std::string, ManifestEntry> LoadManifest(
    const std::string& path) {
  std::map<std::string, ManifestEntry> by_id;
  if (path.empty())
    return by_id;
  for (ManifestEntry& e : ReadManifestCsv(text::ReadFile(path)))
    by_id[e.app_id] = std::move(e);
  return by_id;
}

inline std::vector<SadProfile> ExtractAll(const CliConfig& c) {
  const SourceSinkCatalog catalog = ParseCatalog(text::ReadFile(c.catalog));
  const auto manifest = LoadManifest(c.manifest);
  const ExtractOptions options = ExtractOptionsFrom(c);
  std::vector<SadProfile> profiles;
  for (const fs::path& file : TraceFiles(c.inputs)) {
    Trace trace;
    try {
      trace = ParseTrace(text::ReadFile(file));
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.what());
    }
    if (auto it = manifest.find(trace.app_id); it != manifest.end()) {
      trace.label = it->second.label;
      trace.year = it->second.year;
    }
    profiles.push_back(ExtractProfile(trace, catalog, options));
  }
  return profiles;
}

inline std::vector<LabeledSample> LoadSamples(const std::string& path) {
  return ToSamples(ReadProfileCsv(text::ReadFile(path)));
}

inline void Emit(const CliConfig& c,
                 const std::string& content,
                 std::ostream& out) {
  if (c.out.empty() || c.out == "-")
    out << content;
  else
    text::WriteFileAtomic(c.out, content);
}

// --------------------------------------------------------------------------
// Subcommands.

inline void RunExtract(const CliConfig& c, std::ostream& out) {
  Emit(c, WriteProfileCsv(ExtractAll(c)), out);
}

inline void RunTrain(const CliConfig& c, std::ostream&) {
  const auto samples = LoadSamples(c.profiles);
  text::WriteFileAtomic(c.out,
                        SaveModel(TrainForest(samples, ForestParamsFrom(c))));
}

inline void RunPredict(const CliConfig& c, std::ostream& out) {
  const ForestModel model = LoadModel(text::ReadFile(c.model));
  std::vector<SadProfile> profiles =
      c.profiles.empty() ? ExtractAll(c)
                         : ReadProfileCsv(text::ReadFile(c.profiles));
  std::string csv = "app_id,verdict,score\n";
  for (const SadProfile& p : profiles) {
    csv += p.app_id + "," + std::string(LabelName(Predict(model, p.features))) +
           "," + text::FormatG9(PredictScore(model, p.features)) + "\n";
  }
  Emit(c, csv, out);
}

inline void EmitReport(const CliConfig& c,
                       const EvalReport& report,
                       std::ostream& out) {
  if (c.out.empty() || c.out == "-") {
    out << WriteReportCsv(report);
  } else {
    text::WriteFileAtomic(c.out, WriteReportCsv(report));
    out << FormatReportTable(report);
  }
}

inline void RunCrossval(const CliConfig& c, std::ostream& out) {
  const auto samples = LoadSamples(c.profiles);
  EmitReport(c,
             CrossValidate(samples, ForestParamsFrom(c), c.folds, c.seed,
                           fs::path(c.profiles).stem().string()),
             out);
}

inline void RunHoldout(const CliConfig& c, std::ostream& out) {
  const auto samples = LoadSamples(c.profiles);
  EmitReport(c,
             HoldoutEvaluate(samples, ForestParamsFrom(c), c.test_fraction,
                             c.seed, fs::path(c.profiles).stem().string()),
             out);
}

inline void RunSpan(const CliConfig& c, std::ostream& out) {
  const auto train = LoadSamples(c.train);
  std::vector<TestSet> tests;
  for (const std::string& path : c.tests) {
    auto samples = LoadSamples(path);
    if (!c.by_year) {
      tests.push_back({fs::path(path).stem().string(), 0, std::move(samples)});
      continue;
    }
    std::map<int, std::vector<LabeledSample>> by_year;
    for (LabeledSample& s : samples)
      by_year[s.year].push_back(std::move(s));
    for (auto& [year, group] : by_year)
      tests.push_back({"y" + std::to_string(year), 0, std::move(group)});
  }
  for (TestSet& t : tests)
    t.span_years = SpanYears(train, t.samples);
  EmitReport(c,
             SpanEvaluate(train, tests, ForestParamsFrom(c),
                          fs::path(c.train).stem().string()),
             out);
}

inline void RunSummarize(const CliConfig& c, std::ostream& out) {
  const auto profiles = ReadProfileCsv(text::ReadFile(c.profiles));
  const auto manifest = LoadManifest(c.manifest);
  auto dataset_of = [&](const SadProfile& p) -> std::string {
    if (c.dataset == "all")
      return "all";
    if (c.dataset == "group") {
      auto it = manifest.find(p.app_id);
      if (it == manifest.end())
        throw Error(ErrorCode::kMalformedCsv,
                    "app '" + p.app_id + "' is not in the manifest");
      return it->second.group_tag;
    }
    return std::to_string(p.year);
  };
  Emit(c, WriteSummaryCsv(Summarize(profiles, dataset_of)), out);
}

inline void RunSynth(const CliConfig& c, std::ostream& out) {
  CorpusSpec spec = ParseCorpusSpec(text::ReadFile(c.inputs.at(0)));
  if (c.seed_given)
    spec.seed = c.seed;
  const auto corpus = SynthesizeCorpus(spec);
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw Error(ErrorCode::kIoError,
                "cannot create " + dir.string() + ": " + ec.message());
  for (const CorpusEntry& e : corpus)
    text::WriteFileAtomic(dir / (e.trace.app_id + ".trc"),
                          SerializeTrace(e.trace));
  text::WriteFileAtomic(dir / "manifest.csv", WriteManifestCsv(corpus));
  text::WriteFileAtomic(dir / "catalog.ssl",
                        SerializeCatalog(SyntheticCatalog()));
  out << corpus.size() << " traces written to " << dir.string() << "\n";
}

// Returns the number of problems found.
inline size_t RunValidate(const CliConfig& c, std::ostream& out) {
  size_t problems = 0;
  auto report = [&](const std::string& where, const std::string& what) {
    out << where << ": " << what << "\n";
    ++problems;
  };
  if (!c.catalog.empty()) {
    try {
      const auto catalog = ParseCatalog(text::ReadFile(c.catalog));
      out << c.catalog << ": " << catalog.num_sources() << " sources, "
          << catalog.num_sinks() << " sinks\n";
    } catch (const Error& e) {
      report(c.catalog, e.what());
    }
  }
  for (const fs::path& file : TraceFiles(c.inputs)) {
    Trace trace;
    try {
      trace = ParseTrace(text::ReadFile(file));
    } catch (const Error& e) {
      report(file.string(), e.what());
      continue;
    }
    for (const Finding& f : ValidateTrace(trace))
      report(file.string() + ":" + std::to_string(f.seq), f.message);
  }
  return problems;
}

// --------------------------------------------------------------------------

inline int Run(int argc,
               const char* const* argv,
               std::ostream& out,
               std::ostream& err) {
  CLI::App app{"SAD profile extraction, training and evaluation", "sadprof"};
  app.require_subcommand(1);
  CliConfig c;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "Random seed (default 0)");
  };
  auto add_extract_flags = [&](CLI::App* sub) {
    sub->add_option("--reachability", c.reachability,
                    "Vulnerability rule: temporal or graph-only")
        ->check(CLI::IsMember({"temporal", "graph-only"}));
    sub->add_option("--denominator", c.denominator,
                    "Denominator of f42-f52: literal-table (all instances) "
                    "or vulnerable-only")
        ->check(CLI::IsMember({"literal-table", "vulnerable-only"}));
    sub->add_option("--manifest", c.manifest,
                    "CSV app_id,label,year,group_tag overriding trace headers")
        ->check(CLI::ExistingFile);
  };
  auto add_forest_flags = [&](CLI::App* sub) {
    add_seed(sub);
    sub->add_option("--trees", c.forest.n_trees, "Number of trees")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-depth", c.max_depth, "Depth cap (0 = unlimited)");
    sub->add_option("--min-samples-split", c.forest.min_samples_split,
                    "Smallest node that may be split")
        ->check(CLI::PositiveNumber);
    sub->add_option("--features-per-split", c.forest.features_per_split,
                    "Non-constant features scored per node")
        ->check(CLI::Range(1, static_cast<int>(kNumFeatures)));
    sub->add_flag("--no-bootstrap", c.no_bootstrap,
                  "Grow every tree on the full training set");
  };
  auto add_out = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("-o,--out", c.out, "Output file");
    if (required)
      o->required();
  };

  auto* extract =
      app.add_subcommand("extract", "Traces and catalog to a profile CSV");
  extract->add_option("traces", c.inputs, "Trace files or directories")
      ->required();
  extract->add_option("--catalog", c.catalog, "Source/sink catalog")
      ->required()
      ->check(CLI::ExistingFile);
  add_extract_flags(extract);
  add_out(extract, false);

  auto* train = app.add_subcommand("train", "Profile CSV to a model file");
  train->add_option("profiles", c.profiles, "Labeled profile CSV")
      ->required()
      ->check(CLI::ExistingFile);
  add_forest_flags(train);
  add_out(train, true);

  auto* predict = app.add_subcommand(
      "predict", "Verdict CSV (app_id,verdict,score) for traces or profiles");
  predict->add_option("--model", c.model, "Model file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* pred_profiles =
      predict->add_option("--profiles", c.profiles, "Profile CSV to classify")
          ->check(CLI::ExistingFile);
  auto* pred_traces =
      predict->add_option("traces", c.inputs, "Trace files or directories");
  pred_profiles->excludes(pred_traces);
  predict->add_option("--catalog", c.catalog, "Catalog for trace inputs")
      ->check(CLI::ExistingFile);
  add_extract_flags(predict);
  add_out(predict, false);

  auto* crossval =
      app.add_subcommand("crossval", "Stratified k-fold cross-validation");
  crossval->add_option("profiles", c.profiles, "Labeled profile CSV")
      ->required()
      ->check(CLI::ExistingFile);
  crossval->add_option("--folds", c.folds, "Number of folds")
      ->check(CLI::Range(2, 1000));
  add_forest_flags(crossval);
  add_out(crossval, false);

  auto* holdout =
      app.add_subcommand("holdout", "Stratified train/test split evaluation");
  holdout->add_option("profiles", c.profiles, "Labeled profile CSV")
      ->required()
      ->check(CLI::ExistingFile);
  holdout
      ->add_option("--test-fraction", c.test_fraction,
                   "Share of each class held out")
      ->check(CLI::Range(0.0, 1.0));
  add_forest_flags(holdout);
  add_out(holdout, false);

  auto* span = app.add_subcommand(
      "span", "Train once, test on later data, one row per test set");
  span->add_option("--train", c.train, "Training profile CSV")
      ->required()
      ->check(CLI::ExistingFile);
  span->add_option("--test", c.tests, "Test profile CSV (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  span->add_flag("--by-year", c.by_year,
                 "Split each test CSV into one test set per year");
  add_forest_flags(span);
  add_out(span, false);

  auto* summarize = app.add_subcommand(
      "summarize", "Per-group feature means with 95% t intervals");
  summarize->add_option("profiles", c.profiles, "Profile CSV")
      ->required()
      ->check(CLI::ExistingFile);
  summarize
      ->add_option("--by", c.dataset,
                   "Dataset column: year, group (needs --manifest) or all")
      ->check(CLI::IsMember({"year", "group", "all"}));
  summarize->add_option("--manifest", c.manifest, "Manifest CSV")
      ->check(CLI::ExistingFile);
  add_out(summarize, false);

  auto* synth = app.add_subcommand(
      "synth", "Corpus spec to .trc files, manifest.csv and catalog.ssl");
  synth->add_option("spec", c.inputs, "Corpus spec file")
      ->required()
      ->expected(1)
      ->check(CLI::ExistingFile);
  synth->add_option("--seed", c.seed, "Overrides the spec's seed")
      ->each([&](const std::string&) { c.seed_given = true; });
  add_out(synth, true);

  auto* validate =
      app.add_subcommand("validate", "Lint trace and catalog files");
  validate->add_option("traces", c.inputs, "Trace files or directories");
  validate->add_option("--catalog", c.catalog, "Catalog file")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*extract) {
      RunExtract(c, out);
    } else if (*train) {
      RunTrain(c, out);
    } else if (*predict) {
      if (c.profiles.empty() && (c.inputs.empty() || c.catalog.empty())) {
        err << "error: predict needs --profiles or trace files with "
               "--catalog\n";
        return kExitUsage;
      }
      RunPredict(c, out);
    } else if (*crossval) {
      RunCrossval(c, out);
    } else if (*holdout) {
      RunHoldout(c, out);
    } else if (*span) {
      RunSpan(c, out);
    } else if (*summarize) {
      if (c.dataset == "group" && c.manifest.empty()) {
        err << "error: --by group needs --manifest\n";
        return kExitUsage;
      }
      RunSummarize(c, out);
    } else if (*synth) {
      RunSynth(c, out);
    } else if (*validate) {
      if (c.inputs.empty() && c.catalog.empty()) {
        err << "error: validate needs trace files or --catalog\n";
        return kExitUsage;
      }
      if (size_t n = RunValidate(c, out); n > 0) {
        err << "error: " << n << " problem(s) found\n";
        return kExitDataError;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace sadprof::cli

#endif  // SADPROF_TOOLS_CLI_HPP_
