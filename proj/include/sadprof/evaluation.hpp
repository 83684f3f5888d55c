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

// Detection metrics and the three evaluation designs: stratified k-fold
// cross-validation, stratified holdout, and detection over time (train once
// on old samples, test on sets from later years). MALICIOUS is the positive
// class throughout.

#ifndef SADPROF_EVALUATION_HPP_
#define SADPROF_EVALUATION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "sadprof/error.hpp"
#include "sadprof/forest.hpp"
#include "sadprof/random.hpp"
#include "sadprof/sad_profile.hpp"
#include "sadprof/text.hpp"

namespace sadprof {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&,
                         const ConfusionCounts&) = default;
};

inline void Tally(ConfusionCounts& c, Label truth, Label predicted) {
  const bool pos = truth == Label::kMalicious;
  const bool pred_pos = predicted == Label::kMalicious;
  if (pos)
    ++(pred_pos ? c.tp : c.fn);
  else
    ++(pred_pos ? c.fp : c.tn);
}

struct MetricTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when any of the three hit a 0/0 and was defined as 0.
  bool degenerate = false;
};

inline MetricTriple MetricsFromPR(double precision, double recall) {
  MetricTriple m;
  m.precision = precision;
  m.recall = recall;
  if (precision + recall == 0.0) {
    m.degenerate = true;
  } else {
    m.f1 = 2.0 * precision * recall / (precision + recall);
  }
  return m;
}

inline MetricTriple ComputeMetrics(const ConfusionCounts& c) {
  const std::uint64_t pred_pos = c.tp + c.fp;
  const std::uint64_t actual_pos = c.tp + c.fn;
  const double p =
      pred_pos == 0 ? 0.0
                    : static_cast<double>(c.tp) / static_cast<double>(pred_pos);
  const double r = actual_pos == 0 ? 0.0
                                   : static_cast<double>(c.tp) /
                                         static_cast<double>(actual_pos);
  MetricTriple m = MetricsFromPR(p, r);
  m.degenerate |= pred_pos == 0 || actual_pos == 0;
  return m;
}

enum class Study { kCrossValidation, kHoldout, kSpan };

constexpr std::string_view StudyName(Study s) {
  switch (s) {
    case Study::kCrossValidation:
      return "CV";
    case Study::kHoldout:
      return "HOLDOUT";
    case Study::kSpan:
      return "SPAN";
  }
  return "?";
}

struct ReportRow {
  std::string train_tag;
  std::string test_tag;
  int span_years = 0;
  MetricTriple metrics;
  ConfusionCounts counts;
};

// Indices into the sample list(s) the study was run on.
struct SplitIndices {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

struct EvalReport {
  Study study = Study::kCrossValidation;
  // Headline rows: the CV mean, the holdout result, or one row per span.
  std::vector<ReportRow> rows;
  // Cross-validation only: one row per fold, in fold order.
  std::vector<ReportRow> folds;
  // Train/test partitions actually used (one per fold for CV).
  std::vector<SplitIndices> splits;
  std::uint32_t models_trained = 0;
};

namespace internal {

// Indices per class, each list shuffled. [0] = MALICIOUS, [1] = BENIGN.
inline std::array<std::vector<size_t>, 2> ShuffledByClass(
    std::span<const LabeledSample> samples,
    std::mt19937_64& rng) {
  std::array<std::vector<size_t>, 2> by_class;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label == Label::kUnlabeled)
      throw std::invalid_argument("sample '" + samples[i].app_id +
                                  "' is unlabeled");
    by_class[samples[i].label == Label::kMalicious ? 0 : 1].push_back(i);
  }
  Shuffle(by_class[0], rng);
  Shuffle(by_class[1], rng);
  return by_class;
}

inline std::vector<LabeledSample> Gather(std::span<const LabeledSample> all,
                                         std::span<const size_t> idx) {
  std::vector<LabeledSample> out;
  out.reserve(idx.size());
  for (size_t i : idx)
    out.push_back(all[i]);
  return out;
}

inline ConfusionCounts Score(const ForestModel& model,
                             std::span<const LabeledSample> samples) {
  ConfusionCounts c;
  for (const LabeledSample& s : samples)
    Tally(c, s.label, Predict(model, s.features));
  return c;
}

}  // namespace internal

// Assigns each sample a fold in [0, k). Classes are dealt round-robin from a
// shuffled order, MALICIOUS first then BENIGN continuing the rotation, so each
// fold's per-class count is within one of every other fold's and fold sizes
// differ by at most one.
inline std::vector<std::uint32_t> StratifiedFolds(
    std::span<const LabeledSample> samples,
    std::uint32_t k,
    std::uint64_t seed) {
  if (k < 2)
    throw std::invalid_argument("need at least 2 folds");
  std::mt19937_64 rng(SplitMix64(seed));
  auto by_class = internal::ShuffledByClass(samples, rng);
  for (const auto& cls : by_class) {
    if (cls.size() < k)
      throw Error(ErrorCode::kTooFewSamples,
                  "each class needs at least " + std::to_string(k) +
                      " samples for " + std::to_string(k) + "-fold CV");
  }
  std::vector<std::uint32_t> fold(samples.size());
  size_t next = 0;
  for (const auto& cls : by_class) {
    for (size_t i : cls)
      fold[i] = static_cast<std::uint32_t>(next++ % k);
  }
  return fold;
}

// Aggregate metrics are per-fold means; in particular the aggregate F1 is
// the mean of fold F1 values, not F1 of the mean precision and recall.
inline EvalReport CrossValidate(std::span<const LabeledSample> samples,
                                const ForestParams& params,
                                std::uint32_t k = 10,
                                std::uint64_t seed = 0,
                                const std::string& tag = "all") {
  const auto fold = StratifiedFolds(samples, k, seed);
  EvalReport report;
  report.study = Study::kCrossValidation;
  ReportRow mean{tag, "mean", 0, {}, {}};
  for (std::uint32_t f = 0; f < k; ++f) {
    SplitIndices split;
    for (size_t i = 0; i < samples.size(); ++i)
      (fold[i] == f ? split.test : split.train).push_back(i);
    const auto train = internal::Gather(samples, split.train);
    const auto test = internal::Gather(samples, split.test);
    const ForestModel model = TrainForest(train, params);
    ++report.models_trained;
    ReportRow row;
    row.train_tag = tag;
    char name[16];
    std::snprintf(name, sizeof name, "fold%02u", f + 1);
    row.test_tag = name;
    row.counts = internal::Score(model, test);
    row.metrics = ComputeMetrics(row.counts);
    mean.counts += row.counts;
    mean.metrics.precision += row.metrics.precision;
    mean.metrics.recall += row.metrics.recall;
    mean.metrics.f1 += row.metrics.f1;
    mean.metrics.degenerate |= row.metrics.degenerate;
    report.folds.push_back(std::move(row));
    report.splits.push_back(std::move(split));
  }
  mean.metrics.precision /= k;
  mean.metrics.recall /= k;
  mean.metrics.f1 /= k;
  report.rows.push_back(std::move(mean));
  return report;
}

// Stratified split: round(test_fraction * n_c) samples of each class c go to
// the test set, clamped so both sides keep at least one sample per class.
inline SplitIndices StratifiedHoldoutSplit(
    std::span<const LabeledSample> samples,
    double test_fraction,
    std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test fraction must be in (0, 1)");
  std::mt19937_64 rng(SplitMix64(seed));
  auto by_class = internal::ShuffledByClass(samples, rng);
  SplitIndices split;
  for (const auto& cls : by_class) {
    if (cls.size() < 2)
      throw Error(ErrorCode::kTooFewSamples,
                  "holdout needs at least 2 samples of each class");
    auto n_test = static_cast<size_t>(
        std::llround(test_fraction * static_cast<double>(cls.size())));
    n_test = std::clamp<size_t>(n_test, 1, cls.size() - 1);
    split.test.insert(split.test.end(), cls.begin(), cls.begin() + n_test);
    split.train.insert(split.train.end(), cls.begin() + n_test, cls.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

inline EvalReport HoldoutEvaluate(std::span<const LabeledSample> samples,
                                  const ForestParams& params,
                                  double test_fraction = 0.30,
                                  std::uint64_t seed = 0,
                                  const std::string& tag = "all") {
  EvalReport report;
  report.study = Study::kHoldout;
  SplitIndices split = StratifiedHoldoutSplit(samples, test_fraction, seed);
  const auto train = internal::Gather(samples, split.train);
  const auto test = internal::Gather(samples, split.test);
  const ForestModel model = TrainForest(train, params);
  report.models_trained = 1;
  ReportRow row{tag, tag + "-holdout", 0, {}, internal::Score(model, test)};
  row.metrics = ComputeMetrics(row.counts);
  report.rows.push_back(std::move(row));
  report.splits.push_back(std::move(split));
  return report;
}

struct TestSet {
  std::string tag;
  int span_years = 0;
  std::vector<LabeledSample> samples;
};

// Years between the newest malicious sample in `train` and the newest
// malicious sample in `test` (falling back to all samples when a side has no
// malware).
inline int SpanYears(std::span<const LabeledSample> train,
                     std::span<const LabeledSample> test) {
  auto newest = [](std::span<const LabeledSample> s) {
    int any = std::numeric_limits<int>::min();
    int mal = std::numeric_limits<int>::min();
    for (const LabeledSample& x : s) {
      any = std::max(any, x.year);
      if (x.label == Label::kMalicious)
        mal = std::max(mal, x.year);
    }
    return mal != std::numeric_limits<int>::min() ? mal : any;
  };
  return newest(test) - newest(train);
}

// Trains one model on `train` and scores it on every test set. Rows are
// ordered by span_years (stable for equal spans).
inline EvalReport SpanEvaluate(std::span<const LabeledSample> train,
                               std::span<const TestSet> tests,
                               const ForestParams& params,
                               const std::string& train_tag = "train") {
  for (const TestSet& t : tests) {
    if (t.samples.empty())
      throw Error(ErrorCode::kTooFewSamples,
                  "test set '" + t.tag + "' is empty");
  }
  EvalReport report;
  report.study = Study::kSpan;
  const ForestModel model = TrainForest(train, params);
  report.models_trained = 1;
  std::vector<size_t> order(tests.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return tests[a].span_years < tests[b].span_years;
  });
  for (size_t i : order) {
    ReportRow row{train_tag,
                  tests[i].tag,
                  tests[i].span_years,
                  {},
                  internal::Score(model, tests[i].samples)};
    row.metrics = ComputeMetrics(row.counts);
    report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report rendering.

inline std::string ReportCsvHeader() {
  return "study,train_tag,test_tag,span_years,precision,recall,f1,tp,fp,tn,fn";
}

inline std::string ReportCsvRow(Study study, const ReportRow& r) {
  std::string s(StudyName(study));
  s += ',' + r.train_tag + ',' + r.test_tag + ',' +
       std::to_string(r.span_years) + ',' +
       text::FormatG9(r.metrics.precision) + ',' +
       text::FormatG9(r.metrics.recall) + ',' + text::FormatG9(r.metrics.f1) +
       ',' + std::to_string(r.counts.tp) + ',' + std::to_string(r.counts.fp) +
       ',' + std::to_string(r.counts.tn) + ',' + std::to_string(r.counts.fn);
  return s;
}

// Fold rows (CV only) come first, then the headline rows.
inline std::string WriteReportCsv(const EvalReport& report) {
  std::string out = ReportCsvHeader() + "\n";
  for (const ReportRow& r : report.folds)
    out += ReportCsvRow(report.study, r) + "\n";
  for (const ReportRow& r : report.rows)
    out += ReportCsvRow(report.study, r) + "\n";
  return out;
}

inline std::string FormatReportTable(const EvalReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %-14s %-18s %5s %9s %9s %9s %s\n",
                "study", "train", "test", "span", "precision", "recall", "F1",
                "tp/fp/tn/fn");
  out += line;
  auto emit = [&](const ReportRow& r) {
    std::snprintf(
        line, sizeof line,
        "%-8s %-14s %-18s %5d %9.3f %9.3f %9.3f %llu/%llu/%llu/%llu%s\n",
        std::string(StudyName(report.study)).c_str(), r.train_tag.c_str(),
        r.test_tag.c_str(), r.span_years, r.metrics.precision, r.metrics.recall,
        r.metrics.f1, static_cast<unsigned long long>(r.counts.tp),
        static_cast<unsigned long long>(r.counts.fp),
        static_cast<unsigned long long>(r.counts.tn),
        static_cast<unsigned long long>(r.counts.fn),
        r.metrics.degenerate ? "  (degenerate)" : "");
    out += line;
  };
  for (const ReportRow& r : report.folds)
    emit(r);
  for (const ReportRow& r : report.rows)
    emit(r);
  return out;
}

// ---------------------------------------------------------------------------
// Characterization statistics: per-group feature means with two-sided 95%
// Student-t confidence intervals.

inline double StudentTQuantile(double p, double degrees_of_freedom) {
  boost::math::students_t dist(degrees_of_freedom);
  return boost::math::quantile(dist, p);
}

struct SummaryStat {
  size_t feature = 0;  // 1-based
  std::string dataset;
  Label label = Label::kUnlabeled;
  size_t n = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Mean and 95% CI of one sample: mean +/- t(0.975, n-1) * s / sqrt(n).
inline SummaryStat SummarizeValues(std::span<const double> values) {
  if (values.size() < 2)
    throw Error(ErrorCode::kGroupTooSmall,
                "confidence interval needs at least 2 values");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values)
    sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values)
    ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double half = StudentTQuantile(0.975, n - 1.0) * sd / std::sqrt(n);
  SummaryStat s;
  s.n = values.size();
  s.mean = mean;
  s.ci_low = std::min(mean, mean - half);
  s.ci_high = std::max(mean, mean + half);
  return s;
}

// Groups profiles by (dataset_of(profile), label) and summarizes every
// feature of every group. Groups come out sorted by dataset then label.
inline std::vector<SummaryStat> Summarize(
    std::span<const SadProfile> profiles,
    const std::function<std::string(const SadProfile&)>& dataset_of) {
  std::map<std::pair<std::string, Label>, std::vector<const SadProfile*>>
      groups;
  for (const SadProfile& p : profiles)
    groups[{dataset_of(p), p.label}].push_back(&p);
  std::vector<SummaryStat> out;
  std::vector<double> column;
  for (const auto& [key, members] : groups) {
    if (members.size() < 2)
      throw Error(ErrorCode::kGroupTooSmall,
                  "group " + key.first + "/" +
                      std::string(LabelName(key.second)) + " has " +
                      std::to_string(members.size()) + " profile(s)");
    for (size_t f = 0; f < kNumFeatures; ++f) {
      column.clear();
      for (const SadProfile* p : members)
        column.push_back(p->features[f]);
      SummaryStat s = SummarizeValues(column);
      s.feature = f + 1;
      s.dataset = key.first;
      s.label = key.second;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline std::string WriteSummaryCsv(std::span<const SummaryStat> stats) {
  std::string out = "dataset,label,feature,n,mean,ci_low,ci_high\n";
  for (const SummaryStat& s : stats) {
    out += s.dataset + ',' + std::string(LabelName(s.label)) + ",f" +
           std::to_string(s.feature) + ',' + std::to_string(s.n) + ',' +
           text::FormatG9(s.mean) + ',' + text::FormatG9(s.ci_low) + ',' +
           text::FormatG9(s.ci_high) + '\n';
  }
  return out;
}

}  // namespace sadprof

#endif  // SADPROF_EVALUATION_HPP_
