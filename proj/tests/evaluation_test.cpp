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

#include "sadprof/evaluation.hpp"

#include <random>

#include "gtest/gtest.h"
#include "test_support.hpp"

namespace sadprof {
namespace {

// Malicious samples sit near 0.7 and benign ones near 0.3, with enough
// overlap that the classifier makes some mistakes.
std::vector<LabeledSample> Noisy(size_t n_mal,
                                 size_t n_ben,
                                 std::uint64_t seed,
                                 int year = 2012) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.2);
  std::vector<LabeledSample> out;
  for (size_t i = 0; i < n_mal + n_ben; ++i) {
    LabeledSample s;
    const bool mal = i < n_mal;
    for (double& v : s.features)
      v = std::clamp((mal ? 0.55 : 0.45) + noise(rng), 0.0, 1.0);
    s.label = mal ? Label::kMalicious : Label::kBenign;
    s.app_id = "n" + std::to_string(i);
    s.year = year;
    out.push_back(s);
  }
  return out;
}

ForestParams SmallForest() {
  ForestParams p;
  p.n_trees = 10;
  p.seed = 1;
  return p;
}

TEST(MetricsTest, Examples) {
  const auto m = ComputeMetrics({8, 2, 5, 2});
  EXPECT_DOUBLE_EQ(m.precision, 0.8);
  EXPECT_DOUBLE_EQ(m.recall, 0.8);
  EXPECT_DOUBLE_EQ(m.f1, 0.8);
  EXPECT_FALSE(m.degenerate);

  const auto none = ComputeMetrics({0, 0, 10, 3});
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_TRUE(none.degenerate);

  // Harmonic mean: 2PR/(P+R).
  EXPECT_NEAR(MetricsFromPR(0.999, 0.709).f1, 0.829380562, 1e-9);
  EXPECT_NEAR(MetricsFromPR(0.937, 0.937).f1, 0.937, 1e-15);
  EXPECT_NEAR(MetricsFromPR(1.0, 0.5).f1, 2.0 / 3.0, 1e-15);
}

TEST(MetricsTest, TallyCountsEveryCase) {
  ConfusionCounts c;
  Tally(c, Label::kMalicious, Label::kMalicious);
  Tally(c, Label::kMalicious, Label::kBenign);
  Tally(c, Label::kBenign, Label::kMalicious);
  Tally(c, Label::kBenign, Label::kBenign);
  Tally(c, Label::kBenign, Label::kBenign);
  EXPECT_EQ(c.tp, 1u);
  EXPECT_EQ(c.fn, 1u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.tn, 2u);
  EXPECT_EQ(c.total(), 5u);
}

TEST(StratifiedFoldsTest, SizesAndBalance) {
  const auto samples = Noisy(53, 50, 1);
  const auto fold = StratifiedFolds(samples, 10, 7);
  std::vector<int> size(10), mal(10), ben(10);
  for (size_t i = 0; i < samples.size(); ++i) {
    ASSERT_LT(fold[i], 10u);
    ++size[fold[i]];
    ++(samples[i].label == Label::kMalicious ? mal : ben)[fold[i]];
  }
  EXPECT_EQ(std::count(size.begin(), size.end(), 10), 7);
  EXPECT_EQ(std::count(size.begin(), size.end(), 11), 3);
  for (const auto* v : {&mal, &ben}) {
    auto [lo, hi] = std::minmax_element(v->begin(), v->end());
    EXPECT_LE(*hi - *lo, 1);
  }
  EXPECT_EQ(StratifiedFolds(samples, 10, 7), fold);
  EXPECT_NE(StratifiedFolds(samples, 10, 8), fold);
}

TEST(StratifiedFoldsTest, TooFewSamples) {
  const auto samples = Noisy(9, 40, 2);
  try {
    StratifiedFolds(samples, 10, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewSamples);
  }
}

TEST(CrossValidateTest, FoldsPartitionAndMeanIsPerFoldAverage) {
  const auto samples = Noisy(60, 43, 3);
  const auto report = CrossValidate(samples, SmallForest(), 10, 5);
  EXPECT_EQ(report.models_trained, 10u);
  ASSERT_EQ(report.folds.size(), 10u);
  ASSERT_EQ(report.rows.size(), 1u);
  std::vector<int> seen(samples.size(), 0);
  double f1 = 0, p = 0, r = 0;
  ConfusionCounts total;
  for (size_t f = 0; f < 10; ++f) {
    const auto& split = report.splits[f];
    EXPECT_EQ(split.train.size() + split.test.size(), samples.size());
    for (size_t i : split.test)
      ++seen[i];
    std::set<size_t> train(split.train.begin(), split.train.end());
    for (size_t i : split.test)
      EXPECT_FALSE(train.count(i));
    const auto& row = report.folds[f];
    EXPECT_EQ(row.counts.total(), split.test.size());
    f1 += row.metrics.f1;
    p += row.metrics.precision;
    r += row.metrics.recall;
    total += row.counts;
  }
  for (int s : seen)
    EXPECT_EQ(s, 1);
  EXPECT_NEAR(report.rows[0].metrics.f1, f1 / 10, 1e-12);
  EXPECT_NEAR(report.rows[0].metrics.precision, p / 10, 1e-12);
  EXPECT_NEAR(report.rows[0].metrics.recall, r / 10, 1e-12);
  EXPECT_EQ(report.rows[0].counts.total(), samples.size());
  EXPECT_EQ(report.rows[0].counts.tp, total.tp);
  EXPECT_EQ(report.rows[0].test_tag, "mean");
  EXPECT_EQ(report.folds[0].test_tag, "fold01");
}

// Recounts a fold's confusion matrix from the split and a retrained model.
TEST(CrossValidateTest, ConfusionCountsMatchRecount) {
  const auto samples = Noisy(30, 30, 4);
  const auto params = SmallForest();
  const auto report = CrossValidate(samples, params, 5, 9);
  for (size_t f = 0; f < 5; ++f) {
    std::vector<LabeledSample> train;
    for (size_t i : report.splits[f].train)
      train.push_back(samples[i]);
    const auto model = TrainForest(train, params);
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (size_t i : report.splits[f].test) {
      const bool truth = samples[i].label == Label::kMalicious;
      const bool pred =
          Predict(model, samples[i].features) == Label::kMalicious;
      tp += truth && pred;
      fp += !truth && pred;
      tn += !truth && !pred;
      fn += truth && !pred;
    }
    const auto& c = report.folds[f].counts;
    EXPECT_EQ(c.tp, tp);
    EXPECT_EQ(c.fp, fp);
    EXPECT_EQ(c.tn, tn);
    EXPECT_EQ(c.fn, fn);
  }
}

TEST(HoldoutTest, SplitSizes) {
  const auto samples = Noisy(500, 500, 5);
  const auto split = StratifiedHoldoutSplit(samples, 0.30, 1);
  EXPECT_EQ(split.train.size(), 700u);
  EXPECT_EQ(split.test.size(), 300u);
  size_t test_mal = 0;
  for (size_t i : split.test)
    test_mal += samples[i].label == Label::kMalicious;
  EXPECT_EQ(test_mal, 150u);

  const auto small = Noisy(2, 3, 5);
  const auto s2 = StratifiedHoldoutSplit(small, 0.30, 1);
  EXPECT_EQ(s2.test.size(), 2u);  // one of each class after clamping
}

TEST(HoldoutTest, ReportCountsTestSet) {
  const auto samples = Noisy(100, 80, 6);
  const auto report = HoldoutEvaluate(samples, SmallForest(), 0.30, 2);
  EXPECT_EQ(report.models_trained, 1u);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].counts.total(), 30u + 24u);
}

TEST(SpanTest, OneModelRowsSortedBySpan) {
  const auto train = Noisy(100, 100, 7, 2012);
  std::vector<TestSet> tests;
  for (int span : {3, 1, 5, 2, 4}) {
    auto s = Noisy(40, 40, 100 + span, 2012 + span);
    EXPECT_EQ(SpanYears(train, s), span);
    tests.push_back({"y" + std::to_string(span), span, s});
  }
  const auto report = SpanEvaluate(train, tests, SmallForest());
  EXPECT_EQ(report.models_trained, 1u);
  ASSERT_EQ(report.rows.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(report.rows[i].span_years, i + 1);
    EXPECT_EQ(report.rows[i].test_tag, "y" + std::to_string(i + 1));
    EXPECT_EQ(report.rows[i].counts.total(), 80u);
  }
}

TEST(ReportCsvTest, FoldsThenAggregate) {
  const auto report = CrossValidate(Noisy(20, 20, 8), SmallForest(), 4, 0);
  const std::string csv = WriteReportCsv(report);
  const auto lines = text::SplitLines(csv);
  ASSERT_EQ(lines.size(), 1u + 4u + 1u);
  EXPECT_EQ(lines[0], ReportCsvHeader());
  EXPECT_EQ(lines[1].rfind("CV,all,fold01,", 0), 0u);
  EXPECT_EQ(lines[5].rfind("CV,all,mean,", 0), 0u);
}

TEST(StudentTTest, TableValues) {
  EXPECT_NEAR(StudentTQuantile(0.975, 1), 12.7062, 1e-4);
  EXPECT_NEAR(StudentTQuantile(0.975, 2), 4.3027, 1e-4);
  EXPECT_NEAR(StudentTQuantile(0.975, 10), 2.2281, 1e-4);
  EXPECT_NEAR(StudentTQuantile(0.975, 30), 2.0423, 1e-4);
}

TEST(SummarizeTest, ThreeValues) {
  const std::vector<double> v = {0.1, 0.2, 0.3};
  const auto s = SummarizeValues(v);
  EXPECT_EQ(s.n, 3u);
  EXPECT_NEAR(s.mean, 0.2, 1e-15);
  // t(0.975, 2) * sd / sqrt(n) with sd = 0.1.
  EXPECT_NEAR(s.mean - s.ci_low, 0.248414, 1e-6);
  EXPECT_NEAR(s.ci_high - s.mean, 0.248414, 1e-6);
}

TEST(SummarizeTest, ConstantGroupHasZeroWidth) {
  const std::vector<double> v(5, 0.25);
  const auto s = SummarizeValues(v);
  EXPECT_EQ(s.ci_low, 0.25);
  EXPECT_EQ(s.ci_high, 0.25);
}

TEST(SummarizeTest, GroupOfOneRejected) {
  std::vector<SadProfile> profiles(3);
  profiles[0].label = profiles[1].label = Label::kBenign;
  profiles[2].label = Label::kMalicious;
  try {
    Summarize(profiles, [](const SadProfile&) { return std::string("d"); });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGroupTooSmall);
  }
}

TEST(SummarizeTest, MeansMatchDirectComputation) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SadProfile> profiles(40);
  for (size_t i = 0; i < profiles.size(); ++i) {
    profiles[i].app_id = (i % 3 ? "a" : "b") + std::to_string(i);
    profiles[i].label = i % 2 ? Label::kMalicious : Label::kBenign;
    for (double& v : profiles[i].features)
      v = u(rng);
  }
  const auto stats = Summarize(
      profiles, [](const SadProfile& p) { return p.app_id.substr(0, 1); });
  ASSERT_EQ(stats.size(), 4u * kNumFeatures);
  for (const SummaryStat& s : stats) {
    double sum = 0;
    size_t n = 0;
    for (const SadProfile& p : profiles) {
      if (p.app_id.substr(0, 1) == s.dataset && p.label == s.label) {
        sum += p.features[s.feature - 1];
        ++n;
      }
    }
    EXPECT_EQ(s.n, n);
    EXPECT_NEAR(s.mean, sum / n, 1e-12);
    EXPECT_LE(s.ci_low, s.mean);
    EXPECT_GE(s.ci_high, s.mean);
  }
}

}  // namespace
}  // namespace sadprof
