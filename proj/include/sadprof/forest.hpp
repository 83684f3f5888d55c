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

// Random forest over SAD profiles: bagged CART trees split on Gini impurity,
// binary BENIGN/MALICIOUS labels.
//
// Randomness: tree i draws from std::mt19937_64 seeded with
// DeriveSeed(params.seed, i) (see random.hpp). Trees never share an engine,
// so the forest is the same however the trees are scheduled across threads.

#ifndef SADPROF_FOREST_HPP_
#define SADPROF_FOREST_HPP_

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sadprof/error.hpp"
#include "sadprof/random.hpp"
#include "sadprof/sad_profile.hpp"
#include "sadprof/trace.hpp"

namespace sadprof {

struct LabeledSample {
  FeatureVector features{};
  Label label = Label::kBenign;
  std::string app_id;
  int year = 0;
};

inline LabeledSample ToSample(const SadProfile& p) {
  return LabeledSample{p.features, p.label, p.app_id, p.year};
}

inline std::vector<LabeledSample> ToSamples(
    std::span<const SadProfile> profiles) {
  std::vector<LabeledSample> out;
  out.reserve(profiles.size());
  for (const SadProfile& p : profiles)
    out.push_back(ToSample(p));
  return out;
}

struct ForestParams {
  std::uint32_t n_trees = 100;
  std::optional<std::uint32_t> max_depth;  // unlimited when empty
  std::uint32_t min_samples_split = 2;
  std::uint32_t features_per_split = 8;  // ceil(sqrt(52))
  bool bootstrap = true;
  std::uint64_t seed = 0;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

// Internal nodes send x to `left` when x[feature] <= threshold. Leaves have
// feature == kLeaf. Both kinds record the class counts of the training
// samples that reached them.
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;  // 0-based
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t benign = 0;
  std::uint32_t malicious = 0;

  bool is_leaf() const { return feature == kLeaf; }
  // Ties go to MALICIOUS.
  Label majority() const {
    return malicious >= benign ? Label::kMalicious : Label::kBenign;
  }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& Leaf(const FeatureVector& x) const {
    std::uint32_t i = 0;
    while (!nodes[i].is_leaf()) {
      const TreeNode& n = nodes[i];
      i = x[static_cast<size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[i];
  }
  Label Predict(const FeatureVector& x) const { return Leaf(x).majority(); }
};

struct ForestModel {
  ForestParams params;
  std::vector<DecisionTree> trees;
  std::uint64_t training_fingerprint = 0;
};

// FNV-1a over labels and feature bit patterns.
inline std::uint64_t TrainingFingerprint(
    std::span<const LabeledSample> samples) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(samples.size());
  for (const LabeledSample& s : samples) {
    mix(static_cast<std::uint64_t>(s.label));
    for (double f : s.features) {
      std::uint64_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      mix(bits);
    }
  }
  return h;
}

namespace internal {

struct SplitChoice {
  std::int32_t feature = TreeNode::kLeaf;
  double threshold = 0.0;
  // Sum over children of (b^2 + m^2) / n. Maximizing it minimizes the
  // size-weighted Gini impurity of the children.
  double score = -1.0;
};

// Best threshold on one feature for the samples in `rows`. Returns nullopt
// when the feature is constant over `rows`. Candidate thresholds are midpoints
// between consecutive distinct values.
inline std::optional<SplitChoice> BestThreshold(
    std::span<const LabeledSample> samples,
    std::span<const std::uint32_t> rows,
    size_t feature,
    std::vector<std::pair<double, bool>>& scratch) {
  scratch.clear();
  std::uint64_t total_m = 0;
  for (std::uint32_t r : rows) {
    const bool mal = samples[r].label == Label::kMalicious;
    scratch.emplace_back(samples[r].features[feature], mal);
    total_m += mal;
  }
  std::sort(scratch.begin(), scratch.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (scratch.front().first == scratch.back().first)
    return std::nullopt;

  const double n = static_cast<double>(scratch.size());
  const double total_b = n - static_cast<double>(total_m);
  double left_m = 0, left_b = 0;
  SplitChoice best;
  best.feature = static_cast<std::int32_t>(feature);
  for (size_t i = 0; i + 1 < scratch.size(); ++i) {
    (scratch[i].second ? left_m : left_b) += 1;
    const double lo = scratch[i].first, hi = scratch[i + 1].first;
    if (lo == hi)
      continue;
    const double nl = left_m + left_b, nr = n - nl;
    const double rm = static_cast<double>(total_m) - left_m;
    const double rb = total_b - left_b;
    const double score =
        (left_m * left_m + left_b * left_b) / nl + (rm * rm + rb * rb) / nr;
    if (score > best.score) {
      double mid = lo + (hi - lo) / 2.0;
      if (mid >= hi)
        mid = lo;
      best.score = score;
      best.threshold = mid;
    }
  }
  return best;
}

// Evaluates features in `order` until `budget` non-constant features have been
// scored. Constant features do not use up the budget, so a node is only left
// unsplit when every feature is constant over it.
inline SplitChoice FindBestSplit(
    std::span<const LabeledSample> samples,
    std::span<const std::uint32_t> rows,
    std::span<const size_t> order,
    size_t budget,
    std::vector<std::pair<double, bool>>& scratch) {
  SplitChoice best;
  size_t evaluated = 0;
  for (size_t f : order) {
    if (evaluated >= budget)
      break;
    auto choice = BestThreshold(samples, rows, f, scratch);
    if (!choice)
      continue;
    ++evaluated;
    if (choice->score > best.score)
      best = *choice;
  }
  return best;
}

inline DecisionTree GrowTree(std::span<const LabeledSample> samples,
                             const ForestParams& params,
                             std::uint64_t tree_seed) {
  std::mt19937_64 rng(tree_seed);
  const size_t n = samples.size();
  std::vector<std::uint32_t> rows(n);
  if (params.bootstrap) {
    for (auto& r : rows)
      r = static_cast<std::uint32_t>(UniformIndex(rng, n));
  } else {
    std::iota(rows.begin(), rows.end(), 0u);
  }

  struct Pending {
    std::uint32_t node;
    size_t begin, end;
    std::uint32_t depth;
  };
  DecisionTree tree;
  tree.nodes.emplace_back();
  std::vector<Pending> stack{{0, 0, n, 0}};
  std::vector<size_t> order(kNumFeatures);
  std::vector<std::pair<double, bool>> scratch;
  scratch.reserve(n);

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    std::span<std::uint32_t> span(rows.data() + p.begin, p.end - p.begin);
    std::uint32_t mal = 0;
    for (std::uint32_t r : span)
      mal += samples[r].label == Label::kMalicious;
    const std::uint32_t ben = static_cast<std::uint32_t>(span.size()) - mal;
    tree.nodes[p.node].benign = ben;
    tree.nodes[p.node].malicious = mal;

    const bool pure = mal == 0 || ben == 0;
    const bool depth_cap = params.max_depth && p.depth >= *params.max_depth;
    if (pure || depth_cap || span.size() < params.min_samples_split)
      continue;

    // Fresh random feature order per node (Fisher-Yates).
    std::iota(order.begin(), order.end(), size_t{0});
    Shuffle(order, rng);
    const SplitChoice split =
        FindBestSplit(samples, span, order, params.features_per_split, scratch);
    if (split.feature == TreeNode::kLeaf)
      continue;

    auto mid = std::stable_partition(span.begin(), span.end(), [&](auto r) {
      return samples[r].features[static_cast<size_t>(split.feature)] <=
             split.threshold;
    });
    const size_t left_end = p.begin + static_cast<size_t>(mid - span.begin());
    const auto left = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto right = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[p.node];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    stack.push_back({right, left_end, p.end, p.depth + 1});
    stack.push_back({left, p.begin, left_end, p.depth + 1});
  }
  return tree;
}

inline void CheckParams(const ForestParams& p) {
  if (p.n_trees == 0)
    throw std::invalid_argument("n_trees must be positive");
  if (p.features_per_split == 0 || p.features_per_split > kNumFeatures)
    throw std::invalid_argument("features_per_split must be in [1, 52]");
  if (p.min_samples_split == 0)
    throw std::invalid_argument("min_samples_split must be positive");
  if (p.max_depth && *p.max_depth == 0)
    throw std::invalid_argument("max_depth must be positive");
}

}  // namespace internal

// Grows params.n_trees trees, using up to `threads` worker threads (0 picks
// the hardware concurrency). The result does not depend on `threads`.
inline ForestModel TrainForest(std::span<const LabeledSample> samples,
                               const ForestParams& params,
                               unsigned threads = 0) {
  internal::CheckParams(params);
  if (samples.empty())
    throw Error(ErrorCode::kEmptySamples, "no training samples");
  bool has_benign = false, has_malicious = false;
  for (const LabeledSample& s : samples) {
    if (s.label == Label::kUnlabeled)
      throw std::invalid_argument("training sample '" + s.app_id +
                                  "' is unlabeled");
    has_benign |= s.label == Label::kBenign;
    has_malicious |= s.label == Label::kMalicious;
  }
  if (!has_benign || !has_malicious)
    throw Error(ErrorCode::kSingleClassTrainingSet,
                "training set needs both BENIGN and MALICIOUS samples");

  ForestModel model;
  model.params = params;
  model.training_fingerprint = TrainingFingerprint(samples);
  model.trees.resize(params.n_trees);

  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, params.n_trees);
  std::atomic<std::uint32_t> next{0};
  auto worker = [&] {
    for (std::uint32_t i = next++; i < params.n_trees; i = next++)
      model.trees[i] =
          internal::GrowTree(samples, params, DeriveSeed(params.seed, i));
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(worker);
  }
  return model;
}

inline std::uint32_t MaliciousVotes(const ForestModel& m,
                                    const FeatureVector& x) {
  std::uint32_t votes = 0;
  for (const DecisionTree& t : m.trees)
    votes += t.Predict(x) == Label::kMalicious;
  return votes;
}

// Fraction of trees voting MALICIOUS.
inline double PredictScore(const ForestModel& m, const FeatureVector& x) {
  if (m.trees.empty())
    return 0.0;
  return static_cast<double>(MaliciousVotes(m, x)) /
         static_cast<double>(m.trees.size());
}

// Majority vote; an exact tie is MALICIOUS.
inline Label Predict(const ForestModel& m, const FeatureVector& x) {
  return 2 * static_cast<std::uint64_t>(MaliciousVotes(m, x)) >= m.trees.size()
             ? Label::kMalicious
             : Label::kBenign;
}

// ---------------------------------------------------------------------------
// .sadmodel files: one JSON document.
//
//   {"format":"sadprof-forest","version":1,"num_features":52,
//    "params":{...},"training_fingerprint":"<16 hex>",
//    "trees":[[[feature,threshold,left,right,benign,malicious],...],...]}
//
// `feature` is 1-based; 0 marks a leaf.

inline constexpr std::string_view kModelFormat = "sadprof-forest";
inline constexpr int kModelVersion = 1;

inline std::string SaveModel(const ForestModel& m) {
  using nlohmann::json;
  json params = {
      {"n_trees", m.params.n_trees},
      {"max_depth", m.params.max_depth ? json(*m.params.max_depth) : json()},
      {"min_samples_split", m.params.min_samples_split},
      {"features_per_split", m.params.features_per_split},
      {"bootstrap", m.params.bootstrap},
      {"seed", m.params.seed},
  };
  char fp[17];
  std::snprintf(fp, sizeof fp, "%016llx",
                static_cast<unsigned long long>(m.training_fingerprint));
  json trees = json::array();
  for (const DecisionTree& t : m.trees) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) {
      nodes.push_back(json::array({n.feature + 1, n.threshold, n.left, n.right,
                                   n.benign, n.malicious}));
    }
    trees.push_back(std::move(nodes));
  }
  json doc = {{"format", kModelFormat},       {"version", kModelVersion},
              {"num_features", kNumFeatures}, {"params", std::move(params)},
              {"training_fingerprint", fp},   {"trees", std::move(trees)}};
  return doc.dump() + "\n";
}

inline ForestModel LoadModel(std::string_view bytes) {
  using nlohmann::json;
  auto corrupt = [](const std::string& why) {
    return Error(ErrorCode::kCorruptModel, why);
  };
  json doc = json::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object())
    throw corrupt("not a JSON document");
  try {
    if (doc.at("format").get<std::string>() != kModelFormat)
      throw corrupt("unknown format tag");
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion)
      throw Error(ErrorCode::kUnsupportedVersion,
                  "model version " + std::to_string(version) +
                      " (supported: " + std::to_string(kModelVersion) + ")");
    if (doc.at("num_features").get<size_t>() != kNumFeatures)
      throw corrupt("feature count mismatch");

    ForestModel m;
    const json& p = doc.at("params");
    m.params.n_trees = p.at("n_trees").get<std::uint32_t>();
    if (!p.at("max_depth").is_null())
      m.params.max_depth = p.at("max_depth").get<std::uint32_t>();
    m.params.min_samples_split = p.at("min_samples_split").get<std::uint32_t>();
    m.params.features_per_split =
        p.at("features_per_split").get<std::uint32_t>();
    m.params.bootstrap = p.at("bootstrap").get<bool>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    try {
      internal::CheckParams(m.params);
    } catch (const std::invalid_argument& e) {
      throw corrupt(e.what());
    }

    const std::string fp = doc.at("training_fingerprint").get<std::string>();
    std::uint64_t value = 0;
    auto [ptr, ec] =
        std::from_chars(fp.data(), fp.data() + fp.size(), value, 16);
    if (fp.size() != 16 || ec != std::errc() || ptr != fp.data() + fp.size())
      throw corrupt("bad training fingerprint");
    m.training_fingerprint = value;

    const json& trees = doc.at("trees");
    if (!trees.is_array() || trees.size() != m.params.n_trees)
      throw corrupt("tree count does not match n_trees");
    for (const json& jt : trees) {
      DecisionTree t;
      if (!jt.is_array() || jt.empty())
        throw corrupt("empty tree");
      std::vector<std::uint8_t> referenced(jt.size(), 0);
      for (size_t i = 0; i < jt.size(); ++i) {
        const json& jn = jt[i];
        if (!jn.is_array() || jn.size() != 6)
          throw corrupt("node is not a 6-element array");
        TreeNode n;
        const int feature = jn[0].get<int>();
        if (feature < 0 || feature > static_cast<int>(kNumFeatures))
          throw corrupt("split feature out of range");
        n.feature = feature - 1;
        n.threshold = jn[1].get<double>();
        n.left = jn[2].get<std::uint32_t>();
        n.right = jn[3].get<std::uint32_t>();
        n.benign = jn[4].get<std::uint32_t>();
        n.malicious = jn[5].get<std::uint32_t>();
        if (!n.is_leaf()) {
          // Children always follow their parent, so the structure is acyclic.
          if (n.left <= i || n.right <= i || n.left >= jt.size() ||
              n.right >= jt.size() || n.left == n.right)
            throw corrupt("child index out of range");
          if (referenced[n.left]++ || referenced[n.right]++)
            throw corrupt("node has two parents");
        }
        t.nodes.push_back(n);
      }
      for (size_t i = 1; i < referenced.size(); ++i) {
        if (!referenced[i])
          throw corrupt("unreachable node");
      }
      m.trees.push_back(std::move(t));
    }
    return m;
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
}

}  // namespace sadprof

#endif  // SADPROF_FOREST_HPP_
