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

// Frequency-annotated dynamic call graph built from one trace, and the
// source/sink vulnerability marking computed over it.

#ifndef SADPROF_CALL_GRAPH_HPP_
#define SADPROF_CALL_GRAPH_HPP_

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sadprof/catalog.hpp"
#include "sadprof/trace.hpp"

namespace sadprof {

using NodeId = std::uint32_t;

// One static call location. Identity is (caller, site_index, callee); the
// remaining fields aggregate every dynamic instance of it.
struct Callsite {
  NodeId caller = 0;
  std::uint64_t site_index = 0;
  NodeId callee = 0;
  std::uint64_t instance_count = 0;
  std::uint64_t first_seq = 0;
  std::uint64_t last_seq = 0;
};

class DynamicCallGraph {
 public:
  // Nodes in order of first appearance in the trace.
  const std::vector<MethodSig>& nodes() const { return nodes_; }
  size_t num_nodes() const { return nodes_.size(); }

  std::optional<NodeId> Find(const MethodSig& sig) const {
    auto it = ids_.find(sig);
    if (it == ids_.end())
      return std::nullopt;
    return it->second;
  }
  const MethodSig& sig(NodeId id) const { return nodes_[id]; }

  // (caller, callee) -> number of calls, summed over all callsites.
  const std::map<std::pair<NodeId, NodeId>, std::uint64_t>& edges() const {
    return edges_;
  }
  std::uint64_t EdgeFrequency(NodeId caller, NodeId callee) const {
    auto it = edges_.find({caller, callee});
    return it == edges_.end() ? 0 : it->second;
  }
  // Distinct callees of `id`, ascending.
  const std::vector<NodeId>& successors(NodeId id) const {
    return successors_[id];
  }

  // Callsites in order of first appearance.
  const std::vector<Callsite>& callsites() const { return callsites_; }
  const Callsite* FindCallsite(const MethodSig& caller,
                               std::uint64_t site,
                               const MethodSig& callee) const {
    auto c = Find(caller);
    auto e = Find(callee);
    if (!c || !e)
      return nullptr;
    auto it = callsite_index_.find({*c, site, *e});
    return it == callsite_index_.end() ? nullptr : &callsites_[it->second];
  }

  std::uint64_t total_instances() const { return total_instances_; }

  friend DynamicCallGraph BuildCallGraph(const Trace& trace);

 private:
  NodeId Intern(const MethodSig& sig) {
    auto [it, inserted] = ids_.emplace(sig, static_cast<NodeId>(nodes_.size()));
    if (inserted) {
      nodes_.push_back(sig);
      successors_.emplace_back();
    }
    return it->second;
  }

  std::vector<MethodSig> nodes_;
  std::unordered_map<MethodSig, NodeId> ids_;
  std::map<std::pair<NodeId, NodeId>, std::uint64_t> edges_;
  std::vector<std::vector<NodeId>> successors_;
  std::vector<Callsite> callsites_;
  std::map<std::tuple<NodeId, std::uint64_t, NodeId>, size_t> callsite_index_;
  std::uint64_t total_instances_ = 0;
};

// Expects a trace that passes ValidateTrace (seq strictly increasing).
inline DynamicCallGraph BuildCallGraph(const Trace& trace) {
  DynamicCallGraph g;
  for (const CallRecord& r : trace.records) {
    const NodeId caller = g.Intern(r.caller);
    const NodeId callee = g.Intern(r.callee);
    ++g.edges_[{caller, callee}];
    auto [it, inserted] = g.callsite_index_.emplace(
        std::make_tuple(caller, r.site_index, callee), g.callsites_.size());
    if (inserted) {
      g.callsites_.push_back(
          Callsite{caller, r.site_index, callee, 0, r.seq, r.seq});
    }
    Callsite& cs = g.callsites_[it->second];
    ++cs.instance_count;
    cs.first_seq = std::min(cs.first_seq, r.seq);
    cs.last_seq = std::max(cs.last_seq, r.seq);
    ++g.total_instances_;
  }
  for (const auto& [edge, freq] : g.edges_)
    g.successors_[edge.first].push_back(edge.second);
  return g;
}

enum class ReachabilityMode {
  // Call-graph reachability plus a witness that some sink instance runs after
  // some source instance.
  kTemporal,
  // Call-graph reachability only.
  kGraphOnly,
};

// Indices into DynamicCallGraph::callsites(), each sorted ascending.
struct VulnerabilityMarking {
  std::vector<size_t> vulnerable_sources;
  std::vector<size_t> vulnerable_sinks;
};

namespace internal {

// Iterative Tarjan. Components are numbered in the order Tarjan completes
// them, which is a reverse topological order of the condensation: every edge
// u->v has comp[u] >= comp[v].
inline std::vector<std::uint32_t> StronglyConnectedComponents(
    const DynamicCallGraph& g,
    std::uint32_t* num_components) {
  constexpr std::uint32_t kUnvisited =
      std::numeric_limits<std::uint32_t>::max();
  const size_t n = g.num_nodes();
  std::vector<std::uint32_t> index(n, kUnvisited), low(n, 0), comp(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeId> stack;
  std::vector<std::pair<NodeId, size_t>> frames;
  std::uint32_t next_index = 0, next_comp = 0;

  for (NodeId root = 0; root < n; ++root) {
    if (index[root] != kUnvisited)
      continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, child] = frames.back();
      const auto& succ = g.successors(v);
      if (child < succ.size()) {
        NodeId w = succ[child++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        NodeId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = next_comp;
        } while (w != v);
        ++next_comp;
      }
      NodeId done = v;
      frames.pop_back();
      if (!frames.empty()) {
        NodeId parent = frames.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
    }
  }
  *num_components = next_comp;
  return comp;
}

}  // namespace internal

// A source callsite s is vulnerable iff some sink callsite k has k.caller
// reachable from s.caller (reflexively) and, in temporal mode,
// s.first_seq < k.last_seq. Sinks are marked by the symmetric condition.
//
// Runs in O(V + E + callsites): the latest sink instance reachable from each
// method and the earliest source instance reaching each method are propagated
// over the SCC condensation.
inline VulnerabilityMarking MarkVulnerable(
    const DynamicCallGraph& g,
    const SourceSinkCatalog& catalog,
    ReachabilityMode mode = ReachabilityMode::kTemporal) {
  VulnerabilityMarking marking;
  const auto& callsites = g.callsites();
  std::vector<ApiClass> cls(callsites.size());
  bool any_source = false, any_sink = false;
  for (size_t i = 0; i < callsites.size(); ++i) {
    cls[i] = catalog.Classify(g.sig(callsites[i].callee));
    any_source |= cls[i].is_source();
    any_sink |= cls[i].is_sink();
  }
  if (!any_source || !any_sink)
    return marking;

  std::uint32_t num_comps = 0;
  const auto comp = internal::StronglyConnectedComponents(g, &num_comps);

  // In graph-only mode every sink counts as "last" and every source as
  // "first", which reduces the seq comparison to plain existence.
  constexpr std::uint64_t kNone = 0;
  constexpr std::uint64_t kNoSource = std::numeric_limits<std::uint64_t>::max();
  const bool temporal = mode == ReachabilityMode::kTemporal;

  // latest_sink[c]: max last_seq over sink callsites whose caller is
  // reachable from component c. earliest_source[c]: min first_seq over source
  // callsites whose caller reaches component c.
  std::vector<std::uint64_t> latest_sink(num_comps, kNone);
  std::vector<std::uint64_t> earliest_source(num_comps, kNoSource);
  for (size_t i = 0; i < callsites.size(); ++i) {
    const std::uint32_t c = comp[callsites[i].caller];
    if (cls[i].is_sink()) {
      const std::uint64_t t = temporal ? callsites[i].last_seq : kNoSource;
      latest_sink[c] = std::max(latest_sink[c], t);
    } else if (cls[i].is_source()) {
      const std::uint64_t t = temporal ? callsites[i].first_seq : 1;
      earliest_source[c] = std::min(earliest_source[c], t);
    }
  }

  // Condensation edges, grouped by source component.
  std::vector<std::vector<std::uint32_t>> comp_succ(num_comps);
  for (const auto& [edge, freq] : g.edges()) {
    const std::uint32_t a = comp[edge.first], b = comp[edge.second];
    if (a != b)
      comp_succ[a].push_back(b);
  }
  // Successor components carry lower numbers, so ascending order sees every
  // successor before its predecessors.
  for (std::uint32_t c = 0; c < num_comps; ++c) {
    for (std::uint32_t d : comp_succ[c])
      latest_sink[c] = std::max(latest_sink[c], latest_sink[d]);
  }
  for (std::uint32_t c = num_comps; c-- > 0;) {
    for (std::uint32_t d : comp_succ[c])
      earliest_source[d] = std::min(earliest_source[d], earliest_source[c]);
  }

  for (size_t i = 0; i < callsites.size(); ++i) {
    const std::uint32_t c = comp[callsites[i].caller];
    if (cls[i].is_source()) {
      const std::uint64_t first = temporal ? callsites[i].first_seq : 1;
      if (latest_sink[c] != kNone && first < latest_sink[c])
        marking.vulnerable_sources.push_back(i);
    } else if (cls[i].is_sink()) {
      const std::uint64_t last = temporal ? callsites[i].last_seq : kNoSource;
      if (earliest_source[c] != kNoSource && earliest_source[c] < last)
        marking.vulnerable_sinks.push_back(i);
    }
  }
  return marking;
}

}  // namespace sadprof

#endif  // SADPROF_CALL_GRAPH_HPP_
