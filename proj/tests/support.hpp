// Copyright 2026 The Pricing Simulator Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef PRICING_TESTS_SUPPORT_HPP_
#define PRICING_TESTS_SUPPORT_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "pricing/cycle.hpp"
#include "pricing/engine.hpp"
#include "pricing/rng.hpp"

namespace pricing::testing {

// Full-memory policies from a rule (theta, p1, p2, theta') -> (q1, q2).
template <typename Rule>
PolicyPair policies_from(const MarketEnv& env, Rule rule) {
  const StateEncoder enc(Representation::kFullMemory, env.num_states(),
                         env.num_prices());
  PolicyPair out;
  for (auto& p : out) p.assign(enc.num_states(), 0);
  for (StateIndex s = 0; s < enc.num_states(); ++s) {
    const StateTuple t = enc.decode(s);
    const PriceNode next = rule(t.theta_prev, t.p1_prev, t.p2_prev, t.theta_now);
    out[0][s] = next.p1;
    out[1][s] = next.p2;
  }
  return out;
}

inline std::array<Representation, kNumAgents> full_memory() {
  return {Representation::kFullMemory, Representation::kFullMemory};
}

// Uniformly random full-memory policies; with `palette` > 0 each agent only
// uses that many distinct prices, which keeps cycles small.
inline PolicyPair random_policies(const MarketEnv& env, Rng& rng, int palette) {
  const StateEncoder enc(Representation::kFullMemory, env.num_states(),
                         env.num_prices());
  std::array<std::vector<PriceIndex>, kNumAgents> allowed;
  for (auto& a : allowed) {
    const int n = palette > 0 ? palette : env.num_prices();
    for (int i = 0; i < n; ++i) a.push_back(static_cast<PriceIndex>(rng.below(env.num_prices())));
  }
  PolicyPair out;
  for (int i = 0; i < kNumAgents; ++i) {
    out[i].resize(enc.num_states());
    for (auto& p : out[i]) p = allowed[i][rng.below(static_cast<std::uint32_t>(allowed[i].size()))];
  }
  return out;
}

// Visit frequencies of a simulated walk on the cycle, started at its first node.
inline std::vector<double> walk_frequencies(const DynamicsGraph& graph,
                                            const PriceCycle& cycle,
                                            std::uint64_t steps, Rng& rng) {
  std::vector<double> counts(cycle.size(), 0.0);
  NodeId v = cycle.ids.front();
  for (std::uint64_t t = 0; t < steps; ++t) {
    const auto k = static_cast<DemandIndex>(rng.categorical(graph.probabilities()));
    v = graph.successor(v, k);
    counts[cycle.position(v)] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(steps);
  return counts;
}

// Forward-reachable set by breadth-first search.
inline std::vector<bool> reachable_from(const DynamicsGraph& g, NodeId start) {
  std::vector<bool> seen(g.num_nodes(), false);
  std::vector<NodeId> queue = {start};
  seen[start] = true;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    for (int k = 0; k < g.out_degree(); ++k) {
      const NodeId w = g.successor(queue[i], static_cast<DemandIndex>(k));
      if (!seen[w]) {
        seen[w] = true;
        queue.push_back(w);
      }
    }
  }
  return seen;
}

}  // namespace pricing::testing

#endif  // PRICING_TESTS_SUPPORT_HPP_
