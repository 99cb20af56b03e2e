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


#ifndef PRICING_CYCLE_HPP_
#define PRICING_CYCLE_HPP_

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pricing/agent.hpp"
#include "pricing/engine.hpp"
#include "pricing/market.hpp"

namespace pricing {

// Node id = (theta * m + p1) * m + p2.
using NodeId = std::uint32_t;

struct NodeCodec {
  int num_states;
  int num_prices;

  NodeId num_nodes() const {
    return static_cast<NodeId>(num_states) * num_prices * num_prices;
  }
  NodeId encode(const PriceNode& v) const {
    return (static_cast<NodeId>(v.theta) * num_prices + v.p1) * num_prices +
           v.p2;
  }
  PriceNode decode(NodeId id) const {
    PriceNode v;
    v.p2 = static_cast<PriceIndex>(id % num_prices);
    id /= num_prices;
    v.p1 = static_cast<PriceIndex>(id % num_prices);
    v.theta = static_cast<DemandIndex>(id / num_prices);
    return v;
  }
};

// Price dynamics under fixed limit strategies: node v = (theta, p1, p2) has one
// successor per next demand state theta', carrying probability P(theta').
class DynamicsGraph {
 public:
  DynamicsGraph(NodeCodec codec, std::vector<double> probabilities);

  const NodeCodec& codec() const { return codec_; }
  NodeId num_nodes() const { return codec_.num_nodes(); }
  int out_degree() const { return codec_.num_states; }
  const std::vector<double>& probabilities() const { return probabilities_; }

  NodeId successor(NodeId v, DemandIndex next_theta) const {
    return successors_[static_cast<std::size_t>(v) * codec_.num_states +
                       next_theta];
  }
  void set_successor(NodeId v, DemandIndex next_theta, NodeId w) {
    successors_[static_cast<std::size_t>(v) * codec_.num_states + next_theta] =
        w;
  }

 private:
  NodeCodec codec_;
  std::vector<double> probabilities_;
  std::vector<NodeId> successors_;
};

// Greedy price in every state; the limit strategy of a converged table.
Policy limit_strategy(const QMatrix& q);

// Encoders matching the two policies over the given environment.
std::array<StateEncoder, kNumAgents> make_encoders(
    const std::array<Representation, kNumAgents>& representations,
    const MarketEnv& env);

DynamicsGraph build_graph(const PolicyPair& policies,
                          const std::array<StateEncoder, kNumAgents>& encoders,
                          const MarketEnv& env);

// Strongly connected components, Tarjan's algorithm with Nuutila's root
// bookkeeping, iterative. component[v] is the component id; ids are assigned
// in completion order, so sink components come first.
struct SccResult {
  std::vector<std::uint32_t> component;
  std::uint32_t count = 0;
};
SccResult strongly_connected_components(const DynamicsGraph& graph);

struct PriceCycle {
  std::vector<NodeId> ids;     // ascending
  std::vector<PriceNode> nodes;
  // Row-major n x n transition matrix restricted to the cycle.
  std::vector<double> transition;
  std::vector<double> stationary;

  std::size_t size() const { return ids.size(); }
  double p(std::size_t i, std::size_t j) const {
    return transition[i * ids.size() + j];
  }
  // Position of `id` in ids, or size() if absent.
  std::size_t position(NodeId id) const;
};

// Row-stochastic n x n matrix, row-major. Solves psi (I - P + 1) = 1 with a
// dense LU factorization; throws std::runtime_error when singular.
std::vector<double> stationary_distribution(const std::vector<double>& p,
                                            std::size_t n);

// The closed strongly connected component reached from `start`. When several
// closed components are reachable, the one holding the smallest node id wins.
PriceCycle find_price_cycle(const DynamicsGraph& graph, const PriceNode& start);

struct StatePrices {
  // [state][agent]
  std::vector<std::array<double, kNumAgents>> price;
  std::vector<double> mass;
};

// Stationary-weighted prices within each demand state, renormalized by the
// state's mass.
StatePrices conditional_avg_prices(const PriceCycle& cycle,
                                   const MarketEnv& env);

struct CycleMetrics {
  // [state][agent]
  std::vector<std::array<double, kNumAgents>> avg_price;
  std::vector<std::array<double, kNumAgents>> profit;
  std::vector<std::array<double, kNumAgents>> price_ratio;
  std::vector<std::array<double, kNumAgents>> profit_ratio;
  // Stationary-weighted min(p1, p2) per state.
  std::vector<double> effective_price;
  std::vector<double> state_mass;
  std::array<double, kNumAgents> expected_profit{};
  std::array<double, kNumAgents> expected_profit_ratio{};
  // P_jj per cycle node.
  std::vector<double> self_loop_share;
};

CycleMetrics compute_metrics(const PriceCycle& cycle, const MarketEnv& env);

enum class PatternLabel {
  kSymRigid,
  kProCycle,
  kCounterCycle,
  kSym1Node,
  kSemiRigid,
  kOthers,
};

std::string_view to_string(PatternLabel label);
PatternLabel parse_pattern(std::string_view name);

enum class AnalysisMode { kStochastic, kFixedDemand, kAsymmetric };

struct ClassifyOptions {
  AnalysisMode mode = AnalysisMode::kStochastic;
  // Agent that does not observe current demand (asymmetric mode).
  int uninformed_agent = 1;
};

// Price comparisons across states treat differences within 1e-9 as ties;
// exact ties fall through to Others.
PatternLabel classify_pattern(const CycleMetrics& metrics,
                              const PriceCycle& cycle,
                              const ClassifyOptions& options);

// (psi_j P_jj, psi_j (1 - P_jj)); throws std::out_of_range when the node is
// not in the cycle.
std::pair<double, double> self_loop_decomposition(const PriceCycle& cycle,
                                                  NodeId node);

// [state] -> row-major m x m matrix indexed (p1, p2). Each session's mass is
// renormalized within the state before the unweighted cross-session mean.
using Heatmap = std::vector<std::vector<double>>;
Heatmap heatmap_aggregate(const std::vector<const PriceCycle*>& cycles,
                          const MarketEnv& env);

// Graphviz digraph of the cycle; node labels "L-(2.5,2.5)", edge labels carry
// transition probabilities.
void write_dot(std::ostream& out, const PriceCycle& cycle,
               const MarketEnv& env, std::string_view name = "cycle");

// Everything analysis needs from one session.
struct CycleAnalysis {
  PriceCycle cycle;
  CycleMetrics metrics;
  PatternLabel pattern = PatternLabel::kOthers;
};

ClassifyOptions classify_options_for(
    const std::array<Representation, kNumAgents>& representations,
    const DemandMode& demand_mode);

CycleAnalysis analyze_session(
    const PolicyPair& policies,
    const std::array<Representation, kNumAgents>& representations,
    const MarketEnv& effective, const PriceNode& start,
    const ClassifyOptions& options);

}  // namespace pricing

#endif  // PRICING_CYCLE_HPP_
