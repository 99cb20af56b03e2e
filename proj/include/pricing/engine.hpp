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


#ifndef PRICING_ENGINE_HPP_
#define PRICING_ENGINE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pricing/agent.hpp"
#include "pricing/market.hpp"

namespace pricing {

// Greedy price per state, one entry per encoded state.
using Policy = std::vector<PriceIndex>;
using PolicyPair = std::array<Policy, kNumAgents>;

struct PriceNode {
  DemandIndex theta = 0;
  PriceIndex p1 = 0;
  PriceIndex p2 = 0;

  friend bool operator==(const PriceNode&, const PriceNode&) = default;
};

// Stochastic demand, or demand held at one state (the fixed-demand benchmark).
struct DemandMode {
  std::optional<DemandIndex> fixed_state;

  static DemandMode stochastic() { return {}; }
  static DemandMode fixed_at(DemandIndex k) { return {k}; }
  bool is_fixed() const { return fixed_state.has_value(); }
  std::string label() const;

  friend bool operator==(const DemandMode&, const DemandMode&) = default;
};

DemandMode parse_demand_mode(const std::string& text);

struct SessionConfig {
  MarketEnv env = MarketEnv::baseline();
  std::array<AgentConfig, kNumAgents> agents{};
  ExplorationSchedule schedule{};
  std::uint64_t seed = 0;
  std::uint64_t convergence_window = 100'000;
  std::uint64_t max_iterations = 1'000'000'000;
  DemandMode demand_mode{};
  bool keep_q = false;
};

void validate(const SessionConfig& config);

// The environment the session actually plays: env itself, or the single
// fixed state.
MarketEnv effective_env(const SessionConfig& config);

struct SessionResult {
  bool converged = false;
  std::uint64_t iterations = 0;
  PolicyPair policies;
  // Node realized in the last simulated period, in effective_env indices.
  PriceNode final_node;
  std::optional<std::array<QMatrix, kNumAgents>> final_q;
};

// One learning session. Per period: form both states, agent 1 then agent 2
// draw an exploration coin (and a price when exploring), profits are realized,
// the next demand state is drawn, then both agents update the visited cell.
// Before the first period the lagged components and the first demand state
// are drawn uniformly (demand from its distribution).
SessionResult run_session(const SessionConfig& config);

struct ConvergenceStep {
  std::uint64_t counter = 0;
  bool done = false;
};

ConvergenceStep check_convergence(const PolicyPair& now, const PolicyPair& prev,
                                  std::uint64_t counter, std::uint64_t window);

struct BatchItem {
  std::optional<SessionResult> result;
  std::string error;
};

// Results in input order; identical for every parallelism level. A failing
// session records its error without affecting the others.
std::vector<BatchItem> run_batch(const std::vector<SessionConfig>& configs,
                                 int parallelism);

// One batch per demand state with demand held fixed and PricesOnly agents.
std::vector<std::vector<BatchItem>> run_fixed_demand_benchmark(
    const SessionConfig& base, const std::vector<std::uint64_t>& seeds,
    int parallelism);

}  // namespace pricing

#endif  // PRICING_ENGINE_HPP_
