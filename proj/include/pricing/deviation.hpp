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


#ifndef PRICING_DEVIATION_HPP_
#define PRICING_DEVIATION_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "pricing/cycle.hpp"
#include "pricing/engine.hpp"
#include "pricing/market.hpp"
#include "pricing/rng.hpp"

namespace pricing {

enum class DeviationCase { kEqual, kAboveRival, kBelowRival };

struct DeviationDecision {
  // Absent when no profitable undercut exists.
  std::optional<PriceIndex> price;
  DeviationCase relation = DeviationCase::kEqual;
  // Rival at a zero-margin price while the deviator sits above it: the
  // deviator is pushed down to the rival's price to force an exit.
  bool forced_exit = false;
};

// Most profitable undercut for a deviator posting own against rival in state
// theta. Preference order in every case: the grid monopoly price if it lies
// strictly below the rival, otherwise a one-step undercut, with the lowest
// positive-margin price and the zero-rival exit as boundary conventions.
DeviationDecision most_profitable_deviation(const MarketEnv& env, int deviator,
                                            DemandIndex theta, PriceIndex own,
                                            PriceIndex rival);

struct DeviationOutcome {
  NodeId node = 0;
  int deviator = 0;
  double pi_star = 0.0;
  double pi_dev = 0.0;
  bool profitable = false;
  std::uint64_t path_length = 1;
  bool censored = false;
  bool empty_decision = false;
};

// Limit strategies plus the encoders needed to evaluate them.
struct LimitStrategies {
  PolicyPair policies;
  std::array<StateEncoder, kNumAgents> encoders;

  PriceNode step(const PriceNode& v, DemandIndex next_theta) const {
    return {next_theta,
            policies[0][encoders[0].encode_unchecked(v.theta, v.p1, v.p2,
                                                     next_theta)],
            policies[1][encoders[1].encode_unchecked(v.theta, v.p1, v.p2,
                                                     next_theta)]};
  }
};

// One forced unilateral deviation at `node`, compared against the path that
// would have followed without it. Both paths share one demand stream; profits
// are discounted by delta^t from t = 0 and accumulation stops at the first
// period in which both paths sit at the same node, or after `cap` periods
// (censored). Throws std::out_of_range when node is not in the cycle.
DeviationOutcome simulate_deviation(const PriceNode& node, int deviator,
                                    const LimitStrategies& strategies,
                                    const PriceCycle& cycle,
                                    const MarketEnv& env, double delta,
                                    std::uint64_t cap, Rng& rng);

struct NodeDeviation {
  NodeId node = 0;
  DemandIndex theta = 0;
  int deviator = 0;
  int repetitions = 0;
  int unprofitable = 0;
  int censored = 0;
  bool empty_decision = false;
  // unprofitable / (repetitions - censored); NaN when every run was censored.
  double unprofitable_freq = 0.0;
};

struct DeviationReport {
  std::vector<NodeDeviation> entries;
  double overall = 0.0;
  std::vector<double> by_state;
  // Stationary mass of (node, deviator) pairs without a feasible deviation.
  double empty_share = 0.0;
  int repetitions = 0;
};

// Every (node, deviator) pair of the cycle, `repetitions` runs each. Pair
// (j, i) draws from Rng(derive_seed(seed, 2 j + i)). Empty decisions count as
// unprofitable without simulation.
DeviationReport deviation_report(const PriceCycle& cycle,
                                 const LimitStrategies& strategies,
                                 const MarketEnv& env, double delta,
                                 int repetitions, std::uint64_t cap,
                                 std::uint64_t seed);

}  // namespace pricing

#endif  // PRICING_DEVIATION_HPP_
