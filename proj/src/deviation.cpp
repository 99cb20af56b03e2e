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


#include "pricing/deviation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pricing {

namespace {

// Lowest grid price with a strictly positive margin.
PriceIndex lowest_positive_margin(const MarketEnv& env, int agent) {
  for (int p = 0; p < env.num_prices(); ++p) {
    if (env.price(static_cast<PriceIndex>(p)) > env.cost(agent)) {
      return static_cast<PriceIndex>(p);
    }
  }
  return static_cast<PriceIndex>(env.num_prices() - 1);
}

}  // namespace

DeviationDecision most_profitable_deviation(const MarketEnv& env, int deviator,
                                            DemandIndex theta, PriceIndex own,
                                            PriceIndex rival) {
  const PriceIndex monopoly = env.grid_monopoly_index(deviator, theta);
  const PriceIndex floor = lowest_positive_margin(env, deviator);
  DeviationDecision d;
  if (own == rival) {
    d.relation = DeviationCase::kEqual;
    if (monopoly < rival) {
      d.price = monopoly;
    } else if (own > floor) {
      d.price = static_cast<PriceIndex>(own - 1);
    }
  } else if (own > rival) {
    d.relation = DeviationCase::kAboveRival;
    if (monopoly < rival) {
      d.price = monopoly;
    } else if (rival > floor) {
      d.price = static_cast<PriceIndex>(rival - 1);
    } else if (rival == floor) {
      d.price = floor;
    } else {
      d.price = rival;
      d.forced_exit = true;
    }
  } else {
    d.relation = DeviationCase::kBelowRival;
    if (monopoly < rival) {
      d.price = monopoly;
    } else if (rival - own > 1) {
      d.price = static_cast<PriceIndex>(rival - 1);
    } else if (rival == floor) {
      d.price = floor;
    }
  }
  return d;
}

DeviationOutcome simulate_deviation(const PriceNode& node, int deviator,
                                    const LimitStrategies& strategies,
                                    const PriceCycle& cycle,
                                    const MarketEnv& env, double delta,
                                    std::uint64_t cap, Rng& rng) {
  const NodeCodec codec{env.num_states(), env.num_prices()};
  DeviationOutcome out;
  out.node = codec.encode(node);
  out.deviator = deviator;
  if (cycle.position(out.node) == cycle.size()) {
    throw std::out_of_range("deviation node not in cycle");
  }
  const PriceIndex own = deviator == 0 ? node.p1 : node.p2;
  const PriceIndex rival = deviator == 0 ? node.p2 : node.p1;
  const DeviationDecision decision =
      most_profitable_deviation(env, deviator, node.theta, own, rival);
  if (!decision.price) {
    out.empty_decision = true;
    return out;
  }

  PriceNode on_path = node;
  PriceNode off_path = node;
  (deviator == 0 ? off_path.p1 : off_path.p2) = *decision.price;
  out.pi_star = env.profit_at(deviator, on_path.theta, on_path.p1, on_path.p2);
  out.pi_dev = env.profit_at(deviator, off_path.theta, off_path.p1, off_path.p2);

  const auto& probs = env.probabilities();
  double discount = 1.0;
  std::uint64_t t = 0;
  while (!(off_path == on_path)) {
    if (t + 1 >= cap) {
      out.censored = true;
      break;
    }
    ++t;
    const auto theta = static_cast<DemandIndex>(rng.categorical(probs));
    on_path = strategies.step(on_path, theta);
    off_path = strategies.step(off_path, theta);
    discount *= delta;
    out.pi_star += discount *
        env.profit_at(deviator, on_path.theta, on_path.p1, on_path.p2);
    out.pi_dev += discount *
        env.profit_at(deviator, off_path.theta, off_path.p1, off_path.p2);
  }
  out.path_length = t + 1;
  out.profitable = out.pi_dev > out.pi_star;
  return out;
}

DeviationReport deviation_report(const PriceCycle& cycle,
                                 const LimitStrategies& strategies,
                                 const MarketEnv& env, double delta,
                                 int repetitions, std::uint64_t cap,
                                 std::uint64_t seed) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  DeviationReport report;
  report.repetitions = repetitions;
  const int nd = env.num_states();
  std::vector<double> state_sum(nd, 0.0), state_weight(nd, 0.0);
  double total_sum = 0.0, total_weight = 0.0;

  for (std::size_t j = 0; j < cycle.size(); ++j) {
    const PriceNode& v = cycle.nodes[j];
    double freq_sum = 0.0;
    int freq_count = 0;
    for (int i = 0; i < kNumAgents; ++i) {
      NodeDeviation entry;
      entry.node = cycle.ids[j];
      entry.theta = v.theta;
      entry.deviator = i;
      entry.repetitions = repetitions;
      Rng rng(derive_seed(seed, 2 * j + static_cast<std::uint64_t>(i)));
      for (int r = 0; r < repetitions; ++r) {
        const DeviationOutcome o =
            simulate_deviation(v, i, strategies, cycle, env, delta, cap, rng);
        if (o.empty_decision) {
          entry.empty_decision = true;
          entry.unprofitable = repetitions;
          break;
        }
        if (o.censored) {
          ++entry.censored;
        } else if (!o.profitable) {
          ++entry.unprofitable;
        }
      }
      const int valid = repetitions - entry.censored;
      entry.unprofitable_freq =
          valid > 0 ? static_cast<double>(entry.unprofitable) / valid
                    : std::numeric_limits<double>::quiet_NaN();
      if (entry.empty_decision) {
        report.empty_share += cycle.stationary[j] / kNumAgents;
      }
      if (!std::isnan(entry.unprofitable_freq)) {
        freq_sum += entry.unprofitable_freq;
        ++freq_count;
      }
      report.entries.push_back(entry);
    }
    if (freq_count == 0) continue;
    const double mean = freq_sum / freq_count;
    const double w = cycle.stationary[j];
    total_sum += w * mean;
    total_weight += w;
    state_sum[v.theta] += w * mean;
    state_weight[v.theta] += w;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.overall = total_weight > 0.0 ? total_sum / total_weight : nan;
  report.by_state.resize(nd);
  for (int k = 0; k < nd; ++k) {
    report.by_state[k] = state_weight[k] > 0.0 ? state_sum[k] / state_weight[k] : nan;
  }
  return report;
}

}  // namespace pricing
