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


#ifndef PRICING_AGENT_HPP_
#define PRICING_AGENT_HPP_

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pricing/market.hpp"
#include "pricing/rng.hpp"

namespace pricing {

using StateIndex = std::uint32_t;

// Which parts of the one-period history an agent conditions on.
enum class Representation {
  kFullMemory,      // (theta_{t-1}, p1_{t-1}, p2_{t-1}, theta_t)
  kNoDemandMemory,  // (p1_{t-1}, p2_{t-1}, theta_t)
  kNoPriceMemory,   // (theta_{t-1}, theta_t)
  kNoMemory,        // (theta_t)
  kPricesOnly,      // (p1_{t-1}, p2_{t-1})
};

std::string_view to_string(Representation r);
Representation parse_representation(std::string_view name);

enum class InitMode { kRandomOpponent, kZero };

std::string_view to_string(InitMode m);
InitMode parse_init_mode(std::string_view name);

// Decoded one-period history. Components unused by a representation decode
// to zero.
struct StateTuple {
  DemandIndex theta_prev = 0;
  PriceIndex p1_prev = 0;
  PriceIndex p2_prev = 0;
  DemandIndex theta_now = 0;

  friend bool operator==(const StateTuple&, const StateTuple&) = default;
};

// Mixed-radix encoding of StateTuple, most significant first in the order
// (theta_prev, p1, p2, theta_now), dropping components the representation
// does not use.
class StateEncoder {
 public:
  StateEncoder(Representation representation, int num_demand_states,
               int num_prices);

  Representation representation() const { return representation_; }
  StateIndex num_states() const { return num_states_; }
  bool uses_theta_prev() const { return radix_[0] > 1; }
  bool uses_prices() const { return radix_[1] > 1; }
  bool uses_theta_now() const { return radix_[3] > 1; }

  // Throws std::out_of_range if a used component exceeds its cardinality.
  StateIndex encode(DemandIndex theta_prev, PriceIndex p1_prev,
                    PriceIndex p2_prev, DemandIndex theta_now) const;

  // Unchecked hot-path variant.
  StateIndex encode_unchecked(DemandIndex theta_prev, PriceIndex p1_prev,
                              PriceIndex p2_prev,
                              DemandIndex theta_now) const {
    StateIndex s = theta_prev * used_[0];
    s = s * radix_[1] + p1_prev * used_[1];
    s = s * radix_[2] + p2_prev * used_[2];
    s = s * radix_[3] + theta_now * used_[3];
    return s;
  }

  StateTuple decode(StateIndex s) const;

 private:
  Representation representation_;
  // Cardinality per component, 1 when unused.
  StateIndex radix_[4];
  // 1 when the component is used, else 0.
  StateIndex used_[4];
  StateIndex num_states_;
};

struct ExplorationSchedule {
  double beta = 4e-6;

  double epsilon(std::uint64_t t) const {
    return std::exp(-beta * static_cast<double>(t));
  }
};

struct AgentConfig {
  double alpha = 0.15;
  double delta = 0.95;
  Representation representation = Representation::kFullMemory;
  InitMode init_mode = InitMode::kRandomOpponent;
};

void validate(const AgentConfig& config);

// Dense |S| x |A| table of action values.
class QMatrix {
 public:
  QMatrix(StateEncoder encoder, int num_prices);

  const StateEncoder& encoder() const { return encoder_; }
  StateIndex num_states() const { return encoder_.num_states(); }
  int num_prices() const { return num_prices_; }

  std::span<double> row(StateIndex s) {
    return {values_.data() + static_cast<std::size_t>(s) * num_prices_,
            static_cast<std::size_t>(num_prices_)};
  }
  std::span<const double> row(StateIndex s) const {
    return {values_.data() + static_cast<std::size_t>(s) * num_prices_,
            static_cast<std::size_t>(num_prices_)};
  }
  double& at(StateIndex s, PriceIndex p) {
    return values_[static_cast<std::size_t>(s) * num_prices_ + p];
  }
  double at(StateIndex s, PriceIndex p) const {
    return values_[static_cast<std::size_t>(s) * num_prices_ + p];
  }
  const std::vector<double>& values() const { return values_; }

  double row_max(StateIndex s) const;

  // One "state,price,value" record per cell, state-major.
  void write_csv(std::ostream& out) const;

  friend bool operator==(const QMatrix& a, const QMatrix& b) {
    return a.values_ == b.values_;
  }

 private:
  StateEncoder encoder_;
  int num_prices_;
  std::vector<double> values_;
};

// Expected period profit of `agent` at price p in state theta against a rival
// drawing uniformly from the grid.
double avg_profit_vs_random(const MarketEnv& env, int agent, PriceIndex p,
                            DemandIndex theta);

// Q0(theta, p) = avg(p, theta) + delta/(1-delta) * mean_theta' avg(p, theta'),
// the solution of Q0(theta, p) = avg(p, theta) + delta * mean_theta' Q0(theta', p),
// copied to every state whose current demand is theta. Representations that do
// not observe current demand get the mean over theta of that solution.
QMatrix init_q_random_opponent(const MarketEnv& env, int agent,
                               const AgentConfig& config);

QMatrix init_q_zero(const StateEncoder& encoder, int num_prices);

QMatrix make_initial_q(const MarketEnv& env, int agent,
                       const AgentConfig& config);

// Argmax with ties to the lowest index.
PriceIndex greedy_action(std::span<const double> row);
inline PriceIndex greedy_action(const QMatrix& q, StateIndex s) {
  return greedy_action(q.row(s));
}

// One coin against eps_t, then a uniform price draw only when exploring.
PriceIndex select_price(const QMatrix& q, StateIndex s, std::uint64_t t,
                        const ExplorationSchedule& schedule, Rng& rng);

// Q(s,a) <- (1-alpha) Q(s,a) + alpha (profit + delta max_a' Q(s_next, a')).
void update_q(QMatrix& q, StateIndex s, PriceIndex a, double realized_profit,
              StateIndex s_next, const AgentConfig& config);

}  // namespace pricing

#endif  // PRICING_AGENT_HPP_
