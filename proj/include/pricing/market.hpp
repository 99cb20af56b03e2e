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

#ifndef PRICING_MARKET_HPP_
#define PRICING_MARKET_HPP_

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pricing {

// Index into the price grid. Prices are only turned into reals when payoffs
// are evaluated; ties are always decided on indices.
using PriceIndex = std::uint16_t;
// Index into the list of demand states.
using DemandIndex = std::uint8_t;

inline constexpr int kNumAgents = 2;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DemandState {
  DemandIndex index = 0;
  double theta = 0.0;
};

class PriceGrid {
 public:
  PriceGrid(double lower, double upper, int m);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  int size() const { return static_cast<int>(prices_.size()); }
  double step() const { return (upper_ - lower_) / (size() - 1); }
  double price(PriceIndex k) const { return prices_[k]; }
  const std::vector<double>& prices() const { return prices_; }

 private:
  double lower_;
  double upper_;
  std::vector<double> prices_;
};

// m evenly spaced points on [lower, upper]; throws on m < 2 or upper <= lower.
std::vector<double> grid_prices(double lower, double upper, int m);

// The one-period game: demand states, their probabilities, marginal costs and
// the discretized action set.
class MarketEnv {
 public:
  MarketEnv(std::vector<double> thetas, std::vector<double> probabilities,
            std::array<double, kNumAgents> costs, PriceGrid grid);

  // Two states {6, 10} with equal probability, zero costs, grid {0, .., 5}.
  static MarketEnv baseline();

  int num_states() const { return static_cast<int>(states_.size()); }
  int num_prices() const { return grid_.size(); }
  const std::vector<DemandState>& states() const { return states_; }
  double theta(DemandIndex k) const { return states_[k].theta; }
  const std::vector<double>& probabilities() const { return probabilities_; }
  double probability(DemandIndex k) const { return probabilities_[k]; }
  double cost(int agent) const { return costs_[agent]; }
  const std::array<double, kNumAgents>& costs() const { return costs_; }
  const PriceGrid& grid() const { return grid_; }
  double price(PriceIndex k) const { return grid_.price(k); }

  // Single-state environment holding only state k, with probability one.
  MarketEnv fixed_at(DemandIndex k) const;

  // Period profit of `agent` at price indices (p1, p2) in state k.
  double profit_at(int agent, DemandIndex k, PriceIndex p1,
                   PriceIndex p2) const;

  // Grid index maximizing (p - c)(theta - p) for `agent`; ties to the lowest.
  PriceIndex grid_monopoly_index(int agent, DemandIndex k) const;

  // Short label for state k: "L"/"H" for two states, "S<k>" otherwise.
  std::string state_label(DemandIndex k) const;

 private:
  std::vector<DemandState> states_;
  std::vector<double> probabilities_;
  std::array<double, kNumAgents> costs_;
  PriceGrid grid_;
};

// Quantity sold by a firm posting own_price against other_price. Clamped at 0
// when own_price >= theta.
double demand(double own_price, double other_price, double theta);

// Tie detection on indices, used by the simulator.
double demand_idx(PriceIndex own, PriceIndex other, double own_price,
                  double theta);

double profit(double own_price, double other_price, double theta,
              double cost);

// (theta + cost) / 2; throws when theta <= cost.
double monopoly_price(double theta, double cost);

// Monopoly profit (p^M - c)(theta - p^M).
double monopoly_profit(double theta, double cost);

double competitive_price(double cost);

}  // namespace pricing

#endif  // PRICING_MARKET_HPP_
