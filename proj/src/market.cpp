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

#include "pricing/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace pricing {

std::vector<double> grid_prices(double lower, double upper, int m) {
  if (m < 2) throw ConfigError("grid.m must be at least 2");
  if (!(upper > lower)) throw ConfigError("grid.upper must exceed grid.lower");
  if (m > std::numeric_limits<PriceIndex>::max()) {
    throw ConfigError("grid.m too large");
  }
  std::vector<double> prices(m);
  const double step = (upper - lower) / (m - 1);
  for (int k = 0; k < m; ++k) prices[k] = lower + k * step;
  prices.back() = upper;
  return prices;
}

PriceGrid::PriceGrid(double lower, double upper, int m)
    : lower_(lower), upper_(upper), prices_(grid_prices(lower, upper, m)) {}

MarketEnv::MarketEnv(std::vector<double> thetas,
                     std::vector<double> probabilities,
                     std::array<double, kNumAgents> costs, PriceGrid grid)
    : probabilities_(std::move(probabilities)),
      costs_(costs),
      grid_(std::move(grid)) {
  if (thetas.empty()) throw ConfigError("env.theta must not be empty");
  if (thetas.size() > std::numeric_limits<DemandIndex>::max()) {
    throw ConfigError("env.theta has too many states");
  }
  if (thetas.size() != probabilities_.size()) {
    throw ConfigError("env.probabilities must match env.theta in length");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    if (!(thetas[k] > 0.0)) throw ConfigError("env.theta entries must be > 0");
    if (k > 0 && thetas[k] < thetas[k - 1]) {
      throw ConfigError("env.theta must be in ascending order");
    }
    if (!(probabilities_[k] > 0.0)) {
      throw ConfigError("env.probabilities entries must be > 0");
    }
    total += probabilities_[k];
    states_.push_back({static_cast<DemandIndex>(k), thetas[k]});
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ConfigError("env.probabilities must sum to 1");
  }
  for (double c : costs_) {
    if (!(c >= 0.0)) throw ConfigError("env.costs entries must be >= 0");
  }
}

MarketEnv MarketEnv::baseline() {
  return MarketEnv({6.0, 10.0}, {0.5, 0.5}, {0.0, 0.0}, PriceGrid(0.0, 5.0, 11));
}

MarketEnv MarketEnv::fixed_at(DemandIndex k) const {
  if (k >= num_states()) throw ConfigError("fixed demand state out of range");
  return MarketEnv({theta(k)}, {1.0}, costs_, grid_);
}

double MarketEnv::profit_at(int agent, DemandIndex k, PriceIndex p1,
                            PriceIndex p2) const {
  const PriceIndex own = agent == 0 ? p1 : p2;
  const PriceIndex other = agent == 0 ? p2 : p1;
  const double own_price = grid_.price(own);
  return (own_price - costs_[agent]) *
         demand_idx(own, other, own_price, states_[k].theta);
}

PriceIndex MarketEnv::grid_monopoly_index(int agent, DemandIndex k) const {
  PriceIndex best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < num_prices(); ++p) {
    const double price = grid_.price(static_cast<PriceIndex>(p));
    const double value =
        (price - costs_[agent]) * std::max(0.0, states_[k].theta - price);
    if (value > best_value) {
      best_value = value;
      best = static_cast<PriceIndex>(p);
    }
  }
  return best;
}

std::string MarketEnv::state_label(DemandIndex k) const {
  if (num_states() == 2) return k == 0 ? "L" : "H";
  return "S" + std::to_string(k);
}

double demand(double own_price, double other_price, double theta) {
  const double q = std::max(0.0, theta - own_price);
  if (own_price < other_price) return q;
  if (own_price == other_price) return q / 2.0;
  return 0.0;
}

double demand_idx(PriceIndex own, PriceIndex other, double own_price,
                  double theta) {
  const double q = std::max(0.0, theta - own_price);
  if (own < other) return q;
  if (own == other) return q / 2.0;
  return 0.0;
}

double profit(double own_price, double other_price, double theta,
              double cost) {
  return (own_price - cost) * demand(own_price, other_price, theta);
}

double monopoly_price(double theta, double cost) {
  if (!(theta > cost)) {
    throw std::domain_error("monopoly_price: theta must exceed cost");
  }
  return (theta + cost) / 2.0;
}

double monopoly_profit(double theta, double cost) {
  const double p = monopoly_price(theta, cost);
  return (p - cost) * (theta - p);
}

double competitive_price(double cost) { return cost; }

}  // namespace pricing
