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


#ifndef PRICING_THEORY_HPP_
#define PRICING_THEORY_HPP_

#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pricing/market.hpp"

namespace pricing {

using Rational = boost::multiprecision::cpp_rational;

// Grim-trigger benchmark with continuous prices. A firm colluding at p in
// state theta earns g = (p - c)(theta - p) / 2; undercutting takes the whole
// market, 2g, once, followed by zero profit forever. Collusion at prices
// {p_theta} is sustainable iff g_theta <= delta / (1 - delta) * E[g] for
// every theta.

struct Cutoffs {
  Rational delta_min;   // below: only competitive prices are sustainable
  Rational delta_c;     // equal prices across states
  Rational delta_star;  // monopoly prices in every state

  double min() const { return delta_min.convert_to<double>(); }
  double c() const { return delta_c.convert_to<double>(); }
  double star() const { return delta_star.convert_to<double>(); }
};

// Requires exactly two demand states and equal costs; throws ConfigError
// otherwise. Exact in the inputs (doubles are converted without rounding).
Cutoffs cutoffs(const MarketEnv& env);

// Whether cutoffs() supports env.
bool cutoffs_supported(const MarketEnv& env);

struct SustainablePrices {
  std::vector<double> prices;        // per demand state
  std::vector<bool> binding;         // incentive constraint holds with equality
  double expected_profit = 0.0;      // E[g] per firm
};

// Most collusive sustainable prices for any number of states (equal costs):
// the largest fixed point of E = sum_theta P(theta) min(G_theta, k E),
// k = delta / (1 - delta), G_theta the split monopoly profit. Slack states sit
// at the monopoly price, binding states at the root of g_theta = k E below it.
// Competitive prices when delta < 1/2.
SustainablePrices best_sustainable_prices(double delta, const MarketEnv& env);

// Same constraints with every price restricted to the grid; exhaustive over
// all price tuples. Ties go to the lexicographically lowest tuple.
SustainablePrices best_sustainable_grid_prices(double delta,
                                               const MarketEnv& env);

enum class TheoryPattern { kProcyclical, kCountercyclical, kFlat, kCompetitive };

std::string_view to_string(TheoryPattern p);

// Competitive below delta_min, Countercyclical on [delta_min, delta_c), Flat at
// delta_c (within 1e-12), Procyclical above.
TheoryPattern predicted_pattern(double delta, const MarketEnv& env);

struct TheoryPrediction {
  double delta = 0.0;
  double p_low = 0.0;
  double p_high = 0.0;
  TheoryPattern pattern = TheoryPattern::kCompetitive;
  std::string binding_state;
};

TheoryPrediction predict(double delta, const MarketEnv& env);

// Collusive per-firm profit (p - c)(theta - p) / 2.
double collusive_profit(double price, double theta, double cost);

}  // namespace pricing

#endif  // PRICING_THEORY_HPP_
