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


#include "pricing/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pricing {

namespace {

double common_cost(const MarketEnv& env) {
  if (env.cost(0) != env.cost(1)) {
    throw ConfigError("collusion benchmark needs equal costs");
  }
  return env.cost(0);
}

Rational exact(double x) { return Rational(x); }

// Split monopoly profit (theta - c)^2 / 8.
Rational split_monopoly(const Rational& theta, const Rational& c) {
  const Rational margin = theta - c;
  return margin * margin / 8;
}

Rational delta_from_ratio(const Rational& k) { return k / (1 + k); }

}  // namespace

double collusive_profit(double price, double theta, double cost) {
  return (price - cost) * std::max(0.0, theta - price) / 2.0;
}

bool cutoffs_supported(const MarketEnv& env) {
  return env.num_states() == 2 && env.cost(0) == env.cost(1) &&
         env.theta(0) > env.cost(0);
}

Cutoffs cutoffs(const MarketEnv& env) {
  if (!cutoffs_supported(env)) {
    throw ConfigError("cutoffs need two demand states and equal costs");
  }
  const Rational c = exact(env.cost(0));
  const Rational theta_l = exact(env.theta(0));
  const Rational theta_h = exact(env.theta(1));
  const Rational q_l = exact(env.probability(0));
  const Rational q_h = exact(env.probability(1));

  const Rational g_l = split_monopoly(theta_l, c);
  const Rational g_h = split_monopoly(theta_h, c);

  Cutoffs out;
  out.delta_min = Rational(1, 2);
  const Rational all_monopoly = q_l * g_l + q_h * g_h;
  out.delta_star = delta_from_ratio(std::max(g_l, g_h) / all_monopoly);

  // Both states at the low-state monopoly price, high-state constraint binding.
  const Rational flat = (theta_l + c) / 2;
  const Rational g_flat_h = (flat - c) * (theta_h - flat) / 2;
  const Rational e_flat = q_l * g_l + q_h * g_flat_h;
  out.delta_c = delta_from_ratio(g_flat_h / e_flat);
  return out;
}

SustainablePrices best_sustainable_prices(double delta, const MarketEnv& env) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::domain_error("delta must lie in [0, 1)");
  }
  const double c = common_cost(env);
  const int n = env.num_states();
  std::vector<double> cap(n);
  for (int k = 0; k < n; ++k) {
    cap[k] = collusive_profit(monopoly_price(env.theta(k), c), env.theta(k), c);
  }
  const double ratio = delta / (1.0 - delta);

  double e = 0.0;
  if (ratio == 1.0) {
    e = *std::min_element(cap.begin(), cap.end());
  } else if (ratio > 1.0) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return cap[a] < cap[b]; });
    for (int j = n; j >= 1; --j) {
      double slack_sum = 0.0, binding_mass = 0.0;
      for (int r = 0; r < n; ++r) {
        const int k = order[r];
        if (r < j) {
          slack_sum += env.probability(k) * cap[k];
        } else {
          binding_mass += env.probability(k);
        }
      }
      const double denom = 1.0 - ratio * binding_mass;
      if (denom <= 0.0) continue;
      const double candidate = slack_sum / denom;
      const double bound = ratio * candidate;
      const bool slack_ok = cap[order[j - 1]] <= bound * (1.0 + 1e-15);
      const bool binding_ok = j == n || cap[order[j]] > bound;
      if (slack_ok && binding_ok) {
        e = candidate;
        break;
      }
    }
  }

  SustainablePrices out;
  out.prices.resize(n);
  out.binding.resize(n);
  const double bound = ratio * e;
  double expected = 0.0;
  for (int k = 0; k < n; ++k) {
    const double theta = env.theta(k);
    const double g = std::min(cap[k], bound);
    const double disc = std::max(0.0, (theta - c) * (theta - c) - 8.0 * g);
    out.prices[k] = ((theta + c) - std::sqrt(disc)) / 2.0;
    out.binding[k] = std::abs(g - bound) <= 1e-12 * std::max(1.0, bound);
    expected += env.probability(k) * g;
  }
  out.expected_profit = expected;
  return out;
}

SustainablePrices best_sustainable_grid_prices(double delta,
                                               const MarketEnv& env) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::domain_error("delta must lie in [0, 1)");
  }
  const double c = common_cost(env);
  const int n = env.num_states();
  const int m = env.num_prices();
  const double ratio = delta / (1.0 - delta);

  std::vector<int> tuple(n, 0), best(n, 0);
  double best_e = -1.0;
  std::vector<double> g(n);
  while (true) {
    double e = 0.0;
    for (int k = 0; k < n; ++k) {
      g[k] = collusive_profit(env.price(static_cast<PriceIndex>(tuple[k])),
                              env.theta(k), c);
      e += env.probability(k) * g[k];
    }
    bool feasible = true;
    for (int k = 0; k < n && feasible; ++k) {
      feasible = g[k] <= ratio * e + 1e-12;
    }
    if (feasible && e > best_e + 1e-12) {
      best_e = e;
      best = tuple;
    }
    int k = n - 1;
    while (k >= 0 && ++tuple[k] == m) tuple[k--] = 0;
    if (k < 0) break;
  }

  SustainablePrices out;
  out.expected_profit = best_e;
  for (int k = 0; k < n; ++k) {
    const double p = env.price(static_cast<PriceIndex>(best[k]));
    out.prices.push_back(p);
    const double gk = collusive_profit(p, env.theta(k), c);
    out.binding.push_back(std::abs(gk - ratio * best_e) <= 1e-9);
  }
  return out;
}

std::string_view to_string(TheoryPattern p) {
  switch (p) {
    case TheoryPattern::kProcyclical: return "Procyclical";
    case TheoryPattern::kCountercyclical: return "Countercyclical";
    case TheoryPattern::kFlat: return "Flat";
    case TheoryPattern::kCompetitive: return "Competitive";
  }
  return "?";
}

TheoryPattern predicted_pattern(double delta, const MarketEnv& env) {
  const Cutoffs cuts = cutoffs(env);
  const Rational d = exact(delta);
  if (d < cuts.delta_min) return TheoryPattern::kCompetitive;
  if (std::abs(delta - cuts.c()) <= 1e-12) return TheoryPattern::kFlat;
  if (d > cuts.delta_c) return TheoryPattern::kProcyclical;
  return TheoryPattern::kCountercyclical;
}

TheoryPrediction predict(double delta, const MarketEnv& env) {
  const SustainablePrices best = best_sustainable_prices(delta, env);
  TheoryPrediction out;
  out.delta = delta;
  out.p_low = best.prices.front();
  out.p_high = best.prices.back();
  out.pattern = predicted_pattern(delta, env);
  if (delta < cutoffs(env).min()) {
    out.binding_state = "all";
  } else {
    for (int k = 0; k < env.num_states(); ++k) {
      if (!best.binding[k]) continue;
      if (!out.binding_state.empty()) out.binding_state += "+";
      out.binding_state += env.state_label(static_cast<DemandIndex>(k));
    }
    if (out.binding_state.empty()) out.binding_state = "none";
  }
  return out;
}

}  // namespace pricing
