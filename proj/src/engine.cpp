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


#include "pricing/engine.hpp"

#include <exception>
#include <stdexcept>

#include "pricing/parallel.hpp"
#include "pricing/rng.hpp"

namespace pricing {

std::string DemandMode::label() const {
  return fixed_state ? "fixed:" + std::to_string(*fixed_state) : "stochastic";
}

DemandMode parse_demand_mode(const std::string& text) {
  if (text == "stochastic") return DemandMode::stochastic();
  if (text.rfind("fixed:", 0) == 0) {
    const int k = std::stoi(text.substr(6));
    if (k < 0 || k > 255) throw ConfigError("fixed demand state out of range");
    return DemandMode::fixed_at(static_cast<DemandIndex>(k));
  }
  throw ConfigError("unknown demand mode '" + text + "'");
}

void validate(const SessionConfig& config) {
  for (const auto& agent : config.agents) validate(agent);
  if (!(config.schedule.beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (config.convergence_window < 1) {
    throw ConfigError("convergence_window must be >= 1");
  }
  if (config.max_iterations < config.convergence_window) {
    throw ConfigError("max_iterations must be >= convergence_window");
  }
  if (config.demand_mode.is_fixed() &&
      *config.demand_mode.fixed_state >= config.env.num_states()) {
    throw ConfigError("fixed demand state out of range");
  }
}

MarketEnv effective_env(const SessionConfig& config) {
  if (config.demand_mode.is_fixed()) {
    return config.env.fixed_at(*config.demand_mode.fixed_state);
  }
  return config.env;
}

SessionResult run_session(const SessionConfig& config) {
  validate(config);
  const MarketEnv env = effective_env(config);
  const int nd = env.num_states();
  const int m = env.num_prices();

  std::array<QMatrix, kNumAgents> q = {make_initial_q(env, 0, config.agents[0]),
                                       make_initial_q(env, 1, config.agents[1])};
  std::array<const StateEncoder*, kNumAgents> enc = {&q[0].encoder(),
                                                     &q[1].encoder()};
  PolicyPair greedy;
  for (int i = 0; i < kNumAgents; ++i) {
    greedy[i].resize(q[i].num_states());
    for (StateIndex s = 0; s < q[i].num_states(); ++s) {
      greedy[i][s] = greedy_action(q[i], s);
    }
  }

  // profits[((theta * m + p1) * m + p2) * 2 + agent]
  std::vector<double> profits(static_cast<std::size_t>(nd) * m * m * kNumAgents);
  for (int k = 0; k < nd; ++k) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        const std::size_t base = ((static_cast<std::size_t>(k) * m + a) * m + b) * 2;
        for (int i = 0; i < kNumAgents; ++i) {
          profits[base + i] = env.profit_at(i, static_cast<DemandIndex>(k),
                                            static_cast<PriceIndex>(a),
                                            static_cast<PriceIndex>(b));
        }
      }
    }
  }

  const auto& probs = env.probabilities();
  const auto um = static_cast<std::uint32_t>(m);
  const double alpha[2] = {config.agents[0].alpha, config.agents[1].alpha};
  const double delta[2] = {config.agents[0].delta, config.agents[1].delta};

  Rng rng(config.seed);
  auto theta_prev = static_cast<DemandIndex>(rng.categorical(probs));
  auto p1_prev = static_cast<PriceIndex>(rng.below(um));
  auto p2_prev = static_cast<PriceIndex>(rng.below(um));
  auto theta = static_cast<DemandIndex>(rng.categorical(probs));

  SessionResult result;
  std::uint64_t stable = 0;
  std::uint64_t t = 0;
  PriceIndex price[2] = {0, 0};
  while (t < config.max_iterations) {
    StateIndex s[2];
    const double eps = config.schedule.epsilon(t);
    for (int i = 0; i < kNumAgents; ++i) {
      s[i] = enc[i]->encode_unchecked(theta_prev, p1_prev, p2_prev, theta);
      price[i] = rng.uniform01() < eps ? static_cast<PriceIndex>(rng.below(um))
                                       : greedy[i][s[i]];
    }
    const std::size_t base =
        ((static_cast<std::size_t>(theta) * m + price[0]) * m + price[1]) * 2;
    const auto theta_next = static_cast<DemandIndex>(rng.categorical(probs));

    bool changed = false;
    for (int i = 0; i < kNumAgents; ++i) {
      const StateIndex next =
          enc[i]->encode_unchecked(theta, price[0], price[1], theta_next);
      const double target = profits[base + i] + delta[i] * q[i].row_max(next);
      double& cell = q[i].at(s[i], price[i]);
      cell = (1.0 - alpha[i]) * cell + alpha[i] * target;
      const PriceIndex best = greedy_action(q[i], s[i]);
      if (best != greedy[i][s[i]]) {
        greedy[i][s[i]] = best;
        changed = true;
      }
    }
    ++t;
    stable = changed ? 0 : stable + 1;
    if (stable >= config.convergence_window) {
      result.converged = true;
      break;
    }
    theta_prev = theta;
    p1_prev = price[0];
    p2_prev = price[1];
    theta = theta_next;
  }

  result.iterations = t;
  result.final_node = {theta, price[0], price[1]};
  result.policies = std::move(greedy);
  if (config.keep_q) result.final_q = std::move(q);
  return result;
}

ConvergenceStep check_convergence(const PolicyPair& now, const PolicyPair& prev,
                                  std::uint64_t counter, std::uint64_t window) {
  const bool same = now == prev;
  ConvergenceStep step;
  step.counter = same ? counter + 1 : 0;
  step.done = step.counter >= window;
  return step;
}

std::vector<BatchItem> run_batch(const std::vector<SessionConfig>& configs,
                                 int parallelism) {
  std::vector<BatchItem> items(configs.size());
  parallel_for(configs.size(), parallelism, [&](std::size_t i) {
    try {
      items[i].result = run_session(configs[i]);
    } catch (const std::exception& e) {
      items[i].error = e.what();
    }
  });
  return items;
}

std::vector<std::vector<BatchItem>> run_fixed_demand_benchmark(
    const SessionConfig& base, const std::vector<std::uint64_t>& seeds,
    int parallelism) {
  std::vector<std::vector<BatchItem>> out;
  for (int k = 0; k < base.env.num_states(); ++k) {
    std::vector<SessionConfig> configs;
    configs.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
      SessionConfig c = base;
      c.seed = seed;
      c.demand_mode = DemandMode::fixed_at(static_cast<DemandIndex>(k));
      for (auto& agent : c.agents) {
        agent.representation = Representation::kPricesOnly;
      }
      configs.push_back(std::move(c));
    }
    out.push_back(run_batch(configs, parallelism));
  }
  return out;
}

}  // namespace pricing
