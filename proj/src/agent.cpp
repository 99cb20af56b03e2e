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


#include "pricing/agent.hpp"

#include <algorithm>
#include <stdexcept>

namespace pricing {

std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::kFullMemory: return "FullMemory";
    case Representation::kNoDemandMemory: return "NoDemandMemory";
    case Representation::kNoPriceMemory: return "NoPriceMemory";
    case Representation::kNoMemory: return "NoMemory";
    case Representation::kPricesOnly: return "PricesOnly";
  }
  return "?";
}

Representation parse_representation(std::string_view name) {
  for (auto r : {Representation::kFullMemory, Representation::kNoDemandMemory,
                 Representation::kNoPriceMemory, Representation::kNoMemory,
                 Representation::kPricesOnly}) {
    if (to_string(r) == name) return r;
  }
  throw ConfigError("unknown representation '" + std::string(name) + "'");
}

std::string_view to_string(InitMode m) {
  return m == InitMode::kZero ? "Zero" : "RandomOpponent";
}

InitMode parse_init_mode(std::string_view name) {
  if (name == "RandomOpponent") return InitMode::kRandomOpponent;
  if (name == "Zero") return InitMode::kZero;
  throw ConfigError("unknown init mode '" + std::string(name) + "'");
}

StateEncoder::StateEncoder(Representation representation,
                           int num_demand_states, int num_prices)
    : representation_(representation) {
  bool theta_prev = false, prices = false, theta_now = false;
  switch (representation) {
    case Representation::kFullMemory:
      theta_prev = prices = theta_now = true;
      break;
    case Representation::kNoDemandMemory:
      prices = theta_now = true;
      break;
    case Representation::kNoPriceMemory:
      theta_prev = theta_now = true;
      break;
    case Representation::kNoMemory:
      theta_now = true;
      break;
    case Representation::kPricesOnly:
      prices = true;
      break;
  }
  const auto nd = static_cast<StateIndex>(num_demand_states);
  const auto np = static_cast<StateIndex>(num_prices);
  radix_[0] = theta_prev ? nd : 1;
  radix_[1] = prices ? np : 1;
  radix_[2] = prices ? np : 1;
  radix_[3] = theta_now ? nd : 1;
  used_[0] = theta_prev;
  used_[1] = used_[2] = prices;
  used_[3] = theta_now;
  num_states_ = radix_[0] * radix_[1] * radix_[2] * radix_[3];
}

StateIndex StateEncoder::encode(DemandIndex theta_prev, PriceIndex p1_prev,
                                PriceIndex p2_prev,
                                DemandIndex theta_now) const {
  const StateIndex parts[4] = {theta_prev, p1_prev, p2_prev, theta_now};
  for (int k = 0; k < 4; ++k) {
    if (used_[k] && parts[k] >= radix_[k]) {
      throw std::out_of_range("state component out of range");
    }
  }
  return encode_unchecked(theta_prev, p1_prev, p2_prev, theta_now);
}

StateTuple StateEncoder::decode(StateIndex s) const {
  if (s >= num_states_) throw std::out_of_range("state index out of range");
  StateIndex parts[4];
  for (int k = 3; k >= 0; --k) {
    parts[k] = s % radix_[k];
    s /= radix_[k];
  }
  return {static_cast<DemandIndex>(parts[0]), static_cast<PriceIndex>(parts[1]),
          static_cast<PriceIndex>(parts[2]), static_cast<DemandIndex>(parts[3])};
}

void validate(const AgentConfig& config) {
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1]");
  }
  if (!(config.delta >= 0.0 && config.delta < 1.0)) {
    throw ConfigError("delta must lie in [0, 1)");
  }
}

QMatrix::QMatrix(StateEncoder encoder, int num_prices)
    : encoder_(encoder),
      num_prices_(num_prices),
      values_(static_cast<std::size_t>(encoder.num_states()) * num_prices,
              0.0) {}

double QMatrix::row_max(StateIndex s) const {
  const auto r = row(s);
  return *std::max_element(r.begin(), r.end());
}

void QMatrix::write_csv(std::ostream& out) const {
  out << "state,price,value\n";
  char buf[64];
  for (StateIndex s = 0; s < num_states(); ++s) {
    for (int p = 0; p < num_prices_; ++p) {
      std::snprintf(buf, sizeof buf, "%u,%d,%.17g\n", s, p,
                    at(s, static_cast<PriceIndex>(p)));
      out << buf;
    }
  }
}

double avg_profit_vs_random(const MarketEnv& env, int agent, PriceIndex p,
                            DemandIndex theta) {
  double total = 0.0;
  for (int other = 0; other < env.num_prices(); ++other) {
    const auto o = static_cast<PriceIndex>(other);
    total += agent == 0 ? env.profit_at(0, theta, p, o)
                        : env.profit_at(1, theta, o, p);
  }
  return total / env.num_prices();
}

QMatrix init_q_zero(const StateEncoder& encoder, int num_prices) {
  return QMatrix(encoder, num_prices);
}

QMatrix init_q_random_opponent(const MarketEnv& env, int agent,
                               const AgentConfig& config) {
  if (!(config.delta < 1.0)) {
    throw std::domain_error("random-opponent initialization needs delta < 1");
  }
  const int nd = env.num_states();
  const int m = env.num_prices();
  // per_state[theta][p]
  std::vector<std::vector<double>> per_state(nd, std::vector<double>(m));
  std::vector<double> across(m, 0.0);
  for (int p = 0; p < m; ++p) {
    double mean = 0.0;
    for (int k = 0; k < nd; ++k) {
      per_state[k][p] = avg_profit_vs_random(env, agent,
                                             static_cast<PriceIndex>(p),
                                             static_cast<DemandIndex>(k));
      mean += per_state[k][p];
    }
    mean /= nd;
    const double continuation = config.delta / (1.0 - config.delta) * mean;
    for (int k = 0; k < nd; ++k) {
      per_state[k][p] += continuation;
      across[p] += per_state[k][p] / nd;
    }
  }

  QMatrix q(StateEncoder(config.representation, nd, m), m);
  const StateEncoder& enc = q.encoder();
  for (StateIndex s = 0; s < q.num_states(); ++s) {
    const auto& source =
        enc.uses_theta_now() ? per_state[enc.decode(s).theta_now] : across;
    std::copy(source.begin(), source.end(), q.row(s).begin());
  }
  return q;
}

QMatrix make_initial_q(const MarketEnv& env, int agent,
                       const AgentConfig& config) {
  if (config.init_mode == InitMode::kZero) {
    return init_q_zero(
        StateEncoder(config.representation, env.num_states(), env.num_prices()),
        env.num_prices());
  }
  return init_q_random_opponent(env, agent, config);
}

PriceIndex greedy_action(std::span<const double> row) {
  PriceIndex best = 0;
  for (std::size_t p = 1; p < row.size(); ++p) {
    if (row[p] > row[best]) best = static_cast<PriceIndex>(p);
  }
  return best;
}

PriceIndex select_price(const QMatrix& q, StateIndex s, std::uint64_t t,
                        const ExplorationSchedule& schedule, Rng& rng) {
  if (rng.uniform01() < schedule.epsilon(t)) {
    return static_cast<PriceIndex>(
        rng.below(static_cast<std::uint32_t>(q.num_prices())));
  }
  return greedy_action(q, s);
}

void update_q(QMatrix& q, StateIndex s, PriceIndex a, double realized_profit,
              StateIndex s_next, const AgentConfig& config) {
  const double target = realized_profit + config.delta * q.row_max(s_next);
  double& cell = q.at(s, a);
  cell = (1.0 - config.alpha) * cell + config.alpha * target;
}

}  // namespace pricing
