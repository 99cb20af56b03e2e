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


#include "pricing/cycle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace pricing {

DynamicsGraph::DynamicsGraph(NodeCodec codec, std::vector<double> probabilities)
    : codec_(codec),
      probabilities_(std::move(probabilities)),
      successors_(static_cast<std::size_t>(codec.num_nodes()) *
                  codec.num_states) {}

Policy limit_strategy(const QMatrix& q) {
  Policy policy(q.num_states());
  for (StateIndex s = 0; s < q.num_states(); ++s) {
    policy[s] = greedy_action(q, s);
  }
  return policy;
}

std::array<StateEncoder, kNumAgents> make_encoders(
    const std::array<Representation, kNumAgents>& representations,
    const MarketEnv& env) {
  return {StateEncoder(representations[0], env.num_states(), env.num_prices()),
          StateEncoder(representations[1], env.num_states(), env.num_prices())};
}

DynamicsGraph build_graph(const PolicyPair& policies,
                          const std::array<StateEncoder, kNumAgents>& encoders,
                          const MarketEnv& env) {
  for (int i = 0; i < kNumAgents; ++i) {
    if (policies[i].size() != encoders[i].num_states()) {
      throw std::invalid_argument("policy size does not match its state space");
    }
  }
  const NodeCodec codec{env.num_states(), env.num_prices()};
  DynamicsGraph graph(codec, env.probabilities());
  for (NodeId v = 0; v < codec.num_nodes(); ++v) {
    const PriceNode node = codec.decode(v);
    for (int k = 0; k < env.num_states(); ++k) {
      const auto next = static_cast<DemandIndex>(k);
      PriceNode w{next, 0, 0};
      w.p1 = policies[0][encoders[0].encode(node.theta, node.p1, node.p2, next)];
      w.p2 = policies[1][encoders[1].encode(node.theta, node.p1, node.p2, next)];
      graph.set_successor(v, next, codec.encode(w));
    }
  }
  return graph;
}

SccResult strongly_connected_components(const DynamicsGraph& graph) {
  constexpr std::uint32_t kUnvisited = std::numeric_limits<std::uint32_t>::max();
  const NodeId n = graph.num_nodes();
  const int degree = graph.out_degree();
  std::vector<std::uint32_t> index(n, kUnvisited);
  std::vector<std::uint32_t> low(n, 0);
  std::vector<bool> done(n, false);
  SccResult result;
  result.component.assign(n, kUnvisited);

  // Nuutila: a vertex enters the stack only once it is known not to be a
  // component root.
  std::vector<NodeId> stack;
  struct Frame {
    NodeId v;
    int next_child;
  };
  std::vector<Frame> calls;
  std::uint32_t counter = 0;

  for (NodeId root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    index[root] = low[root] = counter++;
    calls.push_back({root, 0});
    while (!calls.empty()) {
      Frame& frame = calls.back();
      const NodeId v = frame.v;
      if (frame.next_child < degree) {
        const NodeId w =
            graph.successor(v, static_cast<DemandIndex>(frame.next_child++));
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          calls.push_back({w, 0});
        } else if (!done[w]) {
          low[v] = std::min(low[v], low[w]);
        }
        continue;
      }
      calls.pop_back();
      if (low[v] == index[v]) {
        const std::uint32_t id = result.count++;
        done[v] = true;
        result.component[v] = id;
        while (!stack.empty() && index[stack.back()] > index[v]) {
          done[stack.back()] = true;
          result.component[stack.back()] = id;
          stack.pop_back();
        }
      } else {
        stack.push_back(v);
      }
      if (!calls.empty()) {
        const NodeId parent = calls.back().v;
        if (!done[v]) low[parent] = std::min(low[parent], low[v]);
      }
    }
  }
  return result;
}

std::size_t PriceCycle::position(NodeId id) const {
  const auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) return ids.size();
  return static_cast<std::size_t>(it - ids.begin());
}

std::vector<double> stationary_distribution(const std::vector<double>& p,
                                            std::size_t n) {
  if (n == 0 || p.size() != n * n) {
    throw std::invalid_argument("transition matrix must be n x n, n >= 1");
  }
  const auto dim = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      a(i, j) = (i == j ? 1.0 : 0.0) - p[i * n + j] + 1.0;
    }
  }
  // psi A = 1  <=>  A^T psi^T = 1^T
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a.transpose());
  if (!lu.isInvertible()) {
    throw std::runtime_error("stationary system is singular");
  }
  const Eigen::VectorXd psi = lu.solve(Eigen::VectorXd::Ones(dim));
  return {psi.data(), psi.data() + dim};
}

PriceCycle find_price_cycle(const DynamicsGraph& graph, const PriceNode& start) {
  const NodeCodec& codec = graph.codec();
  const NodeId origin = codec.encode(start);
  if (origin >= graph.num_nodes()) {
    throw std::out_of_range("start node outside the graph");
  }
  const SccResult scc = strongly_connected_components(graph);
  const int degree = graph.out_degree();

  std::vector<bool> closed(scc.count, true);
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    for (int k = 0; k < degree; ++k) {
      const NodeId w = graph.successor(v, static_cast<DemandIndex>(k));
      if (scc.component[w] != scc.component[v]) {
        closed[scc.component[v]] = false;
      }
    }
  }

  std::vector<bool> seen(graph.num_nodes(), false);
  std::vector<NodeId> frontier = {origin};
  seen[origin] = true;
  std::uint32_t chosen = std::numeric_limits<std::uint32_t>::max();
  NodeId chosen_min = std::numeric_limits<NodeId>::max();
  while (!frontier.empty()) {
    const NodeId v = frontier.back();
    frontier.pop_back();
    if (closed[scc.component[v]] && v < chosen_min) {
      chosen = scc.component[v];
      chosen_min = v;
    }
    for (int k = 0; k < degree; ++k) {
      const NodeId w = graph.successor(v, static_cast<DemandIndex>(k));
      if (!seen[w]) {
        seen[w] = true;
        frontier.push_back(w);
      }
    }
  }
  if (chosen == std::numeric_limits<std::uint32_t>::max()) {
    throw std::logic_error("no closed component reachable from start node");
  }

  PriceCycle cycle;
  for (NodeId v = 0; v < graph.num_nodes(); ++v) {
    if (scc.component[v] == chosen) {
      cycle.ids.push_back(v);
      cycle.nodes.push_back(codec.decode(v));
    }
  }
  const std::size_t n = cycle.size();
  cycle.transition.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < degree; ++k) {
      const NodeId w = graph.successor(cycle.ids[i], static_cast<DemandIndex>(k));
      cycle.transition[i * n + cycle.position(w)] += graph.probabilities()[k];
    }
  }
  cycle.stationary = stationary_distribution(cycle.transition, n);
  return cycle;
}

StatePrices conditional_avg_prices(const PriceCycle& cycle,
                                   const MarketEnv& env) {
  StatePrices out;
  out.price.assign(env.num_states(), {0.0, 0.0});
  out.mass.assign(env.num_states(), 0.0);
  for (std::size_t j = 0; j < cycle.size(); ++j) {
    const PriceNode& v = cycle.nodes[j];
    const double w = cycle.stationary[j];
    out.mass[v.theta] += w;
    out.price[v.theta][0] += w * env.price(v.p1);
    out.price[v.theta][1] += w * env.price(v.p2);
  }
  for (int k = 0; k < env.num_states(); ++k) {
    if (out.mass[k] > 0.0) {
      for (double& p : out.price[k]) p /= out.mass[k];
    }
  }
  return out;
}

CycleMetrics compute_metrics(const PriceCycle& cycle, const MarketEnv& env) {
  const int nd = env.num_states();
  CycleMetrics m;
  const StatePrices prices = conditional_avg_prices(cycle, env);
  m.avg_price = prices.price;
  m.state_mass = prices.mass;
  m.profit.assign(nd, {0.0, 0.0});
  m.effective_price.assign(nd, 0.0);
  for (std::size_t j = 0; j < cycle.size(); ++j) {
    const PriceNode& v = cycle.nodes[j];
    const double w = cycle.stationary[j];
    for (int i = 0; i < kNumAgents; ++i) {
      m.profit[v.theta][i] += w * env.profit_at(i, v.theta, v.p1, v.p2);
    }
    m.effective_price[v.theta] += w * env.price(std::min(v.p1, v.p2));
  }

  m.price_ratio.assign(nd, {0.0, 0.0});
  m.profit_ratio.assign(nd, {0.0, 0.0});
  std::array<double, kNumAgents> reference{};
  for (int k = 0; k < nd; ++k) {
    if (m.state_mass[k] > 0.0) {
      for (double& x : m.profit[k]) x /= m.state_mass[k];
      m.effective_price[k] /= m.state_mass[k];
    }
    const double prob = env.probability(static_cast<DemandIndex>(k));
    for (int i = 0; i < kNumAgents; ++i) {
      const double theta = env.theta(static_cast<DemandIndex>(k));
      const double half_monopoly = monopoly_profit(theta, env.cost(i)) / 2.0;
      m.price_ratio[k][i] = m.avg_price[k][i] / monopoly_price(theta, env.cost(i));
      m.profit_ratio[k][i] = m.profit[k][i] / half_monopoly;
      m.expected_profit[i] += prob * m.profit[k][i];
      reference[i] += prob * half_monopoly;
    }
  }
  for (int i = 0; i < kNumAgents; ++i) {
    m.expected_profit_ratio[i] = m.expected_profit[i] / reference[i];
  }

  m.self_loop_share.resize(cycle.size());
  for (std::size_t j = 0; j < cycle.size(); ++j) {
    m.self_loop_share[j] = cycle.p(j, j);
  }
  return m;
}

std::string_view to_string(PatternLabel label) {
  switch (label) {
    case PatternLabel::kSymRigid: return "SymRigid";
    case PatternLabel::kProCycle: return "ProCycle";
    case PatternLabel::kCounterCycle: return "CounterCycle";
    case PatternLabel::kSym1Node: return "Sym1Node";
    case PatternLabel::kSemiRigid: return "SemiRigid";
    case PatternLabel::kOthers: return "Others";
  }
  return "?";
}

PatternLabel parse_pattern(std::string_view name) {
  for (auto label : {PatternLabel::kSymRigid, PatternLabel::kProCycle,
                     PatternLabel::kCounterCycle, PatternLabel::kSym1Node,
                     PatternLabel::kSemiRigid, PatternLabel::kOthers}) {
    if (to_string(label) == name) return label;
  }
  throw ConfigError("unknown pattern '" + std::string(name) + "'");
}

namespace {

constexpr double kPriceTol = 1e-9;

bool all_prices_equal(const PriceCycle& cycle) {
  const PriceIndex p = cycle.nodes.front().p1;
  return std::all_of(cycle.nodes.begin(), cycle.nodes.end(),
                     [p](const PriceNode& v) { return v.p1 == p && v.p2 == p; });
}

}  // namespace

PatternLabel classify_pattern(const CycleMetrics& metrics,
                              const PriceCycle& cycle,
                              const ClassifyOptions& options) {
  if (options.mode == AnalysisMode::kFixedDemand) {
    if (cycle.size() == 1 && cycle.nodes[0].p1 == cycle.nodes[0].p2) {
      return PatternLabel::kSym1Node;
    }
    return PatternLabel::kOthers;
  }
  if (cycle.size() == 2 && all_prices_equal(cycle)) {
    return PatternLabel::kSymRigid;
  }
  const auto& low = metrics.avg_price.front();
  const auto& high = metrics.avg_price.back();
  if (metrics.avg_price.size() >= 2) {
    bool pro = true, counter = true;
    for (int i = 0; i < kNumAgents; ++i) {
      pro = pro && high[i] > low[i] + kPriceTol;
      counter = counter && low[i] > high[i] + kPriceTol;
    }
    if (pro) return PatternLabel::kProCycle;
    if (counter) return PatternLabel::kCounterCycle;
  }
  if (options.mode == AnalysisMode::kAsymmetric &&
      metrics.avg_price.size() >= 2) {
    const int u = options.uninformed_agent;
    const int informed = 1 - u;
    bool uninformed_flat = true, informed_varies = false;
    for (std::size_t k = 1; k < metrics.avg_price.size(); ++k) {
      uninformed_flat = uninformed_flat &&
          std::abs(metrics.avg_price[k][u] - metrics.avg_price[0][u]) <= kPriceTol;
      informed_varies = informed_varies ||
          std::abs(metrics.avg_price[k][informed] -
                   metrics.avg_price[0][informed]) > kPriceTol;
    }
    if (uninformed_flat && informed_varies) return PatternLabel::kSemiRigid;
  }
  return PatternLabel::kOthers;
}

std::pair<double, double> self_loop_decomposition(const PriceCycle& cycle,
                                                  NodeId node) {
  const std::size_t j = cycle.position(node);
  if (j == cycle.size()) throw std::out_of_range("node not in cycle");
  const double psi = cycle.stationary[j];
  const double stay = cycle.p(j, j);
  return {psi * stay, psi * (1.0 - stay)};
}

Heatmap heatmap_aggregate(const std::vector<const PriceCycle*>& cycles,
                          const MarketEnv& env) {
  if (cycles.empty()) throw std::invalid_argument("heatmap of no sessions");
  const int nd = env.num_states();
  const auto m = static_cast<std::size_t>(env.num_prices());
  Heatmap sum(nd, std::vector<double>(m * m, 0.0));
  std::vector<int> sessions(nd, 0);
  for (const PriceCycle* cycle : cycles) {
    std::vector<double> mass(nd, 0.0);
    for (std::size_t j = 0; j < cycle->size(); ++j) {
      mass[cycle->nodes[j].theta] += cycle->stationary[j];
    }
    for (std::size_t j = 0; j < cycle->size(); ++j) {
      const PriceNode& v = cycle->nodes[j];
      sum[v.theta][v.p1 * m + v.p2] += cycle->stationary[j] / mass[v.theta];
    }
    for (int k = 0; k < nd; ++k) sessions[k] += mass[k] > 0.0;
  }
  for (int k = 0; k < nd; ++k) {
    if (sessions[k] == 0) continue;
    for (double& x : sum[k]) x /= sessions[k];
  }
  return sum;
}

namespace {

std::string node_label(const PriceNode& v, const MarketEnv& env) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s-(%g,%g)", env.state_label(v.theta).c_str(),
                env.price(v.p1), env.price(v.p2));
  return buf;
}

}  // namespace

void write_dot(std::ostream& out, const PriceCycle& cycle,
               const MarketEnv& env, std::string_view name) {
  out << "digraph \"" << name << "\" {\n";
  out << "  rankdir=LR;\n  node [shape=circle];\n";
  char buf[64];
  for (std::size_t j = 0; j < cycle.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.9g", cycle.stationary[j]);
    out << "  n" << cycle.ids[j] << " [label=\"" << node_label(cycle.nodes[j], env)
        << "\", xlabel=\"" << buf << "\"];\n";
  }
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    for (std::size_t j = 0; j < cycle.size(); ++j) {
      if (cycle.p(i, j) <= 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.9g", cycle.p(i, j));
      out << "  n" << cycle.ids[i] << " -> n" << cycle.ids[j] << " [label=\""
          << buf << "\"];\n";
    }
  }
  out << "}\n";
}

ClassifyOptions classify_options_for(
    const std::array<Representation, kNumAgents>& representations,
    const DemandMode& demand_mode) {
  ClassifyOptions options;
  if (demand_mode.is_fixed()) {
    options.mode = AnalysisMode::kFixedDemand;
    return options;
  }
  const auto observes = [](Representation r) {
    return r != Representation::kPricesOnly;
  };
  const bool a = observes(representations[0]);
  const bool b = observes(representations[1]);
  if (a != b) {
    options.mode = AnalysisMode::kAsymmetric;
    options.uninformed_agent = a ? 1 : 0;
  }
  return options;
}

CycleAnalysis analyze_session(
    const PolicyPair& policies,
    const std::array<Representation, kNumAgents>& representations,
    const MarketEnv& effective, const PriceNode& start,
    const ClassifyOptions& options) {
  const DynamicsGraph graph =
      build_graph(policies, make_encoders(representations, effective), effective);
  CycleAnalysis out;
  out.cycle = find_price_cycle(graph, start);
  out.metrics = compute_metrics(out.cycle, effective);
  out.pattern = classify_pattern(out.metrics, out.cycle, options);
  return out;
}

}  // namespace pricing
