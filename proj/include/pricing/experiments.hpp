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


#ifndef PRICING_EXPERIMENTS_HPP_
#define PRICING_EXPERIMENTS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pricing/agent.hpp"
#include "pricing/cycle.hpp"
#include "pricing/engine.hpp"
#include "pricing/market.hpp"

namespace pricing {

// Experiment configuration file (JSON):
//
//   env:      theta [6, 10], probabilities [0.5, 0.5], costs [0, 0],
//             grid {lower 0, upper 5, m 11}
//   agents:   one object for both agents or a two-element array, each with
//             alpha 0.15, delta 0.95, representation "FullMemory",
//             init "RandomOpponent"
//   schedule: beta 4e-6
//   run:      sessions 1000, seed 0, convergence_window 100000,
//             max_iterations 1e9, demand_mode "stochastic" | "fixed:<k>" |
//             "fixed_benchmark", dump_q false
//   sweep:    alpha / beta / delta, each a list or {from, to, step}; a swept
//             parameter overrides both agents
//   analysis: deviation_repetitions 1000, path_cap 10000,
//             deviation_patterns ["ProCycle", ...] (default: all),
//             theory_deltas (list or range, default 0.40..0.99 step 0.01)
//
// Every field is optional.
struct ExperimentConfig {
  MarketEnv env = MarketEnv::baseline();
  std::array<AgentConfig, kNumAgents> agents{};
  ExplorationSchedule schedule{};
  int sessions = 1000;
  std::uint64_t seed = 0;
  std::uint64_t convergence_window = 100'000;
  std::uint64_t max_iterations = 1'000'000'000;
  std::string demand_mode = "stochastic";
  bool dump_q = false;

  std::vector<double> sweep_alpha;
  std::vector<double> sweep_beta;
  std::vector<double> sweep_delta;

  int deviation_repetitions = 1000;
  std::uint64_t path_cap = 10'000;
  std::vector<PatternLabel> deviation_patterns;
  std::vector<double> theory_deltas;
};

// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Inclusive arithmetic range, values rounded to 12 decimals.
std::vector<double> linear_range(double from, double to, double step);

// One row of sessions.csv.
struct SessionRecord {
  std::uint64_t session_id = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  std::array<Representation, kNumAgents> representations{};
  InitMode init = InitMode::kRandomOpponent;
  std::uint64_t seed = 0;
  bool converged = false;
  std::uint64_t iterations = 0;
  DemandMode demand;
  PriceNode final_node;
};

struct SessionSpec {
  std::uint64_t session_id = 0;
  SessionConfig config;
};

// Sweep keys in (alpha, beta, delta) nested order, then demand state (for the
// fixed benchmark), then session ordinal. Seeds are
// derive_seed(config.seed, session_id). Fixed-demand sessions use PricesOnly
// agents.
std::vector<SessionSpec> expand_sessions(const ExperimentConfig& config);

struct StoredSession {
  SessionRecord record;
  PolicyPair policies;
};

std::vector<StoredSession> load_sessions(const std::filesystem::path& out_dir);

// The environment a stored session played in.
MarketEnv session_env(const ExperimentConfig& config, const SessionRecord& r);

CycleAnalysis analyze_stored(const ExperimentConfig& config,
                             const StoredSession& session);

// Subcommands. Each writes into out_dir and throws on failure.
void cmd_simulate(const ExperimentConfig& config,
                  const std::filesystem::path& out_dir, int jobs);
void cmd_analyze(const ExperimentConfig& config,
                 const std::filesystem::path& out_dir, int jobs);
void cmd_deviate(const ExperimentConfig& config,
                 const std::filesystem::path& out_dir, int jobs);
void cmd_theory(const ExperimentConfig& config,
                const std::filesystem::path& out_dir);
void cmd_asymmetric_report(const ExperimentConfig& config,
                           const std::filesystem::path& out_dir, int jobs);

// "%.9g"; NaN prints as an empty field.
std::string format_number(double x);

// Normal-approximation 95% half-width z * s / sqrt(n); NaN for n < 2.
double confidence_half_width(const std::vector<double>& xs);

}  // namespace pricing

#endif  // PRICING_EXPERIMENTS_HPP_
