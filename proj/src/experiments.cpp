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


#include "pricing/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pricing/deviation.hpp"
#include "pricing/parallel.hpp"
#include "pricing/rng.hpp"
#include "pricing/theory.hpp"

namespace pricing {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Salt separating deviation streams from learning streams.
constexpr std::uint64_t kDeviationSalt = 0x6465766961746531ULL;

template <typename T>
T field(const json& obj, const char* key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for " + path + "." + key);
  }
}

std::vector<double> number_list(const json& value, const std::string& path) {
  if (value.is_array()) {
    std::vector<double> out;
    for (const auto& x : value) {
      if (!x.is_number()) throw ConfigError(path + " must contain numbers");
      out.push_back(x.get<double>());
    }
    if (out.empty()) throw ConfigError(path + " must not be empty");
    return out;
  }
  if (value.is_object()) {
    const double from = field<double>(value, "from", path, kNaN);
    const double to = field<double>(value, "to", path, kNaN);
    const double step = field<double>(value, "step", path, kNaN);
    if (std::isnan(from) || std::isnan(to) || std::isnan(step)) {
      throw ConfigError(path + " range needs from, to and step");
    }
    if (!(step > 0.0) || to < from) throw ConfigError(path + " range is empty");
    return linear_range(from, to, step);
  }
  if (value.is_number()) return {value.get<double>()};
  throw ConfigError(path + " must be a list or a {from, to, step} range");
}

AgentConfig parse_agent(const json& obj, const std::string& path,
                        AgentConfig base) {
  if (!obj.is_object()) throw ConfigError(path + " must be an object");
  base.alpha = field<double>(obj, "alpha", path, base.alpha);
  base.delta = field<double>(obj, "delta", path, base.delta);
  try {
    if (obj.contains("representation")) {
      base.representation = parse_representation(
          field<std::string>(obj, "representation", path, ""));
    }
    if (obj.contains("init")) {
      base.init_mode = parse_init_mode(field<std::string>(obj, "init", path, ""));
    }
    validate(base);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return base;
}

std::string key_of(const SessionRecord& r) {
  std::ostringstream s;
  s << format_number(r.alpha) << ',' << format_number(r.beta) << ','
    << format_number(r.delta) << ',' << to_string(r.representations[0]) << ','
    << to_string(r.representations[1]) << ',' << to_string(r.init) << ','
    << r.demand.label();
  return s.str();
}

std::string key_dir_name(const SessionRecord& r) {
  std::ostringstream s;
  s << 'a' << format_number(r.alpha) << "_b" << format_number(r.beta) << "_d"
    << format_number(r.delta) << '_' << to_string(r.representations[0]) << '-'
    << to_string(r.representations[1]) << '_' << to_string(r.init) << '_'
    << (r.demand.is_fixed() ? "fixed" + std::to_string(*r.demand.fixed_state)
                            : std::string("stochastic"));
  return s.str();
}

const char* kKeyHeader = "alpha,beta,delta,rep1,rep2,init,demand";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

fs::path policy_path(const fs::path& out_dir, std::uint64_t id) {
  return out_dir / "policies" / ("session_" + std::to_string(id) + ".csv");
}

// Per-state metrics re-indexed to the full environment; states a fixed-demand
// session never visits are NaN.
struct FullMetrics {
  std::vector<std::array<double, kNumAgents>> price;
  std::vector<std::array<double, kNumAgents>> profit;
  std::vector<double> effective;
  std::array<double, kNumAgents> expected_profit{};
  std::array<double, kNumAgents> expected_ratio{};
};

FullMetrics expand_metrics(const CycleMetrics& m, const DemandMode& demand,
                           int num_states) {
  FullMetrics f;
  f.price.assign(num_states, {kNaN, kNaN});
  f.profit.assign(num_states, {kNaN, kNaN});
  f.effective.assign(num_states, kNaN);
  for (std::size_t k = 0; k < m.avg_price.size(); ++k) {
    const std::size_t target = demand.is_fixed() ? *demand.fixed_state : k;
    f.price[target] = m.avg_price[k];
    f.profit[target] = m.profit[k];
    f.effective[target] = m.effective_price[k];
  }
  f.expected_profit = m.expected_profit;
  f.expected_ratio = m.expected_profit_ratio;
  return f;
}

struct AnalyzedSession {
  CycleAnalysis analysis;
  FullMetrics full;
  std::string error;
};

std::vector<AnalyzedSession> analyze_all(const ExperimentConfig& config,
                                         const std::vector<StoredSession>& sessions,
                                         int jobs) {
  std::vector<AnalyzedSession> out(sessions.size());
  parallel_for(sessions.size(), jobs, [&](std::size_t i) {
    try {
      out[i].analysis = analyze_stored(config, sessions[i]);
      out[i].full = expand_metrics(out[i].analysis.metrics,
                                   sessions[i].record.demand,
                                   config.env.num_states());
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].error.empty()) {
      throw std::runtime_error("session " +
                               std::to_string(sessions[i].record.session_id) +
                               ": " + out[i].error);
    }
  }
  return out;
}

// Sessions grouped by key, groups and members in first-appearance order.
std::vector<std::vector<std::size_t>> group_by_key(
    const std::vector<StoredSession>& sessions) {
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const std::string key = key_of(sessions[i].record);
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

std::vector<PatternLabel> labels_for(AnalysisMode mode) {
  switch (mode) {
    case AnalysisMode::kFixedDemand:
      return {PatternLabel::kSym1Node, PatternLabel::kOthers};
    case AnalysisMode::kAsymmetric:
      return {PatternLabel::kSemiRigid, PatternLabel::kSymRigid,
              PatternLabel::kProCycle, PatternLabel::kCounterCycle,
              PatternLabel::kOthers};
    case AnalysisMode::kStochastic:
      break;
  }
  return {PatternLabel::kProCycle, PatternLabel::kCounterCycle,
          PatternLabel::kSymRigid, PatternLabel::kOthers};
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return kNaN;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

std::string join_key(const SessionRecord& r) { return key_of(r); }

void write_matrix(const fs::path& path, const std::vector<double>& cells,
                  const MarketEnv& env) {
  auto out = open_out(path);
  const int m = env.num_prices();
  out << "p1\\p2";
  for (int b = 0; b < m; ++b) out << ',' << format_number(env.price(b));
  out << '\n';
  for (int a = 0; a < m; ++a) {
    out << format_number(env.price(a));
    for (int b = 0; b < m; ++b) out << ',' << format_number(cells[a * m + b]);
    out << '\n';
  }
  check_written(out, path);
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x == 0.0 ? 0.0 : x);
  return buf;
}

double confidence_half_width(const std::vector<double>& xs) {
  if (xs.size() < 2) return kNaN;
  const double mean = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (xs.size() - 1));
  return 1.959963984540054 * sd / std::sqrt(static_cast<double>(xs.size()));
}

std::vector<double> linear_range(double from, double to, double step) {
  const auto count = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::round((from + i * step) * 1e12) / 1e12;
  }
  return out;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;

  if (doc.contains("env")) {
    const json& env = doc.at("env");
    if (!env.is_object()) throw ConfigError("env must be an object");
    std::vector<double> thetas = {6.0, 10.0};
    std::vector<double> probs;
    std::array<double, kNumAgents> costs = {0.0, 0.0};
    if (env.contains("theta")) thetas = number_list(env.at("theta"), "env.theta");
    if (env.contains("probabilities")) {
      probs = number_list(env.at("probabilities"), "env.probabilities");
    } else {
      probs.assign(thetas.size(), 1.0 / thetas.size());
    }
    if (env.contains("costs")) {
      const auto v = number_list(env.at("costs"), "env.costs");
      if (v.size() == 1) {
        costs = {v[0], v[0]};
      } else if (v.size() == 2) {
        costs = {v[0], v[1]};
      } else {
        throw ConfigError("env.costs must have one or two entries");
      }
    }
    double lower = 0.0, upper = 5.0;
    int m = 11;
    if (env.contains("grid")) {
      const json& grid = env.at("grid");
      lower = field<double>(grid, "lower", "env.grid", lower);
      upper = field<double>(grid, "upper", "env.grid", upper);
      m = field<int>(grid, "m", "env.grid", m);
    }
    c.env = MarketEnv(thetas, probs, costs, PriceGrid(lower, upper, m));
  }

  if (doc.contains("agents")) {
    const json& agents = doc.at("agents");
    if (agents.is_array()) {
      if (agents.size() != kNumAgents) {
        throw ConfigError("agents must list exactly two agents");
      }
      for (int i = 0; i < kNumAgents; ++i) {
        c.agents[i] = parse_agent(agents[i], "agents[" + std::to_string(i) + "]",
                                  c.agents[i]);
      }
    } else {
      c.agents[0] = c.agents[1] = parse_agent(agents, "agents", c.agents[0]);
    }
  }

  if (doc.contains("schedule")) {
    c.schedule.beta = field<double>(doc.at("schedule"), "beta", "schedule",
                                    c.schedule.beta);
    if (!(c.schedule.beta >= 0.0)) throw ConfigError("schedule.beta must be >= 0");
  }

  const json run = doc.contains("run") ? doc.at("run") : json::object();
  c.sessions = field<int>(run, "sessions", "run", c.sessions);
  c.seed = field<std::uint64_t>(run, "seed", "run", c.seed);
  if (doc.contains("seed")) c.seed = field<std::uint64_t>(doc, "seed", "", c.seed);
  c.convergence_window = static_cast<std::uint64_t>(field<double>(
      run, "convergence_window", "run", static_cast<double>(c.convergence_window)));
  c.max_iterations = static_cast<std::uint64_t>(field<double>(
      run, "max_iterations", "run", static_cast<double>(c.max_iterations)));
  c.demand_mode = field<std::string>(run, "demand_mode", "run", c.demand_mode);
  c.dump_q = field<bool>(run, "dump_q", "run", c.dump_q);
  if (c.sessions < 1) throw ConfigError("run.sessions must be >= 1");
  if (c.convergence_window < 1) {
    throw ConfigError("run.convergence_window must be >= 1");
  }
  if (c.max_iterations < c.convergence_window) {
    throw ConfigError("run.max_iterations must be >= run.convergence_window");
  }
  if (c.demand_mode != "fixed_benchmark") {
    try {
      const DemandMode mode = parse_demand_mode(c.demand_mode);
      if (mode.is_fixed() && *mode.fixed_state >= c.env.num_states()) {
        throw ConfigError("fixed state out of range");
      }
    } catch (const std::exception& e) {
      throw ConfigError(std::string("run.demand_mode: ") + e.what());
    }
  }

  if (doc.contains("sweep")) {
    const json& sweep = doc.at("sweep");
    if (sweep.contains("alpha")) c.sweep_alpha = number_list(sweep.at("alpha"), "sweep.alpha");
    if (sweep.contains("beta")) c.sweep_beta = number_list(sweep.at("beta"), "sweep.beta");
    if (sweep.contains("delta")) c.sweep_delta = number_list(sweep.at("delta"), "sweep.delta");
    for (double a : c.sweep_alpha) {
      if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("sweep.alpha values must lie in [0, 1]");
    }
    for (double b : c.sweep_beta) {
      if (!(b >= 0.0)) throw ConfigError("sweep.beta values must be >= 0");
    }
    for (double d : c.sweep_delta) {
      if (!(d >= 0.0 && d < 1.0)) throw ConfigError("sweep.delta values must lie in [0, 1)");
    }
  }

  const json analysis = doc.contains("analysis") ? doc.at("analysis") : json::object();
  c.deviation_repetitions = field<int>(analysis, "deviation_repetitions",
                                       "analysis", c.deviation_repetitions);
  c.path_cap = field<std::uint64_t>(analysis, "path_cap", "analysis", c.path_cap);
  if (c.deviation_repetitions < 1) {
    throw ConfigError("analysis.deviation_repetitions must be >= 1");
  }
  if (c.path_cap < 1) throw ConfigError("analysis.path_cap must be >= 1");
  if (analysis.contains("deviation_patterns")) {
    for (const auto& name : analysis.at("deviation_patterns")) {
      if (!name.is_string()) {
        throw ConfigError("analysis.deviation_patterns must list pattern names");
      }
      try {
        c.deviation_patterns.push_back(parse_pattern(name.get<std::string>()));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("analysis.deviation_patterns: ") + e.what());
      }
    }
  }
  c.theory_deltas = analysis.contains("theory_deltas")
                        ? number_list(analysis.at("theory_deltas"), "analysis.theory_deltas")
                        : linear_range(0.40, 0.99, 0.01);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

std::vector<SessionSpec> expand_sessions(const ExperimentConfig& config) {
  const std::vector<double> alphas =
      config.sweep_alpha.empty() ? std::vector<double>{config.agents[0].alpha}
                                 : config.sweep_alpha;
  const std::vector<double> betas =
      config.sweep_beta.empty() ? std::vector<double>{config.schedule.beta}
                                : config.sweep_beta;
  const std::vector<double> deltas =
      config.sweep_delta.empty() ? std::vector<double>{config.agents[0].delta}
                                 : config.sweep_delta;
  std::vector<DemandMode> modes;
  if (config.demand_mode == "fixed_benchmark") {
    for (int k = 0; k < config.env.num_states(); ++k) {
      modes.push_back(DemandMode::fixed_at(static_cast<DemandIndex>(k)));
    }
  } else {
    modes.push_back(parse_demand_mode(config.demand_mode));
  }

  std::vector<SessionSpec> out;
  std::uint64_t id = 0;
  for (double alpha : alphas) {
    for (double beta : betas) {
      for (double delta : deltas) {
        for (const DemandMode& mode : modes) {
          for (int s = 0; s < config.sessions; ++s, ++id) {
            SessionSpec spec;
            spec.session_id = id;
            SessionConfig& c = spec.config;
            c.env = config.env;
            c.agents = config.agents;
            for (auto& agent : c.agents) {
              if (!config.sweep_alpha.empty()) agent.alpha = alpha;
              if (!config.sweep_delta.empty()) agent.delta = delta;
              if (mode.is_fixed()) agent.representation = Representation::kPricesOnly;
            }
            c.schedule.beta = beta;
            c.seed = derive_seed(config.seed, id);
            c.convergence_window = config.convergence_window;
            c.max_iterations = config.max_iterations;
            c.demand_mode = mode;
            c.keep_q = config.dump_q;
            out.push_back(std::move(spec));
          }
        }
      }
    }
  }
  return out;
}

MarketEnv session_env(const ExperimentConfig& config, const SessionRecord& r) {
  if (r.demand.is_fixed()) return config.env.fixed_at(*r.demand.fixed_state);
  return config.env;
}

CycleAnalysis analyze_stored(const ExperimentConfig& config,
                             const StoredSession& session) {
  const MarketEnv env = session_env(config, session.record);
  return analyze_session(
      session.policies, session.record.representations, env,
      session.record.final_node,
      classify_options_for(session.record.representations, session.record.demand));
}

namespace {

const char* kSessionsHeader =
    "session_id,alpha,beta,delta,rep1,rep2,init,seed,converged,iterations,"
    "demand,final_theta,final_p1,final_p2";

void write_policy_file(const fs::path& path, const PolicyPair& policies) {
  auto out = open_out(path);
  out << "state,p1,p2\n";
  const std::size_t rows = std::max(policies[0].size(), policies[1].size());
  for (std::size_t s = 0; s < rows; ++s) {
    out << s << ',';
    if (s < policies[0].size()) out << policies[0][s];
    out << ',';
    if (s < policies[1].size()) out << policies[1][s];
    out << '\n';
  }
  check_written(out, path);
}

PolicyPair read_policy_file(const fs::path& path,
                            const std::array<StateIndex, kNumAgents>& sizes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing policy file " + path.string());
  std::string line;
  std::getline(in, line);
  PolicyPair policies;
  for (int i = 0; i < kNumAgents; ++i) policies[i].reserve(sizes[i]);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 3) throw std::runtime_error("malformed " + path.string());
    for (int i = 0; i < kNumAgents; ++i) {
      if (!cells[1 + i].empty()) {
        policies[i].push_back(static_cast<PriceIndex>(std::stoul(cells[1 + i])));
      }
    }
  }
  for (int i = 0; i < kNumAgents; ++i) {
    if (policies[i].size() != sizes[i]) {
      throw std::runtime_error("policy size mismatch in " + path.string());
    }
  }
  return policies;
}

}  // namespace

void cmd_simulate(const ExperimentConfig& config, const fs::path& out_dir,
                  int jobs) {
  fs::create_directories(out_dir / "policies");
  if (config.dump_q) fs::create_directories(out_dir / "q");
  const std::vector<SessionSpec> specs = expand_sessions(config);

  std::vector<std::string> errors(specs.size());
  std::vector<SessionRecord> records(specs.size());
  parallel_for(specs.size(), jobs, [&](std::size_t i) {
    try {
      const SessionSpec& spec = specs[i];
      const SessionResult result = run_session(spec.config);
      SessionRecord& r = records[i];
      r.session_id = spec.session_id;
      r.alpha = spec.config.agents[0].alpha;
      r.beta = spec.config.schedule.beta;
      r.delta = spec.config.agents[0].delta;
      r.representations = {spec.config.agents[0].representation,
                           spec.config.agents[1].representation};
      r.init = spec.config.agents[0].init_mode;
      r.seed = spec.config.seed;
      r.converged = result.converged;
      r.iterations = result.iterations;
      r.demand = spec.config.demand_mode;
      r.final_node = result.final_node;
      write_policy_file(policy_path(out_dir, spec.session_id), result.policies);
      if (result.final_q) {
        for (int a = 0; a < kNumAgents; ++a) {
          const fs::path q_path =
              out_dir / "q" / ("session_" + std::to_string(spec.session_id) +
                               "_agent" + std::to_string(a + 1) + ".csv");
          auto out = open_out(q_path);
          (*result.final_q)[a].write_csv(out);
          check_written(out, q_path);
        }
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      throw std::runtime_error("session " + std::to_string(specs[i].session_id) +
                               ": " + errors[i]);
    }
  }

  const fs::path path = out_dir / "sessions.csv";
  auto out = open_out(path);
  out << kSessionsHeader << '\n';
  for (const SessionRecord& r : records) {
    out << r.session_id << ',' << format_number(r.alpha) << ','
        << format_number(r.beta) << ',' << format_number(r.delta) << ','
        << to_string(r.representations[0]) << ','
        << to_string(r.representations[1]) << ',' << to_string(r.init) << ','
        << r.seed << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ','
        << r.demand.label() << ',' << int{r.final_node.theta} << ','
        << r.final_node.p1 << ',' << r.final_node.p2 << '\n';
  }
  check_written(out, path);
}

std::vector<StoredSession> load_sessions(const fs::path& out_dir) {
  const fs::path path = out_dir / "sessions.csv";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kSessionsHeader) {
    throw std::runtime_error("unexpected header in " + path.string());
  }
  std::vector<StoredSession> sessions;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 14) throw std::runtime_error("malformed row in " + path.string());
    StoredSession s;
    SessionRecord& r = s.record;
    r.session_id = std::stoull(c[0]);
    r.alpha = std::stod(c[1]);
    r.beta = std::stod(c[2]);
    r.delta = std::stod(c[3]);
    r.representations = {parse_representation(c[4]), parse_representation(c[5])};
    r.init = parse_init_mode(c[6]);
    r.seed = std::stoull(c[7]);
    r.converged = c[8] == "1";
    r.iterations = std::stoull(c[9]);
    r.demand = parse_demand_mode(c[10]);
    r.final_node = {static_cast<DemandIndex>(std::stoul(c[11])),
                    static_cast<PriceIndex>(std::stoul(c[12])),
                    static_cast<PriceIndex>(std::stoul(c[13]))};
    sessions.push_back(std::move(s));
  }
  return sessions;
}

namespace {

void load_policies(const ExperimentConfig& config, const fs::path& out_dir,
                   std::vector<StoredSession>& sessions) {
  for (StoredSession& s : sessions) {
    const MarketEnv env = session_env(config, s.record);
    const auto encoders = make_encoders(s.record.representations, env);
    s.policies = read_policy_file(policy_path(out_dir, s.record.session_id),
                                  {encoders[0].num_states(), encoders[1].num_states()});
  }
}

std::vector<StoredSession> load_all(const ExperimentConfig& config,
                                    const fs::path& out_dir) {
  auto sessions = load_sessions(out_dir);
  load_policies(config, out_dir, sessions);
  return sessions;
}

std::string state_columns(const MarketEnv& env, const char* prefix,
                          bool per_agent) {
  std::string out;
  for (int k = 0; k < env.num_states(); ++k) {
    const std::string label = env.state_label(static_cast<DemandIndex>(k));
    if (per_agent) {
      for (int i = 1; i <= kNumAgents; ++i) {
        out += ',' + std::string(prefix) + label + '_' + std::to_string(i);
      }
    } else {
      out += ',' + std::string(prefix) + label;
    }
  }
  return out;
}

}  // namespace

void cmd_analyze(const ExperimentConfig& config, const fs::path& out_dir,
                 int jobs) {
  const std::vector<StoredSession> sessions = load_all(config, out_dir);
  const std::vector<AnalyzedSession> analyzed = analyze_all(config, sessions, jobs);
  const MarketEnv& env = config.env;
  const int nd = env.num_states();

  {
    const fs::path path = out_dir / "cycles.csv";
    auto out = open_out(path);
    out << "session_id,pattern,n_nodes" << state_columns(env, "p", true)
        << state_columns(env, "eff", false) << state_columns(env, "pi", true)
        << ",e_profit_1,e_profit_2\n";
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      const FullMetrics& f = analyzed[i].full;
      out << sessions[i].record.session_id << ','
          << to_string(analyzed[i].analysis.pattern) << ','
          << analyzed[i].analysis.cycle.size();
      for (int k = 0; k < nd; ++k) {
        for (double x : f.price[k]) out << ',' << format_number(x);
      }
      for (int k = 0; k < nd; ++k) out << ',' << format_number(f.effective[k]);
      for (int k = 0; k < nd; ++k) {
        for (double x : f.profit[k]) out << ',' << format_number(x);
      }
      out << ',' << format_number(f.expected_profit[0]) << ','
          << format_number(f.expected_profit[1]) << '\n';
    }
    check_written(out, path);
  }

  fs::create_directories(out_dir / "dot");
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const std::string name = "cycle_" + std::to_string(sessions[i].record.session_id);
    const fs::path path = out_dir / "dot" / (name + ".dot");
    auto out = open_out(path);
    write_dot(out, analyzed[i].analysis.cycle, session_env(config, sessions[i].record),
              name);
    check_written(out, path);
  }

  const auto groups = group_by_key(sessions);
  {
    const fs::path path = out_dir / "patterns.csv";
    auto out = open_out(path);
    out << kKeyHeader << ",pattern,share,n,sessions"
        << state_columns(env, "p", true) << state_columns(env, "pi", true)
        << state_columns(env, "eff", false)
        << ",e_profit_1,e_profit_2,e_profit_1_hw,e_profit_2_hw,e_ratio_1,e_ratio_2\n";
    for (const auto& group : groups) {
      const SessionRecord& head = sessions[group.front()].record;
      const auto options = classify_options_for(head.representations, head.demand);
      for (PatternLabel label : labels_for(options.mode)) {
        std::vector<std::size_t> members;
        for (std::size_t i : group) {
          if (analyzed[i].analysis.pattern == label) members.push_back(i);
        }
        out << join_key(head) << ',' << to_string(label) << ','
            << format_number(static_cast<double>(members.size()) / group.size())
            << ',' << members.size() << ',' << group.size();
        const auto mean_over = [&](auto getter) {
          std::vector<double> xs;
          for (std::size_t i : members) {
            const double x = getter(analyzed[i].full);
            if (!std::isnan(x)) xs.push_back(x);
          }
          return xs;
        };
        for (int k = 0; k < nd; ++k) {
          for (int a = 0; a < kNumAgents; ++a) {
            out << ',' << format_number(mean_of(mean_over(
                              [&](const FullMetrics& f) { return f.price[k][a]; })));
          }
        }
        for (int k = 0; k < nd; ++k) {
          for (int a = 0; a < kNumAgents; ++a) {
            out << ',' << format_number(mean_of(mean_over(
                              [&](const FullMetrics& f) { return f.profit[k][a]; })));
          }
        }
        for (int k = 0; k < nd; ++k) {
          out << ',' << format_number(mean_of(mean_over(
                            [&](const FullMetrics& f) { return f.effective[k]; })));
        }
        std::array<std::vector<double>, kNumAgents> profits;
        for (int a = 0; a < kNumAgents; ++a) {
          profits[a] = mean_over([&](const FullMetrics& f) { return f.expected_profit[a]; });
        }
        for (int a = 0; a < kNumAgents; ++a) out << ',' << format_number(mean_of(profits[a]));
        for (int a = 0; a < kNumAgents; ++a) {
          out << ',' << format_number(confidence_half_width(profits[a]));
        }
        for (int a = 0; a < kNumAgents; ++a) {
          out << ',' << format_number(mean_of(mean_over(
                            [&](const FullMetrics& f) { return f.expected_ratio[a]; })));
        }
        out << '\n';
      }
    }
    check_written(out, path);
  }

  for (const auto& group : groups) {
    const SessionRecord& head = sessions[group.front()].record;
    const MarketEnv key_env = session_env(config, head);
    std::map<PatternLabel, std::vector<const PriceCycle*>> by_pattern;
    for (std::size_t i : group) {
      by_pattern[analyzed[i].analysis.pattern].push_back(&analyzed[i].analysis.cycle);
    }
    for (const auto& [label, cycles] : by_pattern) {
      const fs::path dir = out_dir / "heatmaps" / key_dir_name(head) /
                           std::string(to_string(label));
      fs::create_directories(dir);
      const Heatmap heat = heatmap_aggregate(cycles, key_env);
      for (int k = 0; k < key_env.num_states(); ++k) {
        const int original = head.demand.is_fixed() ? *head.demand.fixed_state : k;
        write_matrix(dir / ("heatmap_" + env.state_label(static_cast<DemandIndex>(original)) + ".csv"),
                     heat[k], key_env);
      }
    }
  }
}

void cmd_deviate(const ExperimentConfig& config, const fs::path& out_dir,
                 int jobs) {
  const std::vector<StoredSession> sessions = load_all(config, out_dir);
  const std::vector<AnalyzedSession> analyzed = analyze_all(config, sessions, jobs);
  const auto wanted = [&](PatternLabel label) {
    return config.deviation_patterns.empty() ||
           std::find(config.deviation_patterns.begin(),
                     config.deviation_patterns.end(),
                     label) != config.deviation_patterns.end();
  };

  std::vector<std::optional<DeviationReport>> reports(sessions.size());
  std::vector<std::string> errors(sessions.size());
  parallel_for(sessions.size(), jobs, [&](std::size_t i) {
    if (!sessions[i].record.converged || !wanted(analyzed[i].analysis.pattern)) return;
    try {
      const SessionRecord& r = sessions[i].record;
      const MarketEnv env = session_env(config, r);
      LimitStrategies strategies{sessions[i].policies,
                                 make_encoders(r.representations, env)};
      reports[i] = deviation_report(analyzed[i].analysis.cycle, strategies, env,
                                    r.delta, config.deviation_repetitions,
                                    config.path_cap,
                                    derive_seed(config.seed ^ kDeviationSalt, r.session_id));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      throw std::runtime_error("session " +
                               std::to_string(sessions[i].record.session_id) +
                               ": " + errors[i]);
    }
  }

  const fs::path path = out_dir / "deviation.csv";
  auto out = open_out(path);
  out << "record,session_id," << kKeyHeader
      << ",pattern,node_id,demand_state,deviator,repetitions,unprofitable_freq,"
         "censored_count,empty_share,n\n";
  const auto key_prefix = [&](const char* record, const std::string& id,
                              const SessionRecord& r, PatternLabel label) {
    out << record << ',' << id << ',' << join_key(r) << ',' << to_string(label);
  };
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (!reports[i]) continue;
    const SessionRecord& r = sessions[i].record;
    const MarketEnv env = session_env(config, r);
    const PatternLabel label = analyzed[i].analysis.pattern;
    const std::string id = std::to_string(r.session_id);
    const auto state_name = [&](int k) {
      const int original = r.demand.is_fixed() ? *r.demand.fixed_state : k;
      return config.env.state_label(static_cast<DemandIndex>(original));
    };
    int censored = 0;
    for (const NodeDeviation& e : reports[i]->entries) {
      key_prefix("node", id, r, label);
      out << ',' << e.node << ',' << state_name(e.theta) << ',' << e.deviator + 1
          << ',' << e.repetitions << ',' << format_number(e.unprofitable_freq)
          << ',' << e.censored << ',' << (e.empty_decision ? 1 : 0) << ",1\n";
      censored += e.censored;
    }
    key_prefix("session", id, r, label);
    out << ",,all,," << reports[i]->repetitions << ','
        << format_number(reports[i]->overall) << ',' << censored << ','
        << format_number(reports[i]->empty_share) << ",1\n";
    for (int k = 0; k < env.num_states(); ++k) {
      key_prefix("session", id, r, label);
      out << ",," << state_name(k) << ",," << reports[i]->repetitions << ','
          << format_number(reports[i]->by_state[k]) << ",,,1\n";
    }
  }

  // Aggregates per key and pattern: unweighted means over sessions.
  for (const auto& group : group_by_key(sessions)) {
    std::map<PatternLabel, std::vector<std::size_t>> by_pattern;
    for (std::size_t i : group) {
      if (reports[i]) by_pattern[analyzed[i].analysis.pattern].push_back(i);
    }
    for (const auto& [label, members] : by_pattern) {
      const SessionRecord& head = sessions[members.front()].record;
      std::vector<double> overall, empty;
      std::vector<std::vector<double>> by_state(config.env.num_states());
      for (std::size_t i : members) {
        if (!std::isnan(reports[i]->overall)) overall.push_back(reports[i]->overall);
        empty.push_back(reports[i]->empty_share);
        const SessionRecord& r = sessions[i].record;
        for (std::size_t k = 0; k < reports[i]->by_state.size(); ++k) {
          const std::size_t original = r.demand.is_fixed() ? *r.demand.fixed_state : k;
          if (!std::isnan(reports[i]->by_state[k])) {
            by_state[original].push_back(reports[i]->by_state[k]);
          }
        }
      }
      key_prefix("aggregate", "", head, label);
      out << ",,all,," << config.deviation_repetitions << ','
          << format_number(mean_of(overall)) << ",," << format_number(mean_of(empty))
          << ',' << members.size() << '\n';
      for (int k = 0; k < config.env.num_states(); ++k) {
        if (by_state[k].empty()) continue;
        key_prefix("aggregate", "", head, label);
        out << ",," << config.env.state_label(static_cast<DemandIndex>(k)) << ",,"
            << config.deviation_repetitions << ',' << format_number(mean_of(by_state[k]))
            << ",,," << by_state[k].size() << '\n';
      }
    }
  }
  check_written(out, path);
}

void cmd_theory(const ExperimentConfig& config, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const MarketEnv& env = config.env;
  const fs::path path = out_dir / "theory.csv";
  auto out = open_out(path);
  out << "row,delta,p_L,p_H,pattern,binding_state,p_L_grid,p_H_grid,note\n";

  if (!cutoffs_supported(env)) {
    // Grid-restricted search still applies when costs are equal.
    if (env.cost(0) != env.cost(1)) {
      throw ConfigError("theory needs equal costs");
    }
    for (double delta : config.theory_deltas) {
      if (!(delta >= 0.0 && delta < 1.0)) continue;
      const SustainablePrices grid = best_sustainable_grid_prices(delta, env);
      out << "schedule," << format_number(delta) << ",,,,,"
          << format_number(grid.prices.front()) << ','
          << format_number(grid.prices.back())
          << ",unsupported env: grid-search fallback\n";
    }
    check_written(out, path);
    return;
  }

  const Cutoffs cuts = cutoffs(env);
  const std::pair<const char*, const Rational*> rows[] = {
      {"cutoff_min", &cuts.delta_min},
      {"cutoff_c", &cuts.delta_c},
      {"cutoff_star", &cuts.delta_star}};
  for (const auto& [name, value] : rows) {
    const double delta = value->convert_to<double>();
    const TheoryPrediction p = predict(delta, env);
    std::ostringstream exact;
    exact << *value;
    out << name << ',' << format_number(delta) << ',' << format_number(p.p_low)
        << ',' << format_number(p.p_high) << ',' << to_string(p.pattern) << ','
        << p.binding_state << ",,," << exact.str() << '\n';
  }
  for (double delta : config.theory_deltas) {
    if (!(delta >= 0.0 && delta < 1.0)) {
      throw ConfigError("analysis.theory_deltas values must lie in [0, 1)");
    }
    const TheoryPrediction p = predict(delta, env);
    const SustainablePrices grid = best_sustainable_grid_prices(delta, env);
    out << "schedule," << format_number(delta) << ',' << format_number(p.p_low)
        << ',' << format_number(p.p_high) << ',' << to_string(p.pattern) << ','
        << p.binding_state << ',' << format_number(grid.prices.front()) << ','
        << format_number(grid.prices.back()) << ",\n";
  }
  check_written(out, path);
}

void cmd_asymmetric_report(const ExperimentConfig& config,
                           const fs::path& out_dir, int jobs) {
  const std::vector<StoredSession> sessions = load_all(config, out_dir);
  for (const StoredSession& s : sessions) {
    const auto options = classify_options_for(s.record.representations, s.record.demand);
    if (options.mode != AnalysisMode::kAsymmetric) {
      throw std::runtime_error(
          "asym-report: session " + std::to_string(s.record.session_id) +
          " is not an asymmetric-information session");
    }
  }
  const std::vector<AnalyzedSession> analyzed = analyze_all(config, sessions, jobs);
  const MarketEnv& env = config.env;
  const int nd = env.num_states();

  const fs::path path = out_dir / "asym.csv";
  auto out = open_out(path);
  out << "row," << kKeyHeader << ",pattern,share,n,sessions"
      << state_columns(env, "informed_p", false)
      << state_columns(env, "uninformed_p", false)
      << ",informed_profit,uninformed_profit,premium\n";
  for (const auto& group : group_by_key(sessions)) {
    const SessionRecord& head = sessions[group.front()].record;
    const auto options = classify_options_for(head.representations, head.demand);
    const int u = options.uninformed_agent;
    const int informed = 1 - u;
    const std::string empty_cols(static_cast<std::size_t>(2 * nd + 3), ',');
    for (PatternLabel label : labels_for(AnalysisMode::kAsymmetric)) {
      std::size_t n = 0;
      for (std::size_t i : group) n += analyzed[i].analysis.pattern == label;
      out << "pattern," << join_key(head) << ',' << to_string(label) << ','
          << format_number(static_cast<double>(n) / group.size()) << ',' << n
          << ',' << group.size() << empty_cols << '\n';
    }
    std::vector<std::size_t> semi;
    for (std::size_t i : group) {
      if (analyzed[i].analysis.pattern == PatternLabel::kSemiRigid) semi.push_back(i);
    }
    out << "comparison," << join_key(head) << ",SemiRigid,"
        << format_number(static_cast<double>(semi.size()) / group.size()) << ','
        << semi.size() << ',' << group.size();
    std::vector<double> informed_profit, uninformed_profit;
    for (std::size_t i : semi) {
      informed_profit.push_back(analyzed[i].full.expected_profit[informed]);
      uninformed_profit.push_back(analyzed[i].full.expected_profit[u]);
    }
    for (int agent : {informed, u}) {
      for (int k = 0; k < nd; ++k) {
        std::vector<double> xs;
        for (std::size_t i : semi) xs.push_back(analyzed[i].full.price[k][agent]);
        out << ',' << format_number(mean_of(xs));
      }
    }
    const double ip = mean_of(informed_profit);
    const double up = mean_of(uninformed_profit);
    out << ',' << format_number(ip) << ',' << format_number(up) << ','
        << format_number(up > 0.0 ? ip / up - 1.0 : kNaN) << '\n';
  }
  check_written(out, path);
}

}  // namespace pricing
