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


// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance [--jobs N] [--seed S] [--full] [--only LIST] [--allow-fail LIST]
//
// The full-scale reproduction runs only with --full or PRICING_FULL_SCALE=1.
// Criteria in --allow-fail still report FAIL but leave the exit status alone.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pricing/cycle.hpp"
#include "pricing/deviation.hpp"
#include "pricing/engine.hpp"
#include "pricing/experiments.hpp"
#include "pricing/parallel.hpp"
#include "pricing/theory.hpp"
#include "support.hpp"

using namespace pricing;
using namespace pricing::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Status { kPass, kFail, kSkip } status = kPass;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Outcome::kPass : Outcome::kFail, std::move(detail)};
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

const MarketEnv kEnv = MarketEnv::baseline();

// ---- learning runs ---------------------------------------------------------

struct KeyRun {
  std::vector<SessionResult> results;
  std::vector<CycleAnalysis> analyses;
  std::map<PatternLabel, int> counts;

  double share(PatternLabel p) const {
    const auto it = counts.find(p);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / analyses.size();
  }
  PatternLabel modal() const {
    PatternLabel best = PatternLabel::kOthers;
    int n = -1;
    for (const auto& [p, c] : counts) {
      if (c > n) {
        n = c;
        best = p;
      }
    }
    return best;
  }
  std::string shares() const {
    std::string out;
    for (const auto& [p, c] : counts) {
      if (!out.empty()) out += ' ';
      out += std::string(to_string(p)) + '=' + fmt("%.2f", static_cast<double>(c) / analyses.size());
    }
    return out;
  }
};

struct RunSpec {
  double delta = 0.95;
  double beta = 2e-5;
  std::uint64_t window = 20000;
  int sessions = 100;
  std::array<Representation, kNumAgents> reps = {Representation::kFullMemory,
                                                 Representation::kFullMemory};
};

KeyRun run_key(const RunSpec& spec, std::uint64_t seed, int jobs) {
  ExperimentConfig c;
  c.sessions = spec.sessions;
  c.seed = seed;
  c.convergence_window = spec.window;
  c.schedule.beta = spec.beta;
  for (int i = 0; i < kNumAgents; ++i) {
    c.agents[i].delta = spec.delta;
    c.agents[i].representation = spec.reps[i];
  }
  std::vector<SessionConfig> configs;
  for (const SessionSpec& s : expand_sessions(c)) configs.push_back(s.config);
  const auto batch = run_batch(configs, jobs);

  KeyRun run;
  for (const BatchItem& item : batch) {
    if (!item.result) throw std::runtime_error(item.error);
    run.results.push_back(*item.result);
  }
  run.analyses.resize(run.results.size());
  const ClassifyOptions options = classify_options_for(spec.reps, DemandMode::stochastic());
  parallel_for(run.results.size(), jobs, [&](std::size_t i) {
    run.analyses[i] = analyze_session(run.results[i].policies, spec.reps, kEnv,
                                      run.results[i].final_node, options);
  });
  for (const CycleAnalysis& a : run.analyses) ++run.counts[a.pattern];
  return run;
}

// ---- criteria --------------------------------------------------------------

Outcome criterion1() {
  const std::vector<double> p = {0.5, 0, 0.5, 0.5, 0, 0.5, 0, 0.5, 0.5};
  const auto psi = stationary_distribution(p, 3);
  double err = 0.0;
  const double expected[3] = {0.25, 0.25, 0.5};
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(psi[i] - expected[i]));

  const PolicyPair pol = policies_from(kEnv, [](int theta, int, int, int next) {
    return theta == 1 && next == 0 ? PriceNode{0, 5, 5} : PriceNode{0, 1, 1};
  });
  const CycleAnalysis a = analyze_session(pol, full_memory(), kEnv, {0, 1, 1}, {});
  const StatePrices sp = conditional_avg_prices(a.cycle, kEnv);
  const bool exact = a.cycle.size() == 3 && sp.price[0][0] == 1.5 && sp.price[0][1] == 1.5 &&
                     sp.price[1][0] == 0.5 && sp.price[1][1] == 0.5;
  return pass_if(err < 1e-12 && exact,
                 "max |psi - (0.25,0.25,0.5)| = " + fmt("%.2e", err) +
                     (exact ? ", conditional prices exact" : ", conditional prices differ"));
}

// Brute-force best (p_L, p_H): p_H on a 1e-5 grid, p_L by bisection.
std::pair<double, double> theory_grid_search(double delta) {
  const double k = delta / (1 - delta);
  const auto g = [](double p, double theta) { return p * (theta - p) / 2; };
  double best_e = -1, best_l = 0, best_h = 0;
  for (int i = 0; i <= 500000; ++i) {
    const double ph = i * 1e-5;
    const double gh = g(ph, 10);
    double bound = 4.5;
    if (1 - k / 2 > 0) bound = std::min(bound, (k / 2) * gh / (1 - k / 2));
    double lo = 0, hi = 3;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid, 6) <= bound ? lo : hi) = mid;
    }
    const double gl = g(lo, 6);
    if (gh * (1 - k / 2) > (k / 2) * gl + 1e-9) continue;
    const double e = 0.5 * (gl + gh);
    if (e > best_e + 1e-12) {
      best_e = e;
      best_l = lo;
      best_h = ph;
    }
  }
  return {best_l, best_h};
}

Outcome criterion2() {
  const Cutoffs c = cutoffs(kEnv);
  const bool exact = c.delta_min == Rational(1, 2) && c.delta_c == Rational(7, 12) &&
                     c.delta_star == Rational(25, 42);
  const auto s = best_sustainable_prices(0.8, kEnv);
  const bool at08 = s.prices[0] == 3 && s.prices[1] == 5;

  int mismatches = 0;
  for (int i = 40; i <= 99; ++i) {
    const double delta = i / 100.0;
    const TheoryPrediction p = predict(delta, kEnv);
    const double dc = 7.0 / 12;
    bool ok;
    if (delta < 0.5) {
      ok = p.pattern == TheoryPattern::kCompetitive && p.p_low == 0 && p.p_high == 0;
    } else if (delta < dc) {
      ok = p.pattern == TheoryPattern::kCountercyclical && p.p_low > p.p_high;
    } else {
      ok = p.pattern == TheoryPattern::kProcyclical && p.p_high > p.p_low;
    }
    mismatches += !ok;
  }

  double worst = 0.0;
  for (double delta : {0.50, 0.55, 7.0 / 12, 25.0 / 42, 0.70, 0.96}) {
    const auto closed = best_sustainable_prices(delta, kEnv);
    const auto [pl, ph] = theory_grid_search(delta);
    worst = std::max({worst, std::abs(closed.prices[0] - pl), std::abs(closed.prices[1] - ph)});
  }
  std::ostringstream cut;
  cut << c.delta_min << ", " << c.delta_c << ", " << c.delta_star;
  return pass_if(exact && at08 && mismatches == 0 && worst < 1e-4,
                 "cutoffs " + cut.str() + "; delta=0.8 -> (" + fmt("%g", s.prices[0]) + ", " +
                     fmt("%g", s.prices[1]) + "); regime mismatches " +
                     std::to_string(mismatches) + "/60; max |closed - search| = " +
                     fmt("%.2e", worst));
}

Outcome criterion3() {
  const int m = kEnv.num_prices();
  double worst = 0.0;
  double at_three = 0.0;
  for (double delta : {0.0, 0.5, 0.95}) {
    AgentConfig c;
    c.delta = delta;
    const QMatrix q = init_q_random_opponent(kEnv, 0, c);
    const StateEncoder& enc = q.encoder();
    // Q0 per (theta, p), read from any state with that current demand.
    std::vector<std::vector<double>> q0(2, std::vector<double>(m));
    for (int k = 0; k < 2; ++k) {
      const StateIndex s = enc.encode(0, 0, 0, static_cast<DemandIndex>(k));
      for (int p = 0; p < m; ++p) q0[k][p] = q.at(s, p);
    }
    for (int k = 0; k < 2; ++k) {
      for (int p = 0; p < m; ++p) {
        double avg = 0.0;
        for (int r = 0; r < m; ++r) avg += profit(kEnv.price(p), kEnv.price(r), kEnv.theta(k), 0);
        avg /= m;
        const double rhs = avg + delta * 0.5 * (q0[0][p] + q0[1][p]);
        worst = std::max(worst, std::abs(q0[k][p] - rhs));
      }
    }
    if (delta == 0.95) at_three = q0[0][6];
  }
  return pass_if(worst < 1e-10 && std::abs(at_three - 120.272727) < 1e-6,
                 "max residual " + fmt("%.2e", worst) + " over 22 pairs x 3 deltas; Q0(L, 3) = " +
                     fmt("%.9f", at_three));
}

Outcome criterion4(std::uint64_t seed, int jobs) {
  constexpr int kTrials = 200;
  struct Trial {
    bool degree_ok = true, closed = true, fixed_point = true, mass_ok = true;
    bool walked = false, walk_ok = true;
    double walk_err = 0.0;
    std::size_t n = 0;
  };
  std::vector<Trial> trials(kTrials);
  parallel_for(kTrials, jobs, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    Trial& r = trials[t];
    // Alternate unrestricted policies with ones using two prices per agent.
    const PolicyPair pol = random_policies(kEnv, rng, t % 2 ? 2 : 0);
    const DynamicsGraph g = build_graph(pol, make_encoders(full_memory(), kEnv), kEnv);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      std::set<int> states;
      for (int k = 0; k < g.out_degree(); ++k) {
        states.insert(g.codec().decode(g.successor(v, static_cast<DemandIndex>(k))).theta);
      }
      r.degree_ok &= g.out_degree() == kEnv.num_states() &&
                     static_cast<int>(states.size()) == kEnv.num_states();
    }
    const NodeId start = rng.below(g.num_nodes());
    const PriceCycle c = find_price_cycle(g, g.codec().decode(start));
    r.n = c.size();
    for (NodeId v : c.ids) {
      for (int k = 0; k < g.out_degree(); ++k) {
        r.closed &= c.position(g.successor(v, static_cast<DemandIndex>(k))) < c.size();
      }
    }
    std::vector<double> mass(kEnv.num_states(), 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      double in = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) in += c.stationary[i] * c.p(i, j);
      r.fixed_point &= std::abs(in - c.stationary[j]) < 1e-12;
      mass[c.nodes[j].theta] += c.stationary[j];
    }
    for (int k = 0; k < kEnv.num_states(); ++k) {
      r.mass_ok &= std::abs(mass[k] - kEnv.probability(k)) < 1e-10;
    }
    if (c.size() <= 12) {
      r.walked = true;
      const auto freq = walk_frequencies(g, c, 10'000'000, rng);
      for (std::size_t j = 0; j < c.size(); ++j) {
        r.walk_err = std::max(r.walk_err, std::abs(freq[j] - c.stationary[j]));
      }
      r.walk_ok = r.walk_err < 1e-3;
    }
  });
  int bad = 0, walked = 0;
  double worst_walk = 0.0;
  std::size_t largest = 0;
  for (const Trial& r : trials) {
    bad += !(r.degree_ok && r.closed && r.fixed_point && r.mass_ok && r.walk_ok);
    walked += r.walked;
    worst_walk = std::max(worst_walk, r.walk_err);
    largest = std::max(largest, r.n);
  }
  return pass_if(bad == 0 && walked > 0,
                 std::to_string(kTrials) + " graphs, " + std::to_string(bad) +
                     " violations; " + std::to_string(walked) +
                     " cycles random-walked, max |freq - psi| = " + fmt("%.2e", worst_walk) +
                     "; largest cycle " + std::to_string(largest) + " nodes");
}

std::optional<double> table_rule(double theta, double own, double rival) {
  const double pm = theta / 2;
  if (pm < rival) return pm;
  if (own == rival) return own > 0.5 ? std::optional<double>(own - 0.5) : std::nullopt;
  if (own > rival) {
    if (rival > 0.5) return rival - 0.5;
    if (rival == 0.5) return 0.5;
    return 0.0;
  }
  if (rival - own > 0.5) return rival - 0.5;
  if (rival == 0.5) return 0.5;
  return std::nullopt;
}

Outcome criterion5() {
  int checked = 0, wrong = 0;
  for (int k = 0; k < 2; ++k) {
    for (int own = 0; own < 11; ++own) {
      for (int rival = 0; rival < 11; ++rival) {
        const auto d = most_profitable_deviation(kEnv, 0, k, own, rival);
        const auto e = table_rule(kEnv.theta(k), 0.5 * own, 0.5 * rival);
        ++checked;
        if (d.price.has_value() != e.has_value() || (e && kEnv.price(*d.price) != *e)) ++wrong;
      }
    }
  }
  bool competitive = true;
  for (PriceIndex p : {PriceIndex{0}, PriceIndex{1}}) {
    const PolicyPair pol = policies_from(kEnv, [p](int, int, int, int next) {
      return PriceNode{static_cast<DemandIndex>(next), p, p};
    });
    const CycleAnalysis a = analyze_session(pol, full_memory(), kEnv, {0, p, p}, {});
    const DeviationReport r = deviation_report(a.cycle, {pol, make_encoders(full_memory(), kEnv)},
                                               kEnv, 0.95, 1000, 10000, 1);
    competitive &= a.pattern == PatternLabel::kSymRigid && r.overall == 1.0;
  }
  return pass_if(wrong == 0 && competitive,
                 std::to_string(checked) + " combinations, " + std::to_string(wrong) +
                     " disagreements; competitive Sym-Rigid unprofitable probability " +
                     (competitive ? "1" : "below 1"));
}

Outcome criterion6(std::uint64_t seed, int jobs) {
  const KeyRun high = run_key({.delta = 0.95}, seed, jobs);
  const KeyRun mid = run_key({.delta = 0.66}, seed + 1, jobs);
  const KeyRun low = run_key({.delta = 0.52}, seed + 2, jobs);
  const bool a = high.modal() == PatternLabel::kProCycle && high.share(PatternLabel::kProCycle) > 0.40;
  const bool b = mid.share(PatternLabel::kCounterCycle) > mid.share(PatternLabel::kProCycle);
  const bool c = low.modal() == PatternLabel::kSymRigid;
  return pass_if(a && b && c, "d=0.95 [" + high.shares() + "] d=0.66 [" + mid.shares() +
                                  "] d=0.52 [" + low.shares() + "]");
}

Outcome criterion7(std::uint64_t seed, int jobs, bool enabled) {
  if (!enabled) return {Outcome::kSkip, "full scale disabled (use --full or PRICING_FULL_SCALE=1)"};
  const RunSpec base{.delta = 0.96, .beta = 4e-6, .window = 100000, .sessions = 1000};
  RunSpec low_spec = base;
  low_spec.delta = 0.66;
  const KeyRun high = run_key(base, seed, jobs);
  const KeyRun low = run_key(low_spec, seed + 1, jobs);

  // Agent-1 conditional prices and expected-profit ratio within a pattern.
  const auto stats = [](const KeyRun& run, PatternLabel p) {
    std::array<double, 3> sum{};
    int n = 0;
    for (const CycleAnalysis& a : run.analyses) {
      if (a.pattern != p) continue;
      sum[0] += a.metrics.avg_price[0][0];
      sum[1] += a.metrics.avg_price[1][0];
      sum[2] += a.metrics.expected_profit_ratio[0];
      ++n;
    }
    for (double& x : sum) x /= std::max(n, 1);
    return sum;
  };
  const auto hs = stats(high, PatternLabel::kProCycle);
  const auto ls = stats(low, PatternLabel::kCounterCycle);
  double iterations = 0.0;
  for (const auto* run : {&high, &low}) {
    for (const SessionResult& r : run->results) iterations += r.iterations;
  }
  iterations /= high.results.size() + low.results.size();

  const double pro = high.share(PatternLabel::kProCycle);
  const double counter = low.share(PatternLabel::kCounterCycle);
  const bool ok = std::abs(pro - 0.79) <= 0.05 && std::abs(hs[0] - 2.14) <= 0.15 &&
                  std::abs(hs[1] - 3.13) <= 0.15 && std::abs(hs[2] - 0.72) <= 0.05 &&
                  std::abs(counter - 0.60) <= 0.07 && std::abs(ls[0] - 1.44) <= 0.15 &&
                  std::abs(ls[1] - 0.77) <= 0.15 && std::abs(ls[2] - 0.33) <= 0.05 &&
                  std::abs(iterations / 2.68e6 - 1) <= 0.20;
  return pass_if(ok, "d=0.96 ProCycle " + fmt("%.3f", pro) + " prices " + fmt("%.2f", hs[0]) +
                         "/" + fmt("%.2f", hs[1]) + " ratio " + fmt("%.3f", hs[2]) +
                         "; d=0.66 CounterCycle " + fmt("%.3f", counter) + " prices " +
                         fmt("%.2f", ls[0]) + "/" + fmt("%.2f", ls[1]) + " ratio " +
                         fmt("%.3f", ls[2]) + "; mean iterations " + fmt("%.0f", iterations));
}

Outcome criterion8(std::uint64_t seed, int jobs) {
  RunSpec spec{.delta = 0.66};
  spec.reps = {Representation::kNoPriceMemory, Representation::kNoPriceMemory};
  const KeyRun no_price = run_key(spec, seed + 10, jobs);
  spec.reps = {Representation::kNoMemory, Representation::kNoMemory};
  const KeyRun no_memory = run_key(spec, seed + 11, jobs);
  spec.reps = {Representation::kFullMemory, Representation::kPricesOnly};
  const KeyRun asym = run_key(spec, seed + 12, jobs);
  const bool a = no_price.share(PatternLabel::kSymRigid) >= 0.95;
  const bool b = no_memory.share(PatternLabel::kSymRigid) >= 0.95;
  const bool c = asym.share(PatternLabel::kProCycle) == 0 && asym.share(PatternLabel::kCounterCycle) == 0;
  return pass_if(a && b && c, "NoPriceMemory [" + no_price.shares() + "] NoMemory [" +
                                  no_memory.shares() + "] asymmetric [" + asym.shares() + "]");
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = s.str();
  }
  return out;
}

Outcome criterion9(std::uint64_t seed) {
  const auto symmetric = parse_config(nlohmann::json::parse(R"({
    "run": {"sessions": 8, "convergence_window": 20000},
    "schedule": {"beta": 1e-4},
    "sweep": {"delta": [0.95, 0.66]},
    "analysis": {"deviation_repetitions": 100, "theory_deltas": {"from": 0.4, "to": 0.99, "step": 0.01}}
  })"));
  auto asymmetric = parse_config(nlohmann::json::parse(R"({
    "agents": [{"representation": "FullMemory"}, {"representation": "PricesOnly"}],
    "run": {"sessions": 8, "convergence_window": 20000},
    "schedule": {"beta": 1e-4}
  })"));
  const fs::path root = fs::temp_directory_path() / "pricing_acceptance_determinism";
  std::vector<std::map<std::string, std::string>> snaps;
  std::size_t files = 0;
  for (int jobs : {1, 8, 1}) {
    const fs::path dir = root / ("jobs" + std::to_string(jobs) + "_" + std::to_string(snaps.size()));
    fs::remove_all(dir);
    ExperimentConfig a = symmetric, b = asymmetric;
    a.seed = b.seed = seed;
    cmd_simulate(a, dir / "sym", jobs);
    cmd_analyze(a, dir / "sym", jobs);
    cmd_deviate(a, dir / "sym", jobs);
    cmd_theory(a, dir / "sym");
    cmd_simulate(b, dir / "asym", jobs);
    cmd_asymmetric_report(b, dir / "asym", jobs);
    snaps.push_back(snapshot(dir));
    files = snaps.back().size();
  }
  fs::remove_all(root);
  const bool same = snaps[0] == snaps[1] && snaps[0] == snaps[2];
  return pass_if(same, std::to_string(files) + " files compared across jobs=1, jobs=8 and a rerun" +
                           (same ? ": byte-identical" : ": differences found"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int jobs = default_parallelism();
  std::uint64_t seed = 20240601;
  bool full = false;
  std::vector<int> only;
  std::vector<int> allowed;
  app.add_option("--jobs", jobs, "worker threads");
  app.add_option("--seed", seed, "master seed");
  app.add_flag("--full", full, "run the full-scale reproduction");
  app.add_option("--only", only, "criteria to run");
  app.add_option("--allow-fail", allowed, "criteria whose failure is reported only");
  CLI11_PARSE(app, argc, argv);
  if (const char* env = std::getenv("PRICING_FULL_SCALE"); env && std::string(env) == "1") full = true;

  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"analysis oracles", [] { return criterion1(); }},
      {"theory exactness", [] { return criterion2(); }},
      {"initialization fixed point", [] { return criterion3(); }},
      {"structural invariants", [&] { return criterion4(seed, jobs); }},
      {"deviation rule truth table", [] { return criterion5(); }},
      {"desk-scale patterns", [&] { return criterion6(seed, jobs); }},
      {"full-scale reproduction", [&] { return criterion7(seed, jobs, full); }},
      {"representation ablations", [&] { return criterion8(seed, jobs); }},
      {"determinism", [&] { return criterion9(seed); }},
  };

  int failures = 0;
  std::vector<int> tolerated;
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Outcome::kFail, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Outcome::kPass ? "PASS" : o.status == Outcome::kFail ? "FAIL" : "SKIP";
    if (o.status == Outcome::kFail) {
      if (std::find(allowed.begin(), allowed.end(), id) != allowed.end()) {
        tolerated.push_back(id);
      } else {
        ++failures;
      }
    }
    std::printf("[%s] criterion %d %s: %s (%.1fs)\n", tag, id, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("summary: %d failing", failures);
  if (!tolerated.empty()) {
    std::printf(", %zu allowed to fail:", tolerated.size());
    for (int id : tolerated) std::printf(" %d", id);
  }
  std::printf("\n");
  return failures == 0 ? 0 : 1;
}
