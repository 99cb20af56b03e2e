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


#include <doctest.h>

#include <vector>

#include "pricing/cycle.hpp"
#include "pricing/engine.hpp"

using namespace pricing;

namespace {

SessionConfig quick(std::uint64_t seed) {
  SessionConfig c;
  c.seed = seed;
  c.schedule.beta = 2e-4;
  c.convergence_window = 10000;
  c.max_iterations = 5'000'000;
  return c;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("convergence counter") {
  PolicyPair a = {Policy{1, 2}, Policy{3, 4}};
  PolicyPair b = a;
  auto step = check_convergence(a, b, 4, 5);
  CHECK(step.counter == 5);
  CHECK(step.done);
  b[1][0] = 0;
  step = check_convergence(a, b, 4, 5);
  CHECK(step.counter == 0);
  CHECK_FALSE(step.done);
  CHECK(check_convergence(a, a, 0, 1).done);
}

TEST_CASE("demand mode labels") {
  CHECK(DemandMode::stochastic().label() == "stochastic");
  CHECK(DemandMode::fixed_at(1).label() == "fixed:1");
  CHECK(parse_demand_mode("fixed:1") == DemandMode::fixed_at(1));
  CHECK(parse_demand_mode("stochastic") == DemandMode::stochastic());
  CHECK_THROWS(parse_demand_mode("sometimes"));
}

TEST_CASE("session converges and is reproducible") {
  SessionConfig c = quick(11);
  c.keep_q = true;
  const SessionResult a = run_session(c);
  const SessionResult b = run_session(c);
  CHECK(a.converged);
  CHECK(a.iterations >= c.convergence_window);
  CHECK(a.policies == b.policies);
  CHECK(a.iterations == b.iterations);
  CHECK(a.final_node == b.final_node);
  REQUIRE(a.final_q.has_value());
  CHECK((*a.final_q)[0] == (*b.final_q)[0]);
  for (int i = 0; i < kNumAgents; ++i) {
    CHECK(limit_strategy((*a.final_q)[i]) == a.policies[i]);
    CHECK(a.policies[i].size() == 484);
  }

  const SessionResult other = run_session(quick(12));
  CHECK((other.policies != a.policies || other.iterations != a.iterations));
}

TEST_CASE("iteration cap stops unconverged sessions") {
  SessionConfig c = quick(3);
  c.schedule.beta = 0.0;
  c.convergence_window = 1000;
  c.max_iterations = 5000;
  const SessionResult r = run_session(c);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 5000);
}

TEST_CASE("invalid session configs are rejected") {
  SessionConfig c = quick(1);
  c.convergence_window = 0;
  CHECK_THROWS(validate(c));
  c = quick(1);
  c.max_iterations = 10;
  CHECK_THROWS(validate(c));
  c = quick(1);
  c.demand_mode = DemandMode::fixed_at(5);
  CHECK_THROWS(validate(c));
}

TEST_CASE("batch results do not depend on parallelism") {
  std::vector<SessionConfig> configs;
  for (std::uint64_t s = 0; s < 6; ++s) configs.push_back(quick(100 + s));
  configs[2].convergence_window = 0;
  const auto serial = run_batch(configs, 1);
  const auto parallel = run_batch(configs, 4);
  REQUIRE(serial.size() == 6);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    REQUIRE(serial[i].result.has_value() == parallel[i].result.has_value());
    if (!serial[i].result) {
      CHECK_FALSE(serial[i].error.empty());
      continue;
    }
    CHECK(serial[i].result->policies == parallel[i].result->policies);
    CHECK(serial[i].result->iterations == parallel[i].result->iterations);
  }
  CHECK_FALSE(serial[2].result.has_value());
}

TEST_CASE("empty batch") { CHECK(run_batch({}, 4).empty()); }

TEST_CASE("fixed demand ignores the unused state") {
  SessionConfig a = quick(8);
  a.demand_mode = DemandMode::fixed_at(0);
  a.agents[0].representation = a.agents[1].representation = Representation::kPricesOnly;
  SessionConfig b = a;
  b.env = MarketEnv({6, 14}, {0.3, 0.7}, {0, 0}, PriceGrid(0, 5, 11));
  const SessionResult ra = run_session(a);
  const SessionResult rb = run_session(b);
  CHECK(ra.policies == rb.policies);
  CHECK(ra.iterations == rb.iterations);
}

TEST_CASE("two-price single-state game settles on one node") {
  SessionConfig c;
  c.env = MarketEnv({6}, {1.0}, {0, 0}, PriceGrid(1, 3, 2));
  c.agents[0].representation = c.agents[1].representation = Representation::kPricesOnly;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    c.seed = seed;
    const SessionResult r = run_session(c);
    REQUIRE(r.converged);
    const CycleAnalysis a = analyze_session(r.policies, {Representation::kPricesOnly,
                                                         Representation::kPricesOnly},
                                            c.env, r.final_node, {AnalysisMode::kFixedDemand});
    CHECK(a.cycle.size() == 1);
  }
}

TEST_CASE("fixed-demand benchmark") {
  SessionConfig base = quick(0);
  const auto batches = run_fixed_demand_benchmark(base, {1, 2}, 2);
  REQUIRE(batches.size() == 2);
  for (const auto& batch : batches) {
    REQUIRE(batch.size() == 2);
    for (const auto& item : batch) {
      REQUIRE(item.result.has_value());
      CHECK(item.result->final_node.theta == 0);
      CHECK(item.result->policies[0].size() == 121);
    }
  }
}

}  // TEST_SUITE
